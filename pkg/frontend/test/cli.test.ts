import { mkdtemp, readdir, readFile, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { main } from "../src/cli.js";
import { REQUIRED_COLUMNS } from "../src/csv.js";
import { toCsv, twoSweeps } from "./fixtures.js";

let dir: string;
let errors: string[];

beforeEach(async () => {
  dir = await mkdtemp(join(tmpdir(), "figures-"));
  errors = [];
  vi.spyOn(console, "error").mockImplementation((msg) => errors.push(String(msg)));
  vi.spyOn(console, "log").mockImplementation(() => {});
});

afterEach(() => {
  vi.restoreAllMocks();
});

async function writeSweep(name: string, text: string): Promise<string> {
  const path = join(dir, name);
  await writeFile(path, text);
  return path;
}

describe("figures CLI", () => {
  it("writes one SVG per panel", async () => {
    const csv = await writeSweep("results.csv", toCsv(twoSweeps()));
    const out = join(dir, "figs");
    const code = await main(["--csv", csv, "--out", out]);
    expect(code).toBe(0);
    const files = (await readdir(out)).sort();
    expect(files).toEqual([
      "dimension_additive.svg",
      "dimension_multiplicative.svg",
      "epsilon_additive.svg",
      "epsilon_multiplicative.svg",
    ]);
    const svg = await readFile(join(out, "epsilon_additive.svg"), "utf8");
    expect(svg).toContain("<svg");
  });

  it("renders PNG when asked", async () => {
    const csv = await writeSweep("results.csv", toCsv(twoSweeps()));
    const out = join(dir, "figs");
    const code = await main(["--csv", csv, "--out", out, "--format", "png"]);
    expect(code).toBe(0);
    const png = await readFile(join(out, "epsilon_additive.png"));
    expect([...png.subarray(0, 4)]).toEqual([0x89, 0x50, 0x4e, 0x47]);
  });

  it("fails cleanly on a header-only CSV, writing nothing", async () => {
    const csv = await writeSweep("empty.csv", REQUIRED_COLUMNS.join(",") + "\n");
    const out = join(dir, "figs");
    const code = await main(["--csv", csv, "--out", out]);
    expect(code).toBe(1);
    expect(errors.join("\n")).toMatch(/empty groups/);
    await expect(readdir(out)).rejects.toThrow(); // directory never created
  });

  it("fails cleanly on missing columns", async () => {
    const csv = await writeSweep("bad.csv", "a,b\n1,2\n");
    const code = await main(["--csv", csv, "--out", join(dir, "figs")]);
    expect(code).toBe(1);
    expect(errors.join("\n")).toMatch(/missing columns/);
  });

  it("fails cleanly on a nonexistent file", async () => {
    const code = await main(["--csv", join(dir, "nope.csv"), "--out", dir]);
    expect(code).toBe(1);
    expect(errors.join("\n")).toMatch(/cannot read/);
  });

  it("rejects unknown formats", async () => {
    const csv = await writeSweep("results.csv", toCsv(twoSweeps()));
    await expect(
      main(["--csv", csv, "--out", dir, "--format", "gif"]),
    ).rejects.toThrow();
  });
});
