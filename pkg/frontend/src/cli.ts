#!/usr/bin/env node
import { realpathSync } from "node:fs";
import { mkdir, readFile, writeFile } from "node:fs/promises";
import { join } from "node:path";
import { pathToFileURL } from "node:url";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { CsvFormatError } from "./csv.js";
import { EmptyGroupsError } from "./panels.js";
import { ImageFormat, renderFigures } from "./index.js";

/** `figures --csv <path> --out <dir> [--format png|svg]`; returns the exit code. */
export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .usage("figures --csv <path> --out <dir> [--format png|svg]")
    .option("csv", {
      type: "string",
      demandOption: true,
      describe: "results CSV written by a quantsgd sweep or simulate run",
    })
    .option("out", {
      type: "string",
      demandOption: true,
      describe: "directory the panel images are written to",
    })
    .option("format", {
      choices: ["png", "svg"] as const,
      default: "svg" as ImageFormat,
      describe: "image format",
    })
    .strict()
    .fail((msg) => {
      throw new Error(msg);
    })
    .parse();

  let text: string;
  try {
    text = await readFile(args.csv, "utf8");
  } catch (err) {
    console.error(`cannot read ${args.csv}: ${(err as Error).message}`);
    return 1;
  }

  let files;
  try {
    files = await renderFigures(text, args.format);
  } catch (err) {
    if (err instanceof CsvFormatError || err instanceof EmptyGroupsError) {
      console.error(err.message);
      return 1;
    }
    throw err;
  }

  await mkdir(args.out, { recursive: true });
  for (const file of files) {
    const path = join(args.out, file.name);
    await writeFile(path, file.data);
    console.log(path);
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(realpathSync(process.argv[1])).href;

if (invokedDirectly) {
  main(hideBin(process.argv))
    .then((code) => {
      process.exitCode = code;
    })
    .catch((err) => {
      console.error(err instanceof Error ? err.message : String(err));
      process.exitCode = 1;
    });
}
