import { REQUIRED_COLUMNS, ResultRow } from "../src/csv.js";

export function row(over: Partial<ResultRow> = {}): ResultRow {
  return {
    experiment_id: "abc123def456",
    seed: 7,
    regime: "additive",
    d: 200,
    a: 2.0,
    B: 1,
    N: 100,
    gamma: 0.1,
    eps_d: 0.01,
    eps_l: 0.0,
    eps_p: 0.0,
    eps_a: 0.0,
    eps_o: 0.0,
    step: 100,
    risk_last: 0.5,
    risk_avg: 0.25,
    status: "ok",
    ...over,
  };
}

export function toCsv(rows: ResultRow[]): string {
  const lines = [REQUIRED_COLUMNS.join(",")];
  for (const r of rows) {
    lines.push(REQUIRED_COLUMNS.map((c) => String(r[c])).join(","));
  }
  return lines.join("\n") + "\n";
}

function cellRows(
  regime: string,
  eps: number,
  d: number,
  seeds: number,
  steps: number[],
): ResultRow[] {
  const rows: ResultRow[] = [];
  for (let s = 0; s < seeds; s++) {
    for (const step of steps) {
      rows.push(
        row({
          experiment_id: `${regime[0]}-${eps}-${d}`,
          regime,
          eps_d: eps,
          d,
          seed: 1000 + s,
          step,
          risk_avg: step / 1000 + eps * 5 + d * 1e-4 + s * 0.001,
        }),
      );
    }
  }
  return rows;
}

/** The canonical pair of sweeps: ε ∈ {.001,.005,.01} at d=200, d ∈ {50..400} at ε=.01. */
export function twoSweeps(opts: { seeds?: number; steps?: number[] } = {}): ResultRow[] {
  const seeds = opts.seeds ?? 3;
  const steps = opts.steps ?? [100];
  const rows: ResultRow[] = [];
  for (const regime of ["multiplicative", "additive"]) {
    for (const eps of [0.001, 0.005, 0.01]) {
      rows.push(...cellRows(regime, eps, 200, seeds, steps));
    }
    for (const d of [50, 100, 400]) {
      rows.push(...cellRows(regime, 0.01, d, seeds, steps));
    }
    // the shared (ε=0.01, d=200) cell appears a second time, as it would
    // when two sweep CSVs are concatenated
    rows.push(...cellRows(regime, 0.01, 200, seeds, steps));
  }
  return rows;
}
