import Papa from "papaparse";

/** Column schema of the sweep/trajectory CSVs produced by the quantsgd CLI. */
export const REQUIRED_COLUMNS = [
  "experiment_id",
  "seed",
  "regime",
  "d",
  "a",
  "B",
  "N",
  "gamma",
  "eps_d",
  "eps_l",
  "eps_p",
  "eps_a",
  "eps_o",
  "step",
  "risk_last",
  "risk_avg",
  "status",
] as const;

export interface ResultRow {
  experiment_id: string;
  seed: number;
  regime: string;
  d: number;
  a: number;
  B: number;
  N: number;
  gamma: number;
  eps_d: number;
  eps_l: number;
  eps_p: number;
  eps_a: number;
  eps_o: number;
  step: number;
  risk_last: number;
  risk_avg: number;
  status: string;
}

export class CsvFormatError extends Error {}

const STRING_COLUMNS = new Set(["experiment_id", "regime", "status"]);

/**
 * Parse a results CSV into typed rows.
 *
 * Rejects files missing any schema column.  `risk_last`/`risk_avg` may be
 * `nan` (diverged trials); every other numeric field must be finite.
 */
export function parseResults(text: string): ResultRow[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  const missing = REQUIRED_COLUMNS.filter((c) => !fields.includes(c));
  if (missing.length > 0) {
    throw new CsvFormatError(`missing columns: ${missing.join(", ")}`);
  }
  if (parsed.errors.length > 0) {
    const err = parsed.errors[0];
    throw new CsvFormatError(`malformed CSV: ${err.message} (row ${err.row})`);
  }
  return parsed.data.map((rec, i) => {
    const row: Record<string, string | number> = {};
    for (const col of REQUIRED_COLUMNS) {
      if (STRING_COLUMNS.has(col)) {
        row[col] = rec[col];
        continue;
      }
      const value = Number(rec[col]);
      const nanOk = col === "risk_last" || col === "risk_avg";
      if (!Number.isFinite(value) && !nanOk) {
        throw new CsvFormatError(`row ${i + 1}: ${col} is not a number (${rec[col]!})`);
      }
      row[col] = value;
    }
    return row as unknown as ResultRow;
  });
}
