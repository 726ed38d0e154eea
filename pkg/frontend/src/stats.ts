/**
 * Quantile with linear interpolation on (n-1)p, the same convention the
 * harness uses for its summary CSV, so medians drawn here agree with
 * `summary.csv` exactly.
 */
export function quantile(values: number[], p: number): number {
  if (values.length === 0) {
    throw new Error("quantile of empty list");
  }
  const sorted = [...values].sort((a, b) => a - b);
  const h = (sorted.length - 1) * p;
  const lo = Math.floor(h);
  const hi = Math.min(lo + 1, sorted.length - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

export interface Summary {
  median: number;
  q25: number;
  q75: number;
  n: number;
}

export function summarize(values: number[]): Summary {
  return {
    median: quantile(values, 0.5),
    q25: quantile(values, 0.25),
    q75: quantile(values, 0.75),
    n: values.length,
  };
}
