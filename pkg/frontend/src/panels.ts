import { ResultRow } from "./csv.js";
import { summarize } from "./stats.js";

export type XAxis = "epsilon" | "dimension";
export type Regime = "multiplicative" | "additive";

export const PANEL_ORDER: ReadonlyArray<[XAxis, Regime]> = [
  ["epsilon", "multiplicative"],
  ["epsilon", "additive"],
  ["dimension", "multiplicative"],
  ["dimension", "additive"],
];

export interface CurvePoint {
  step: number;
  median: number;
  q25: number;
  q75: number;
  n: number;
}

export interface Curve {
  /** The swept value this curve belongs to (an ε level or a dimension). */
  value: number;
  label: string;
  points: CurvePoint[];
}

export interface Panel {
  xAxis: XAxis;
  regime: Regime;
  /** The variable held fixed while the other is swept, e.g. d = 200. */
  fixed: { name: string; value: number };
  curves: Curve[];
  name: string;
  title: string;
  subtitle: string;
}

export class EmptyGroupsError extends Error {}

function formatValue(v: number): string {
  return String(v);
}

/**
 * Group one regime's rows into median/IQR curves over the checkpoint axis,
 * one curve per swept value.
 *
 * A CSV may hold several sweeps at once (e.g. an ε sweep at fixed d next to
 * a d sweep at fixed ε), so the non-swept variable is pinned first: we keep
 * the value of the other variable under which the swept one actually varies
 * the most (ties broken towards the smaller value).  Cells shared between
 * sweeps are deduplicated by (experiment_id, seed, step).
 */
function buildPanel(rows: ResultRow[], xAxis: XAxis, regime: Regime): Panel | null {
  const sweepKey = xAxis === "epsilon" ? "eps_d" : "d";
  const holdKey = xAxis === "epsilon" ? "d" : "eps_d";

  const candidates = rows.filter(
    (r) => r.regime === regime && r.status === "ok" && Number.isFinite(r.risk_avg),
  );
  if (candidates.length === 0) {
    return null;
  }

  const sweptByHold = new Map<number, Set<number>>();
  for (const r of candidates) {
    const hold = r[holdKey];
    if (!sweptByHold.has(hold)) {
      sweptByHold.set(hold, new Set());
    }
    sweptByHold.get(hold)!.add(r[sweepKey]);
  }
  let fixedValue = NaN;
  let bestCount = -1;
  for (const [hold, swept] of sweptByHold) {
    if (swept.size > bestCount || (swept.size === bestCount && hold < fixedValue)) {
      fixedValue = hold;
      bestCount = swept.size;
    }
  }
  if (bestCount < 2) {
    return null; // nothing is actually swept on this axis
  }

  const panelRows = candidates.filter((r) => r[holdKey] === fixedValue);
  const seen = new Set<string>();
  const byValue = new Map<number, ResultRow[]>();
  for (const r of panelRows) {
    const key = `${r.experiment_id}:${r.seed}:${r.step}`;
    if (seen.has(key)) {
      continue;
    }
    seen.add(key);
    if (!byValue.has(r[sweepKey])) {
      byValue.set(r[sweepKey], []);
    }
    byValue.get(r[sweepKey])!.push(r);
  }

  const sweptLabel = xAxis === "epsilon" ? "ε" : "d";
  const curves: Curve[] = [...byValue.keys()]
    .sort((a, b) => a - b)
    .map((value) => {
      const byStep = new Map<number, number[]>();
      for (const r of byValue.get(value)!) {
        if (!byStep.has(r.step)) {
          byStep.set(r.step, []);
        }
        byStep.get(r.step)!.push(r.risk_avg);
      }
      const points = [...byStep.keys()]
        .sort((a, b) => a - b)
        .map((step) => ({ step, ...summarize(byStep.get(step)!) }));
      return { value, label: `${sweptLabel} = ${formatValue(value)}`, points };
    });

  const fixedName = xAxis === "epsilon" ? "d" : "ε";
  return {
    xAxis,
    regime,
    fixed: { name: fixedName, value: fixedValue },
    curves,
    name: `${xAxis}_${regime}`,
    title: regime,
    subtitle: `varying ${sweptLabel} at ${fixedName} = ${formatValue(fixedValue)}`,
  };
}

/**
 * Build every panel the CSV supports, in canonical order.
 *
 * A panel exists when its regime has at least two distinct swept values on
 * its axis; a combined ε-sweep + d-sweep CSV yields four panels, a single
 * sweep yields two.  No renderable panel at all is an error.
 */
export function buildPanels(rows: ResultRow[]): Panel[] {
  const panels = PANEL_ORDER.map(([xAxis, regime]) => buildPanel(rows, xAxis, regime))
    .filter((p): p is Panel => p !== null);
  if (panels.length === 0) {
    throw new EmptyGroupsError(
      "empty groups: no regime in the CSV has two or more swept values to plot",
    );
  }
  return panels;
}
