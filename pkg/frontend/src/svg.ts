import { Curve, Panel } from "./panels.js";

export interface RenderOptions {
  width?: number;
  height?: number;
}

const MARGIN = { top: 58, right: 18, bottom: 52, left: 74 };

// Paul Tol's bright palette: distinguishable in print and for colour-blind readers.
const PALETTE = [
  "#4477aa",
  "#ee6677",
  "#228833",
  "#ccbb44",
  "#66ccee",
  "#aa3377",
  "#bbbbbb",
];

const FONT = "Helvetica, Arial, sans-serif";

function px(v: number): string {
  const r = Math.round(v * 100) / 100;
  return String(r === 0 ? 0 : r);
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Evenly spaced "nice" ticks (1/2/5 steps) covering [lo, hi]. */
export function linearTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const raw = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm <= 1 ? 1 : norm <= 2 ? 2 : norm <= 5 ? 5 : 10) * mag;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

/** Exponents k such that 10^k lies inside the log10-domain [lMin, lMax]. */
export function decadeTicks(lMin: number, lMax: number): number[] {
  const ticks: number[] = [];
  for (let k = Math.ceil(lMin - 1e-9); k <= lMax + 1e-9; k++) {
    ticks.push(k);
  }
  return ticks;
}

function fmtDecade(k: number): string {
  if (k >= -2 && k <= 3) {
    return String(Math.pow(10, k));
  }
  return `1e${k}`;
}

function fmtLinear(v: number): string {
  if (v === 0) {
    return "0";
  }
  if (Math.abs(v) >= 1e4) {
    return v.toExponential(0).replace("+", "");
  }
  return String(Math.round(v * 1e6) / 1e6);
}

interface Frame {
  x: (step: number) => number;
  y: (risk: number) => number;
  xTicks: number[];
  yDecades: number[];
  yFloor: number;
}

function makeFrame(curves: Curve[], plotX: number, plotY: number, plotW: number, plotH: number): Frame {
  const steps: number[] = [];
  const positives: number[] = [];
  for (const c of curves) {
    for (const p of c.points) {
      steps.push(p.step);
      for (const v of [p.q25, p.median, p.q75]) {
        if (v > 0) {
          positives.push(v);
        }
      }
    }
  }
  const xMin = Math.min(...steps);
  const xMax = Math.max(...steps);
  const lo = positives.length ? Math.min(...positives) : 1e-3;
  const hi = positives.length ? Math.max(...positives) : 1;
  let lMin = Math.log10(lo);
  let lMax = Math.log10(hi);
  if (lMax - lMin < 1e-9) {
    lMin -= 0.4;
    lMax += 0.4;
  } else {
    const pad = 0.06 * (lMax - lMin);
    lMin -= pad;
    lMax += pad;
  }
  const x = (step: number) =>
    xMax === xMin
      ? plotX + plotW / 2
      : plotX + ((step - xMin) / (xMax - xMin)) * plotW;
  const yFloor = Math.pow(10, lMin);
  const y = (risk: number) => {
    const l = Math.log10(Math.max(risk, yFloor));
    return plotY + plotH - ((l - lMin) / (lMax - lMin)) * plotH;
  };
  return {
    x,
    y,
    xTicks: xMax === xMin ? [xMin] : linearTicks(xMin, xMax),
    yDecades: decadeTicks(lMin, lMax),
    yFloor,
  };
}

function polyline(points: Array<[number, number]>): string {
  return points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${px(x)} ${px(y)}`)
    .join("");
}

function curveMarkup(curve: Curve, color: string, frame: Frame): string {
  const parts: string[] = [];
  if (curve.points.length === 1) {
    const p = curve.points[0];
    const cx = frame.x(p.step);
    parts.push(
      `<line x1="${px(cx)}" y1="${px(frame.y(p.q25))}" x2="${px(cx)}" y2="${px(frame.y(p.q75))}" stroke="${color}" stroke-width="2" opacity="0.55"/>`,
      `<circle cx="${px(cx)}" cy="${px(frame.y(p.median))}" r="4" fill="${color}"/>`,
    );
    return parts.join("\n");
  }
  const upper: Array<[number, number]> = curve.points.map((p) => [frame.x(p.step), frame.y(p.q75)]);
  const lower: Array<[number, number]> = [...curve.points]
    .reverse()
    .map((p) => [frame.x(p.step), frame.y(p.q25)]);
  parts.push(
    `<path d="${polyline(upper)}${polyline(lower).replace(/^M/, "L")}Z" fill="${color}" opacity="0.18" stroke="none"/>`,
  );
  const median: Array<[number, number]> = curve.points.map((p) => [frame.x(p.step), frame.y(p.median)]);
  parts.push(
    `<path d="${polyline(median)}" fill="none" stroke="${color}" stroke-width="1.8"/>`,
  );
  return parts.join("\n");
}

/**
 * Render one panel as a standalone SVG document.
 *
 * Log-scale risk over a linear iteration axis, the median as a solid line
 * and the interquartile range as a shaded band, one colour per swept value.
 * Pure string assembly — identical input yields byte-identical output.
 */
export function renderPanelSvg(panel: Panel, options: RenderOptions = {}): string {
  const width = options.width ?? 560;
  const height = options.height ?? 420;
  const plotX = MARGIN.left;
  const plotY = MARGIN.top;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const frame = makeFrame(panel.curves, plotX, plotY, plotW, plotH);

  const body: string[] = [];
  body.push(`<rect x="0" y="0" width="${width}" height="${height}" fill="white"/>`);
  body.push(
    `<text x="${px(plotX)}" y="24" font-size="15" font-weight="bold" fill="#222">${esc(panel.title)}</text>`,
    `<text x="${px(plotX)}" y="42" font-size="12" fill="#555">${esc(panel.subtitle)}</text>`,
  );

  for (const k of frame.yDecades) {
    const yy = frame.y(Math.pow(10, k));
    body.push(
      `<line x1="${px(plotX)}" y1="${px(yy)}" x2="${px(plotX + plotW)}" y2="${px(yy)}" stroke="#e5e5e5" stroke-width="1"/>`,
      `<text x="${px(plotX - 8)}" y="${px(yy + 3.5)}" font-size="11" fill="#444" text-anchor="end">${fmtDecade(k)}</text>`,
    );
  }
  for (const t of frame.xTicks) {
    const xx = frame.x(t);
    body.push(
      `<line x1="${px(xx)}" y1="${px(plotY + plotH)}" x2="${px(xx)}" y2="${px(plotY + plotH + 5)}" stroke="#444" stroke-width="1"/>`,
      `<text x="${px(xx)}" y="${px(plotY + plotH + 19)}" font-size="11" fill="#444" text-anchor="middle">${fmtLinear(t)}</text>`,
    );
  }
  body.push(
    `<rect x="${px(plotX)}" y="${px(plotY)}" width="${px(plotW)}" height="${px(plotH)}" fill="none" stroke="#444" stroke-width="1"/>`,
    `<text x="${px(plotX + plotW / 2)}" y="${px(height - 12)}" font-size="12" fill="#222" text-anchor="middle">iteration</text>`,
    `<text transform="translate(18 ${px(plotY + plotH / 2)}) rotate(-90)" font-size="12" fill="#222" text-anchor="middle">excess risk of averaged iterate</text>`,
  );

  panel.curves.forEach((curve, i) => {
    body.push(curveMarkup(curve, PALETTE[i % PALETTE.length], frame));
  });

  const legendX = plotX + plotW - 10;
  panel.curves.forEach((curve, i) => {
    const ly = plotY + 14 + 16 * i;
    const color = PALETTE[i % PALETTE.length];
    body.push(
      `<line x1="${px(legendX - 150)}" y1="${px(ly)}" x2="${px(legendX - 128)}" y2="${px(ly)}" stroke="${color}" stroke-width="2.5"/>`,
      `<text x="${px(legendX - 122)}" y="${px(ly + 3.5)}" font-size="11" fill="#222">${esc(curve.label)}</text>`,
    );
  });

  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="${FONT}">`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}
