import { buildPanels, Panel } from "./panels.js";
import { parseResults } from "./csv.js";
import { renderPanelSvg, RenderOptions } from "./svg.js";

export { CsvFormatError, parseResults, REQUIRED_COLUMNS } from "./csv.js";
export type { ResultRow } from "./csv.js";
export { buildPanels, EmptyGroupsError, PANEL_ORDER } from "./panels.js";
export type { Curve, CurvePoint, Panel, Regime, XAxis } from "./panels.js";
export { renderPanelSvg, linearTicks, decadeTicks } from "./svg.js";
export { quantile, summarize } from "./stats.js";

export type ImageFormat = "svg" | "png";

export interface FigureFile {
  name: string;
  panel: Panel;
  data: string | Buffer;
}

/** Rasterize an SVG document; pulls in the native renderer on first use. */
export async function svgToPng(svg: string, scale = 2): Promise<Buffer> {
  const { Resvg } = await import("@resvg/resvg-js");
  const resvg = new Resvg(svg, {
    fitTo: { mode: "zoom", value: scale },
    font: { loadSystemFonts: true },
  });
  return resvg.render().asPng();
}

/**
 * Turn a results CSV into rendered figure files, one per panel the data
 * supports (risk against iteration, median line + IQR band, one curve per
 * swept ε level or dimension, split by noise regime).
 *
 * Throws `CsvFormatError` on schema problems and `EmptyGroupsError` when the
 * CSV has no sweep to plot (e.g. a header-only file); nothing is written in
 * either case — rendering is pure until the caller persists the buffers.
 */
export async function renderFigures(
  csvText: string,
  format: ImageFormat = "svg",
  options: RenderOptions = {},
): Promise<FigureFile[]> {
  const panels = buildPanels(parseResults(csvText));
  const files: FigureFile[] = [];
  for (const panel of panels) {
    const svg = renderPanelSvg(panel, options);
    files.push({
      name: `${panel.name}.${format}`,
      panel,
      data: format === "svg" ? svg : await svgToPng(svg),
    });
  }
  return files;
}
