/**
 * The five figure kinds, each a pure function from a parsed table to an SVG
 * string. Residual/objective curves use a log y-axis.
 */

import { CsvError, Table, column, columnsByPrefix } from "./csv.js";
import { Figure, extent, heatColor, linearScale, logScale } from "./svg.js";
import { SERIES_COLORS } from "./style.js";

export type FigureKind = "controls" | "dynamics" | "residuals" | "spectrum" | "wigner";

export function renderControls(table: Table): string {
  const t = column(table, "t");
  const channels = columnsByPrefix(table, "c_clamped_");
  if (channels.length === 0) {
    throw new CsvError("missing column c_clamped_1 (no control channels found)");
  }
  const fig = new Figure("Control fields");
  const xs = linearScale(extent(t), [fig.x0, fig.x1]);
  const allValues = channels.flatMap((c) => c.values);
  const ys = linearScale(extent(allValues), [fig.y0, fig.y1]);
  fig.axes(xs, ys, "t", "clamped control");
  const legend: { label: string; color: string }[] = [];
  channels.forEach((ch, i) => {
    const color = SERIES_COLORS[i % SERIES_COLORS.length];
    fig.line(xs, ys, t, ch.values, color);
    legend.push({ label: `site ${ch.name.replace("c_clamped_", "")}`, color });
  });
  fig.legend(legend);
  return fig.render();
}

export function renderDynamics(table: Table): string {
  const t = column(table, "t");
  const series = [
    { label: "fidelity", values: column(table, "fidelity") },
    { label: "negativity (head)", values: column(table, "negativity_head") },
    { label: "negativity (tail)", values: column(table, "negativity_tail") },
  ];
  const fig = new Figure("Fidelity and entanglement dynamics");
  const xs = linearScale(extent(t), [fig.x0, fig.x1]);
  const ys = linearScale(extent(series.flatMap((s) => s.values)), [fig.y0, fig.y1]);
  fig.axes(xs, ys, "t", "value");
  const legend: { label: string; color: string }[] = [];
  series.forEach((s, i) => {
    const color = SERIES_COLORS[i % SERIES_COLORS.length];
    fig.line(xs, ys, t, s.values, color);
    legend.push({ label: s.label, color });
  });
  fig.legend(legend);
  return fig.render();
}

export function renderResiduals(table: Table): string {
  const iter = column(table, "iteration");
  const j = column(table, "j");
  const series = [{ label: "J", values: j }, ...columnsByPrefix(table, "f_residual_").map((c) => ({
    label: c.name.replace("f_residual_", "F_r "),
    values: c.values,
  })), ...columnsByPrefix(table, "n_residual_").map((c) => ({
    label: c.name.replace("n_residual_", "N_r "),
    values: c.values,
  }))];
  const floor = 1e-16;
  const positive = series.flatMap((s) => s.values).filter((v) => v > floor);
  if (positive.length === 0) {
    throw new CsvError("residual series contain no positive values to plot on a log axis");
  }
  const fig = new Figure("Objective and residuals vs iteration");
  const xs = linearScale(extent(iter), [fig.x0, fig.x1]);
  const ys = logScale(extent(positive), [fig.y0, fig.y1]);
  fig.axes(xs, ys, "iteration", "residual (log scale)", true);
  const legend: { label: string; color: string }[] = [];
  series.forEach((s, i) => {
    const color = SERIES_COLORS[i % SERIES_COLORS.length];
    const pts = s.values.map((v, k) => [iter[k], Math.max(v, floor)] as const).filter(([, v]) => v > floor);
    fig.line(xs, ys, pts.map(([a]) => a), pts.map(([, b]) => b), color);
    legend.push({ label: s.label, color });
  });
  fig.legend(legend);
  return fig.render();
}

export function renderSpectrum(table: Table): string {
  const channels = column(table, "channel");
  const bins = columnsByPrefix(table, "bin_");
  if (bins.length === 0) {
    throw new CsvError("missing column bin_0 (no spectrum bins found)");
  }
  const fig = new Figure("Control spectra: first DFT bins");
  const xs = linearScale([-0.5, bins.length - 0.5], [fig.x0, fig.x1]);
  const allValues = bins.flatMap((b) => b.values);
  const ys = linearScale([0, extent(allValues)[1]], [fig.y0, fig.y1]);
  fig.axes(xs, ys, "DFT bin", "magnitude");
  const legend: { label: string; color: string }[] = [];
  channels.forEach((ch, row) => {
    const color = SERIES_COLORS[row % SERIES_COLORS.length];
    const y = bins.map((b) => b.values[row]);
    const x = bins.map((_, i) => i);
    fig.line(xs, ys, x, y, color);
    fig.markers(xs, ys, x, y, color);
    legend.push({ label: `channel ${ch}`, color });
  });
  fig.legend(legend);
  return fig.render();
}

export function renderWigner(table: Table): string {
  const a = column(table, "a");
  const b = column(table, "b");
  const w = column(table, "w");
  const aVals = [...new Set(a)].sort((p, q) => p - q);
  const bVals = [...new Set(b)].sort((p, q) => p - q);
  if (aVals.length * bVals.length !== w.length) {
    throw new CsvError("wigner slice is not a complete rectangular grid");
  }
  const fig = new Figure("Wigner function slice");
  const xs = linearScale([aVals[0], aVals[aVals.length - 1]], [fig.x0, fig.x1]);
  const ys = linearScale([bVals[0], bVals[bVals.length - 1]], [fig.y0, fig.y1]);
  const wMax = extent(w)[1];
  const cellW = (fig.x1 - fig.x0) / aVals.length;
  const cellH = (fig.y0 - fig.y1) / bVals.length;
  for (let i = 0; i < w.length; i++) {
    const x = xs(a[i]) - cellW / 2;
    const y = ys(b[i]) - cellH / 2;
    fig.cell(x, y, cellW * 1.02, cellH * 1.02, heatColor(w[i] / wMax));
  }
  fig.axes(xs, ys, "a (slice axis u)", "b (slice axis v)");
  return fig.render();
}

const RENDERERS: Record<FigureKind, (t: Table) => string> = {
  controls: renderControls,
  dynamics: renderDynamics,
  residuals: renderResiduals,
  spectrum: renderSpectrum,
  wigner: renderWigner,
};

export function renderFigure(kind: FigureKind, table: Table): string {
  const renderer = RENDERERS[kind];
  if (!renderer) {
    throw new CsvError(`unknown figure kind ${kind}`);
  }
  return renderer(table);
}
