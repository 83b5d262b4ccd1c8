/**
 * Frozen figure style. Everything visual lives here so regenerated figures
 * diff cleanly against committed ones.
 */

export const WIDTH = 680;
export const HEIGHT = 440;
export const MARGIN = { top: 36, right: 24, bottom: 52, left: 72 };

export const FONT = "12px 'DejaVu Sans', 'Helvetica Neue', Arial, sans-serif";
export const TITLE_FONT = "14px 'DejaVu Sans', 'Helvetica Neue', Arial, sans-serif";

export const AXIS_COLOR = "#333333";
export const GRID_COLOR = "#dddddd";
export const BACKGROUND = "#ffffff";

/** Line palette, cycled per series. */
export const SERIES_COLORS = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

export const LINE_WIDTH = 1.4;
export const MARKER_RADIUS = 3.0;

/** Heatmap color anchors (low -> high), interpolated linearly in RGB. */
export const HEAT_ANCHORS: [number, number, number][] = [
  [13, 8, 135],
  [126, 3, 168],
  [204, 71, 120],
  [248, 149, 64],
  [240, 249, 33],
];
