/**
 * Minimal headless SVG plotting: linear/log scales, axes, polylines,
 * markers, heatmap cells, legends. Output is a deterministic SVG string.
 */

import * as style from "./style.js";

export interface Scale {
  (v: number): number;
  ticks(): number[];
  domain: [number, number];
}

function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step0 = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step0;
  const step = step0 * (err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1);
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  fn.ticks = () => niceTicks(d0, d1);
  fn.domain = domain;
  return fn;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const lo = Math.log10(domain[0]);
  const hi = Math.log10(domain[1]);
  const [r0, r1] = range;
  const span = hi - lo || 1;
  const fn = ((v: number) => r0 + ((Math.log10(v) - lo) / span) * (r1 - r0)) as Scale;
  fn.ticks = () => {
    const out: number[] = [];
    for (let e = Math.ceil(lo); e <= Math.floor(hi); e++) out.push(Math.pow(10, e));
    return out.length >= 2 ? out : [domain[0], domain[1]];
  };
  fn.domain = domain;
  return fn;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

const fmt = (v: number) => {
  const a = Math.abs(v);
  if (v === 0) return "0";
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0).replace("+", "");
  return String(parseFloat(v.toPrecision(6)));
};

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export class Figure {
  parts: string[] = [];
  readonly x0 = style.MARGIN.left;
  readonly x1 = style.WIDTH - style.MARGIN.right;
  readonly y0 = style.HEIGHT - style.MARGIN.bottom;
  readonly y1 = style.MARGIN.top;

  constructor(readonly title: string) {}

  axes(xs: Scale, ys: Scale, xLabel: string, yLabel: string, logY = false) {
    const p = this.parts;
    for (const t of xs.ticks()) {
      const x = xs(t);
      p.push(`<line x1="${x.toFixed(2)}" y1="${this.y0}" x2="${x.toFixed(2)}" y2="${this.y1}" stroke="${style.GRID_COLOR}" stroke-width="0.6"/>`);
      p.push(`<text x="${x.toFixed(2)}" y="${this.y0 + 18}" text-anchor="middle" style="font:${style.FONT}" fill="${style.AXIS_COLOR}">${fmt(t)}</text>`);
    }
    for (const t of ys.ticks()) {
      const y = ys(t);
      p.push(`<line x1="${this.x0}" y1="${y.toFixed(2)}" x2="${this.x1}" y2="${y.toFixed(2)}" stroke="${style.GRID_COLOR}" stroke-width="0.6"/>`);
      const label = logY ? `1e${Math.round(Math.log10(t))}` : fmt(t);
      p.push(`<text x="${this.x0 - 8}" y="${(y + 4).toFixed(2)}" text-anchor="end" style="font:${style.FONT}" fill="${style.AXIS_COLOR}">${label}</text>`);
    }
    p.push(`<rect x="${this.x0}" y="${this.y1}" width="${this.x1 - this.x0}" height="${this.y0 - this.y1}" fill="none" stroke="${style.AXIS_COLOR}" stroke-width="1"/>`);
    p.push(`<text x="${(this.x0 + this.x1) / 2}" y="${this.y0 + 38}" text-anchor="middle" style="font:${style.FONT}" fill="${style.AXIS_COLOR}">${esc(xLabel)}</text>`);
    p.push(`<text transform="translate(${this.x0 - 52},${(this.y0 + this.y1) / 2}) rotate(-90)" text-anchor="middle" style="font:${style.FONT}" fill="${style.AXIS_COLOR}">${esc(yLabel)}</text>`);
  }

  line(xs: Scale, ys: Scale, x: number[], y: number[], color: string) {
    const pts = x.map((v, i) => `${xs(v).toFixed(2)},${ys(y[i]).toFixed(2)}`).join(" ");
    this.parts.push(`<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="${style.LINE_WIDTH}"/>`);
  }

  markers(xs: Scale, ys: Scale, x: number[], y: number[], color: string) {
    for (let i = 0; i < x.length; i++) {
      this.parts.push(`<circle cx="${xs(x[i]).toFixed(2)}" cy="${ys(y[i]).toFixed(2)}" r="${style.MARKER_RADIUS}" fill="${color}"/>`);
    }
  }

  cell(x: number, y: number, w: number, h: number, color: string) {
    this.parts.push(`<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(3)}" height="${h.toFixed(3)}" fill="${color}"/>`);
  }

  legend(entries: { label: string; color: string }[]) {
    const x = this.x1 - 150;
    let y = this.y1 + 14;
    for (const { label, color } of entries) {
      this.parts.push(`<line x1="${x}" y1="${y - 4}" x2="${x + 22}" y2="${y - 4}" stroke="${color}" stroke-width="${style.LINE_WIDTH + 0.6}"/>`);
      this.parts.push(`<text x="${x + 28}" y="${y}" style="font:${style.FONT}" fill="${style.AXIS_COLOR}">${esc(label)}</text>`);
      y += 16;
    }
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${style.WIDTH}" height="${style.HEIGHT}" viewBox="0 0 ${style.WIDTH} ${style.HEIGHT}">`,
      `<rect width="${style.WIDTH}" height="${style.HEIGHT}" fill="${style.BACKGROUND}"/>`,
      `<text x="${style.WIDTH / 2}" y="20" text-anchor="middle" style="font:${style.TITLE_FONT}" fill="${style.AXIS_COLOR}">${esc(this.title)}</text>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}

/** Map a value in [0, 1] onto the frozen heat palette. */
export function heatColor(t: number): string {
  const anchors = style.HEAT_ANCHORS;
  const clamped = Math.min(1, Math.max(0, t));
  const pos = clamped * (anchors.length - 1);
  const i = Math.min(anchors.length - 2, Math.floor(pos));
  const frac = pos - i;
  const mix = (a: number, b: number) => Math.round(a + (b - a) * frac);
  const [r, g, b] = [0, 1, 2].map((c) => mix(anchors[i][c], anchors[i + 1][c]));
  return `rgb(${r},${g},${b})`;
}
