import { execFileSync } from "child_process";
import { existsSync, mkdtempSync, readFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { column, parseCsv, readCsv } from "../src/csv.js";
import { renderFigure, FigureKind } from "../src/figures.js";

const FIXTURES = join(__dirname, "fixtures");

const FIXTURE_FOR: Record<FigureKind, string> = {
  controls: "controls.csv",
  dynamics: "dynamics.csv",
  residuals: "iterations.csv",
  spectrum: "spectrum.csv",
  wigner: "wigner_t15_modes4-5.csv",
};

describe("acceptance: figure kinds render from optimizer outputs", () => {
  // all five kinds must render the committed optimizer run without error
  for (const kind of Object.keys(FIXTURE_FOR) as FigureKind[]) {
    it(`renders ${kind}`, () => {
      const table = readCsv(join(FIXTURES, FIXTURE_FOR[kind]));
      const svg = renderFigure(kind, table);
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg).toContain("</svg>");
      expect(svg.length).toBeGreaterThan(500);
    });
  }

  it("residuals series is monotone non-increasing (sorted descending)", () => {
    const table = readCsv(join(FIXTURES, "iterations.csv"));
    const j = column(table, "j");
    const sorted = [...j].sort((a, b) => b - a);
    expect(j).toEqual(sorted);
  });
});

describe("figure content", () => {
  it("controls figure carries one labeled curve per channel", () => {
    const table = readCsv(join(FIXTURES, "controls.csv"));
    const svg = renderFigure("controls", table);
    for (let site = 1; site <= 5; site++) {
      expect(svg).toContain(`site ${site}`);
    }
    expect((svg.match(/<polyline/g) ?? []).length).toBeGreaterThanOrEqual(5);
  });

  it("residuals figure uses a log axis", () => {
    const table = readCsv(join(FIXTURES, "iterations.csv"));
    const svg = renderFigure("residuals", table);
    expect(svg).toContain("log scale");
    expect(svg).toMatch(/1e-?\d+/);
  });

  it("wigner heatmap peaks at the grid origin for the zero-mean state", () => {
    const table = readCsv(join(FIXTURES, "wigner_t15_modes4-5.csv"));
    const a = column(table, "a");
    const b = column(table, "b");
    const w = column(table, "w");
    let best = 0;
    w.forEach((v, i) => {
      if (v > w[best]) best = i;
    });
    expect(Math.abs(a[best])).toBeLessThanOrEqual(0.08 + 1e-12);
    expect(Math.abs(b[best])).toBeLessThanOrEqual(0.08 + 1e-12);
    const svg = renderFigure("wigner", table);
    expect((svg.match(/<rect/g) ?? []).length).toBeGreaterThan(10000);
  });

  it("dynamics figure reaches the target negativity at the tail", () => {
    const table = readCsv(join(FIXTURES, "dynamics.csv"));
    const tail = column(table, "negativity_tail");
    const head = column(table, "negativity_head");
    // the committed run transfers the entangled state: tail ends near the
    // head's starting value (the optimizer stops at its residual threshold,
    // not at exact transfer)
    expect(tail[0]).toBeLessThan(0.01);
    expect(Math.abs(tail[tail.length - 1] - head[0])).toBeLessThan(0.1);
  });
});

describe("command line scripts", () => {
  it("each kind writes an SVG file via its script", () => {
    const outDir = mkdtempSync(join(tmpdir(), "plotkit-"));
    for (const kind of Object.keys(FIXTURE_FOR) as FigureKind[]) {
      const out = join(outDir, `${kind}.svg`);
      execFileSync("node", [
        join(__dirname, "..", "dist", "cli.js"),
        kind,
        "--in",
        join(FIXTURES, FIXTURE_FOR[kind]),
        "--out",
        out,
      ]);
      expect(existsSync(out)).toBe(true);
      expect(readFileSync(out, "utf8")).toContain("</svg>");
    }
  });

  it("header mismatch exits 2 and names the missing column", () => {
    const outDir = mkdtempSync(join(tmpdir(), "plotkit-"));
    let code = 0;
    let stderr = "";
    try {
      execFileSync(
        "node",
        [
          join(__dirname, "..", "dist", "cli.js"),
          "dynamics",
          "--in",
          join(FIXTURES, "spectrum.csv"), // wrong table for this figure
          "--out",
          join(outDir, "x.svg"),
        ],
        { stdio: ["ignore", "pipe", "pipe"] },
      );
    } catch (err: any) {
      code = err.status;
      stderr = String(err.stderr);
    }
    expect(code).toBe(2);
    expect(stderr).toContain("missing column t");
  });
});

describe("csv parsing", () => {
  it("extracts the config hash comment", () => {
    const table = readCsv(join(FIXTURES, "iterations.csv"));
    expect(table.configHash).toMatch(/^[0-9a-f]{64}$/);
  });

  it("rejects ragged rows", () => {
    expect(() => parseCsv("a,b\n1,2\n3\n")).toThrow(/row 2/);
  });

  it("rejects non-numeric cells naming the column", () => {
    expect(() => parseCsv("a,b\n1,oops\n")).toThrow(/column b/);
  });
});
