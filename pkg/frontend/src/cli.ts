/**
 * Shared entry point of the per-figure scripts: `<kind> --in file.csv --out
 * figure.svg`. Exit codes: 0 success, 2 input/contract error.
 */

import { writeFileSync } from "fs";

import { CsvError, readCsv } from "./csv.js";
import { FigureKind, renderFigure } from "./figures.js";

const KINDS: FigureKind[] = ["controls", "dynamics", "residuals", "spectrum", "wigner"];

function parseArgs(argv: string[]): { input?: string; output?: string } {
  const out: { input?: string; output?: string } = {};
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--in") out.input = argv[++i];
    else if (argv[i] === "--out") out.output = argv[++i];
    else throw new CsvError(`unknown argument ${argv[i]} (expected --in/--out)`);
  }
  return out;
}

export function run(kind: string, argv: string[]): number {
  try {
    if (!KINDS.includes(kind as FigureKind)) {
      throw new CsvError(`unknown figure kind ${kind}; one of ${KINDS.join(", ")}`);
    }
    const { input, output } = parseArgs(argv);
    if (!input || !output) {
      throw new CsvError("both --in <csv> and --out <svg> are required");
    }
    const table = readCsv(input);
    writeFileSync(output, renderFigure(kind as FigureKind, table) + "\n");
    return 0;
  } catch (err) {
    if (err instanceof CsvError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

export function main(argv = process.argv.slice(2)): number {
  const [kind, ...rest] = argv;
  if (!kind) {
    console.error(`usage: plot <${KINDS.join("|")}> --in file.csv --out figure.svg`);
    return 2;
  }
  return run(kind, rest);
}

// Direct execution: `node dist/cli.js <kind> --in ... --out ...`
const isDirect = process.argv[1]?.endsWith("cli.js");
if (isDirect) {
  process.exit(main());
}
