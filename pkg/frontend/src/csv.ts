/**
 * Strict reader for cvchain result CSVs: optional `# ...` comment lines,
 * one header row, numeric data rows.
 */

import { readFileSync } from "fs";

export interface Table {
  columns: string[];
  rows: number[][];
  configHash: string | null;
}

export class CsvError extends Error {}

export function parseCsv(text: string, path = "<string>"): Table {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  let configHash: string | null = null;
  const content: string[] = [];
  for (const line of lines) {
    if (line.startsWith("#")) {
      const m = line.match(/^#\s*config_sha256=(\S+)/);
      if (m) configHash = m[1];
      continue;
    }
    content.push(line);
  }
  if (content.length < 2) {
    throw new CsvError(`${path}: no data rows`);
  }
  const columns = content[0].split(",");
  const rows: number[][] = [];
  for (let i = 1; i < content.length; i++) {
    const parts = content[i].split(",");
    if (parts.length !== columns.length) {
      throw new CsvError(`${path}: row ${i} has ${parts.length} fields, header has ${columns.length}`);
    }
    const row = parts.map(Number);
    const bad = row.findIndex((v) => !Number.isFinite(v));
    if (bad >= 0) {
      throw new CsvError(`${path}: row ${i} column ${columns[bad]} is not a finite number`);
    }
    rows.push(row);
  }
  return { columns, rows, configHash };
}

export function readCsv(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new CsvError(`cannot read ${path}`);
  }
  return parseCsv(text, path);
}

/** Column values by exact name; the error names the missing column. */
export function column(table: Table, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new CsvError(`missing column ${name} (found: ${table.columns.join(", ")})`);
  }
  return table.rows.map((r) => r[idx]);
}

/** All columns whose name starts with the prefix, in header order. */
export function columnsByPrefix(table: Table, prefix: string): { name: string; values: number[] }[] {
  const out: { name: string; values: number[] }[] = [];
  table.columns.forEach((name, idx) => {
    if (name.startsWith(prefix)) {
      out.push({ name, values: table.rows.map((r) => r[idx]) });
    }
  });
  return out;
}
