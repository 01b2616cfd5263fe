/** Strict CSV reading with schema validation against the declared kinds. */

import * as fs from "fs";

export class SchemaError extends Error {}

export interface Table {
  columns: string[];
  rows: number[][];
  col(name: string): number[];
}

export function readCsv(path: string): Table {
  if (!fs.existsSync(path)) {
    throw new SchemaError(`input CSV not found: ${path}`);
  }
  const text = fs.readFileSync(path, "utf8").trimEnd();
  const lines = text.length ? text.split("\n") : [];
  if (lines.length === 0) {
    throw new SchemaError(`empty CSV: ${path}`);
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    if (!lines[i].trim()) continue;
    const parts = lines[i].split(",");
    if (parts.length !== columns.length) {
      throw new SchemaError(`row ${i + 1} of ${path} has ${parts.length} fields, expected ${columns.length}`);
    }
    rows.push(parts.map(Number));
  }
  if (rows.length === 0) {
    throw new SchemaError(`CSV has a header but no data rows: ${path}`);
  }
  return {
    columns,
    rows,
    col(name: string): number[] {
      const idx = columns.indexOf(name);
      if (idx < 0) throw new SchemaError(`missing column '${name}' in ${path}`);
      return rows.map((r) => r[idx]);
    },
  };
}

export const SCHEMAS: Record<string, string[]> = {
  ratio_sweep: ["scale", "numerator", "denominator", "ratio", "resonant", "off_resonant"],
  energy_trajectory: [
    "t",
    "F_N",
    "A_1",
    "lambda",
    "kappa",
    "min_gap",
    "u_W_norm",
    "u_C1_norm",
    "bound",
    "verdict_flag",
  ],
  rate_loglog: ["epsilon", "sup_error"],
  symbol_check: ["rho", "symbol"],
};

export function validateSchema(kind: string, table: Table, path: string): void {
  const wanted = SCHEMAS[kind];
  if (!wanted) {
    throw new SchemaError(`unknown figure kind '${kind}'`);
  }
  const missing = wanted.filter((c) => !table.columns.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(`${path} is missing columns for ${kind}: ${missing.join(", ")}`);
  }
}
