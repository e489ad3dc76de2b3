import Papa from "papaparse";

export type FigureKind = "trace" | "ber" | "rate" | "throughput";

export const FIGURE_KINDS: FigureKind[] = ["trace", "ber", "rate", "throughput"];

/** Columns each figure kind needs from its CSV. */
export const REQUIRED_COLUMNS: Record<FigureKind, string[]> = {
  trace: ["t", "bit", "count", "mu0", "sigma0", "mu1", "sigma1",
          "tau_bamap", "tau_fixed"],
  ber: ["method", "ts_seconds", "ber"],
  rate: ["method", "ts_seconds", "rate"],
  throughput: ["method", "ts_seconds", "throughput"],
};

export type Row = Record<string, number | string>;

export interface Table {
  columns: string[];
  rows: Row[];
}

export class SchemaError extends Error {}

/** Parse CSV text and check it carries the columns the figure needs. */
export function parseCsv(text: string, kind: FigureKind): Table {
  const parsed = Papa.parse<Row>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`CSV parse error: ${parsed.errors[0].message}`);
  }
  const columns = parsed.meta.fields ?? [];
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new SchemaError("CSV has no data rows");
  }
  const missing = REQUIRED_COLUMNS[kind].filter((c) => !columns.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `CSV is missing columns required for '${kind}': ${missing.join(", ")}`);
  }
  return { columns, rows };
}

export function numbers(table: Table, column: string): number[] {
  return table.rows.map((r) => Number(r[column]));
}

/** Distinct values of a column in first-appearance order. */
export function distinct(table: Table, column: string): string[] {
  const seen: string[] = [];
  for (const row of table.rows) {
    const v = String(row[column]);
    if (!seen.includes(v)) seen.push(v);
  }
  return seen;
}
