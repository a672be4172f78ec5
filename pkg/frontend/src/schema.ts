import Papa from "papaparse";

/** Fixed report schema shared by every policy evaluator. */
export const CSV_HEADER = [
  "policy_id",
  "cost",
  "threshold_or_NA",
  "mean_ht",
  "var_ht",
  "aapr",
  "macro_error",
  "seed",
] as const;

export interface ReportRow {
  policy_id: string;
  cost: number;
  /** null encodes the literal "NA" used by threshold-free policies. */
  threshold: number | null;
  mean_ht: number;
  var_ht: number;
  aapr: number;
  macro_error: number;
  seed: number;
  /** label for grouping when several CSVs are overlaid (file stem). */
  source: string;
}

/** Schema violation tied to a specific column so the CLI can name it. */
export class SchemaError extends Error {
  constructor(readonly column: string, message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

function numeric(column: string, raw: string, line: number): number {
  const v = Number(raw);
  if (raw.trim() === "" || !Number.isFinite(v)) {
    throw new SchemaError(column, `column ${column}: not a finite number (${JSON.stringify(raw)}, line ${line})`);
  }
  return v;
}

/**
 * Parse one reports.csv into typed rows, enforcing the 8-column contract.
 *
 * The header must match CSV_HEADER exactly (names and order); every cell is
 * checked for its column's type. Any violation throws SchemaError naming the
 * offending column.
 */
export function parseReportCsv(text: string, source: string): ReportRow[] {
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0]!;
    throw new SchemaError("(csv)", `unparseable CSV in ${source}: ${e.message}`);
  }
  const grid = parsed.data;
  if (grid.length === 0) {
    throw new SchemaError("(header)", `empty CSV ${source}: header row missing`);
  }
  const header = grid[0]!;
  for (let i = 0; i < CSV_HEADER.length; i++) {
    if (header[i] !== CSV_HEADER[i]) {
      throw new SchemaError(
        CSV_HEADER[i]!,
        `column ${CSV_HEADER[i]}: expected at header position ${i + 1}, found ${JSON.stringify(header[i] ?? "(missing)")}`,
      );
    }
  }
  if (header.length !== CSV_HEADER.length) {
    throw new SchemaError(
      header[CSV_HEADER.length]!,
      `column ${header[CSV_HEADER.length]}: unexpected extra column`,
    );
  }

  const rows: ReportRow[] = [];
  for (let r = 1; r < grid.length; r++) {
    const cells = grid[r]!;
    const line = r + 1;
    if (cells.length !== CSV_HEADER.length) {
      throw new SchemaError("(row)", `row at line ${line}: ${cells.length} cells, expected ${CSV_HEADER.length}`);
    }
    const policyId = cells[0]!;
    if (policyId.trim() === "") {
      throw new SchemaError("policy_id", `column policy_id: empty (line ${line})`);
    }
    const thresholdRaw = cells[2]!;
    const seed = numeric("seed", cells[7]!, line);
    if (!Number.isInteger(seed)) {
      throw new SchemaError("seed", `column seed: not an integer (${JSON.stringify(cells[7])}, line ${line})`);
    }
    rows.push({
      policy_id: policyId,
      cost: numeric("cost", cells[1]!, line),
      threshold: thresholdRaw === "NA" ? null : numeric("threshold_or_NA", thresholdRaw, line),
      mean_ht: numeric("mean_ht", cells[3]!, line),
      var_ht: numeric("var_ht", cells[4]!, line),
      aapr: numeric("aapr", cells[5]!, line),
      macro_error: numeric("macro_error", cells[6]!, line),
      seed,
      source,
    });
  }
  if (rows.length === 0) {
    throw new SchemaError("(rows)", `empty CSV ${source}: no data rows`);
  }
  return rows;
}
