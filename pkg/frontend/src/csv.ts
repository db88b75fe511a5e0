/** Sweep/fit CSV ingestion for the figure renderer. */

export class EmptyInput extends Error {}
export class MissingColumn extends Error {}

export interface SweepRow {
  direction: string;
  scenario: string;
  estimator: string;
  m: number;
  n: number;
  repeats: number;
  failures: number;
  risk_nats: number;
  stderr_nats: number;
  seed: string;
  wall_ms: number;
}

export interface FitRow {
  kind: string;
  slope: number;
  intercept: number;
  lambda: number;
  r2: number;
}

const SWEEP_COLUMNS = [
  "direction",
  "scenario",
  "estimator",
  "m",
  "n",
  "repeats",
  "failures",
  "risk_nats",
  "stderr_nats",
  "seed",
  "wall_ms",
] as const;

function splitCsv(text: string): string[][] {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  return lines.map((l) => l.split(","));
}

export function parseSweepCsv(text: string): SweepRow[] {
  const cells = splitCsv(text);
  if (cells.length === 0) throw new EmptyInput("sweep CSV has no header row");
  const header = cells[0];
  for (const col of SWEEP_COLUMNS) {
    if (!header.includes(col)) throw new MissingColumn(`sweep CSV lacks column '${col}'`);
  }
  if (cells.length === 1) throw new EmptyInput("sweep CSV has no data rows");
  const idx = Object.fromEntries(header.map((h, i) => [h, i]));
  return cells.slice(1).map((row) => ({
    direction: row[idx["direction"]],
    scenario: row[idx["scenario"]],
    estimator: row[idx["estimator"]],
    m: Number(row[idx["m"]]),
    n: Number(row[idx["n"]]),
    repeats: Number(row[idx["repeats"]]),
    failures: Number(row[idx["failures"]]),
    risk_nats: Number(row[idx["risk_nats"]]),
    stderr_nats: Number(row[idx["stderr_nats"]]),
    seed: row[idx["seed"]],
    wall_ms: Number(row[idx["wall_ms"]]),
  }));
}

export function parseFitCsv(text: string): FitRow {
  const cells = splitCsv(text);
  if (cells.length === 0) throw new EmptyInput("fit CSV has no header row");
  const header = cells[0];
  for (const col of ["kind", "slope", "intercept", "lambda", "r2"]) {
    if (!header.includes(col)) throw new MissingColumn(`fit CSV lacks column '${col}'`);
  }
  if (cells.length === 1) throw new EmptyInput("fit CSV has no data rows");
  const idx = Object.fromEntries(header.map((h, i) => [h, i]));
  const row = cells[1];
  return {
    kind: row[idx["kind"]],
    slope: Number(row[idx["slope"]]),
    intercept: Number(row[idx["intercept"]]),
    lambda: Number(row[idx["lambda"]]),
    r2: Number(row[idx["r2"]]),
  };
}

export type Axis = "m" | "n" | "m_plus_n";

/** Pick the sweep axis: whichever sample size varies (both -> joint). */
export function detectAxis(rows: SweepRow[]): Axis {
  const mVaries = new Set(rows.map((r) => r.m)).size > 1;
  const nVaries = new Set(rows.map((r) => r.n)).size > 1;
  if (mVaries && nVaries) return "m_plus_n";
  if (nVaries) return "n";
  return "m";
}

export function axisValue(row: SweepRow, axis: Axis): number {
  if (axis === "m") return row.m;
  if (axis === "n") return row.n;
  return row.m + row.n;
}
