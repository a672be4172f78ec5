import type { ReportRow } from "./schema.js";

export interface SeriesPoint {
  x: number;
  y: number;
  /** SEM of x/y across seeds; null when a single seed backs the point. */
  xerr: number | null;
  yerr: number | null;
  seeds: number;
}

export interface Series {
  policy_id: string;
  points: SeriesPoint[];
}

export interface Bar {
  group: string;
  policy_id: string;
  value: number;
  err: number | null;
  seeds: number;
}

function mean(vs: number[]): number {
  return vs.reduce((a, b) => a + b, 0) / vs.length;
}

/** Standard error of the mean; null below two samples. */
export function sem(vs: number[]): number | null {
  if (vs.length < 2) return null;
  const m = mean(vs);
  const varSum = vs.reduce((a, b) => a + (b - m) * (b - m), 0);
  return Math.sqrt(varSum / (vs.length - 1)) / Math.sqrt(vs.length);
}

function groupBy<T>(items: T[], key: (t: T) => string): Map<string, T[]> {
  const out = new Map<string, T[]>();
  for (const it of items) {
    const k = key(it);
    const bucket = out.get(k);
    if (bucket) bucket.push(it);
    else out.set(k, [it]);
  }
  return out;
}

function distinctSeeds(rows: ReportRow[]): number {
  return new Set(rows.map((r) => r.seed)).size;
}

/**
 * Collapse rows into one series per policy_id for a scatter/line figure.
 *
 * An operating point is (cost, threshold); rows sharing one differ only by
 * seed and are averaged, with SEM bars once >= 2 seeds back the point.
 * Points are ordered by x so sweep curves draw left to right.
 */
export function buildSeries(
  rows: ReportRow[],
  yField: "aapr" | "macro_error",
): Series[] {
  const byPolicy = groupBy(rows, (r) => r.policy_id);
  const out: Series[] = [];
  for (const policyId of [...byPolicy.keys()].sort()) {
    const mine = byPolicy.get(policyId)!;
    const byPoint = groupBy(mine, (r) => `${r.cost}|${r.threshold ?? "NA"}`);
    const points: SeriesPoint[] = [];
    for (const rowsAt of byPoint.values()) {
      const seeds = distinctSeeds(rowsAt);
      const xs = rowsAt.map((r) => r.mean_ht);
      const ys = rowsAt.map((r) => r[yField]);
      points.push({
        x: mean(xs),
        y: mean(ys),
        xerr: seeds >= 2 ? sem(xs) : null,
        yerr: seeds >= 2 ? sem(ys) : null,
        seeds,
      });
    }
    points.sort((a, b) => a.x - b.x || a.y - b.y);
    out.push({ policy_id: policyId, points });
  }
  return out;
}

/**
 * Collapse rows into grouped bars of hitting-time variance.
 *
 * One group per source CSV (dataset), one bar per policy_id inside it,
 * averaging var_ht over that policy's rows; SEM once >= 2 seeds present.
 */
export function buildBars(rows: ReportRow[]): Bar[] {
  const bySource = groupBy(rows, (r) => r.source);
  const out: Bar[] = [];
  for (const source of [...bySource.keys()].sort()) {
    const inGroup = bySource.get(source)!;
    const byPolicy = groupBy(inGroup, (r) => r.policy_id);
    for (const policyId of [...byPolicy.keys()].sort()) {
      const mine = byPolicy.get(policyId)!;
      const seeds = distinctSeeds(mine);
      const vs = mine.map((r) => r.var_ht);
      out.push({
        group: source,
        policy_id: policyId,
        value: mean(vs),
        err: seeds >= 2 ? sem(vs) : null,
        seeds,
      });
    }
  }
  return out;
}
