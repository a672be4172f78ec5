import { buildBars, buildSeries } from "./aggregate.js";
import type { ReportRow } from "./schema.js";
import { barFigure, scatterFigure, type FigureLabels } from "./svg.js";

export type FigureKind = "aapr" | "sat" | "variance";

export const KINDS: FigureKind[] = ["aapr", "sat", "variance"];

/**
 * Turn validated report rows into one SVG figure.
 *
 * aapr: mean hitting time vs average posterior risk, one series per policy.
 * sat: mean hitting time vs macro error (speed-accuracy tradeoff).
 * variance: hitting-time variance bars grouped by source CSV.
 * Pure function of the rows, so identical inputs render identical bytes.
 */
export function renderFigure(rows: ReportRow[], kind: FigureKind, title?: string): string {
  if (kind === "variance") {
    const labels: FigureLabels = {
      title: title ?? "Hitting-time variance by policy",
      xlabel: "dataset",
      ylabel: "variance of hitting time",
    };
    return barFigure(buildBars(rows), labels);
  }
  const yField = kind === "aapr" ? "aapr" : "macro_error";
  const labels: FigureLabels = {
    title: title ?? (kind === "aapr" ? "Average posterior risk" : "Speed-accuracy tradeoff"),
    xlabel: "mean hitting time",
    ylabel: kind === "aapr" ? "AAPR" : "macro error",
  };
  return scatterFigure(buildSeries(rows, yField), labels);
}
