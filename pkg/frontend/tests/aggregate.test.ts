import { describe, expect, it } from "vitest";

import { buildBars, buildSeries, sem } from "../src/aggregate.js";
import type { ReportRow } from "../src/schema.js";

function row(over: Partial<ReportRow>): ReportRow {
  return {
    policy_id: "fb",
    cost: 0.1,
    threshold: null,
    mean_ht: 5,
    var_ht: 2,
    aapr: 0.4,
    macro_error: 0.1,
    seed: 0,
    source: "golden",
    ...over,
  };
}

describe("sem", () => {
  it("matches the hand value for a known sample", () => {
    // std([1,2,3], ddof=1) = 1, so SEM = 1/sqrt(3)
    expect(sem([1, 2, 3])).toBeCloseTo(1 / Math.sqrt(3), 12);
  });

  it("is null below two samples", () => {
    expect(sem([4])).toBeNull();
    expect(sem([])).toBeNull();
  });
});

describe("buildSeries", () => {
  it("emits one series per policy_id, sorted by name", () => {
    const rows = [row({ policy_id: "static" }), row({ policy_id: "fb" }), row({ policy_id: "random" })];
    const series = buildSeries(rows, "aapr");
    expect(series.map((s) => s.policy_id)).toEqual(["fb", "random", "static"]);
  });

  it("averages seeds at one operating point and attaches SEM", () => {
    const rows = [
      row({ seed: 0, mean_ht: 4, aapr: 0.3 }),
      row({ seed: 1, mean_ht: 6, aapr: 0.5 }),
    ];
    const [s] = buildSeries(rows, "aapr");
    expect(s!.points).toHaveLength(1);
    const p = s!.points[0]!;
    expect(p.x).toBeCloseTo(5, 12);
    expect(p.y).toBeCloseTo(0.4, 12);
    expect(p.seeds).toBe(2);
    // two-sample SEM = |a-b|/2
    expect(p.xerr).toBeCloseTo(1, 12);
    expect(p.yerr).toBeCloseTo(0.1, 12);
  });

  it("leaves single-seed points without error bars", () => {
    const [s] = buildSeries([row({})], "aapr");
    expect(s!.points[0]!.xerr).toBeNull();
    expect(s!.points[0]!.yerr).toBeNull();
  });

  it("keeps distinct thresholds as distinct points, ordered by mean_ht", () => {
    const rows = [
      row({ policy_id: "static", threshold: 2.0, mean_ht: 9, aapr: 0.2 }),
      row({ policy_id: "static", threshold: 0.5, mean_ht: 3, aapr: 0.6 }),
      row({ policy_id: "static", threshold: 1.0, mean_ht: 6, aapr: 0.4 }),
    ];
    const [s] = buildSeries(rows, "aapr");
    expect(s!.points.map((p) => p.x)).toEqual([3, 6, 9]);
  });

  it("reads macro_error when asked for the speed-accuracy view", () => {
    const [s] = buildSeries([row({ macro_error: 0.25 })], "macro_error");
    expect(s!.points[0]!.y).toBeCloseTo(0.25, 12);
  });
});

describe("buildBars", () => {
  it("groups by source then policy, averaging var_ht across seeds", () => {
    const rows = [
      row({ source: "dol", policy_id: "fb", var_ht: 400, seed: 0 }),
      row({ source: "dol", policy_id: "fb", var_ht: 420, seed: 1 }),
      row({ source: "dol", policy_id: "static", var_ht: 500, seed: 0 }),
      row({ source: "gauss", policy_id: "fb", var_ht: 10, seed: 0 }),
    ];
    const bars = buildBars(rows);
    expect(bars.map((b) => `${b.group}/${b.policy_id}`)).toEqual([
      "dol/fb",
      "dol/static",
      "gauss/fb",
    ]);
    expect(bars[0]!.value).toBeCloseTo(410, 12);
    expect(bars[0]!.err).toBeCloseTo(10, 12);
    expect(bars[1]!.err).toBeNull();
  });
});
