import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { runCli, type CliIO } from "../src/main.js";

const GOLDEN_PATH = fileURLToPath(new URL("./fixtures/golden.csv", import.meta.url));

function capture(): { io: CliIO; out: string[]; err: string[] } {
  const out: string[] = [];
  const err: string[] = [];
  return { io: { out: (s) => out.push(s), err: (s) => err.push(s) }, out, err };
}

describe("runCli", () => {
  it("renders the golden CSV to an SVG file and exits 0", () => {
    const dir = mkdtempSync(join(tmpdir(), "fbplot-"));
    const out = join(dir, "fig.svg");
    const { io } = capture();
    const code = runCli(["--input", GOLDEN_PATH, "--kind", "aapr", "--out", out], io);
    expect(code).toBe(0);
    expect(existsSync(out)).toBe(true);
    const svg = readFileSync(out, "utf-8");
    expect(svg).toContain('<g class="series"');
    expect(svg).toContain('class="errbar"');
  });

  it("overlays multiple inputs and accepts every kind", () => {
    const dir = mkdtempSync(join(tmpdir(), "fbplot-"));
    for (const kind of ["aapr", "sat", "variance"]) {
      const out = join(dir, `${kind}.svg`);
      const code = runCli(
        ["--input", GOLDEN_PATH, "--input", GOLDEN_PATH, "--kind", kind, "--out", out],
        capture().io,
      );
      expect(code).toBe(0);
      expect(existsSync(out)).toBe(true);
    }
  });

  it("exits nonzero on a schema violation and names the offending column", () => {
    const dir = mkdtempSync(join(tmpdir(), "fbplot-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, readFileSync(GOLDEN_PATH, "utf-8").replace("aapr", "appr"), "utf-8");
    const { io, err } = capture();
    const code = runCli(["--input", bad, "--kind", "aapr", "--out", join(dir, "x.svg")], io);
    expect(code).toBe(2);
    expect(err.join("\n")).toContain("aapr");
    expect(existsSync(join(dir, "x.svg"))).toBe(false);
  });

  it("exits nonzero on a corrupted cell", () => {
    const dir = mkdtempSync(join(tmpdir(), "fbplot-"));
    const bad = join(dir, "bad.csv");
    const text = readFileSync(GOLDEN_PATH, "utf-8").split("\n");
    const cells = text[1]!.split(",");
    cells[3] = "not-a-number";
    text[1] = cells.join(",");
    writeFileSync(bad, text.join("\n"), "utf-8");
    const { io, err } = capture();
    const code = runCli(["--input", bad, "--kind", "sat", "--out", join(dir, "x.svg")], io);
    expect(code).toBe(2);
    expect(err.join("\n")).toContain("mean_ht");
  });

  it("exits 4 when an input file is missing", () => {
    const dir = mkdtempSync(join(tmpdir(), "fbplot-"));
    const { io } = capture();
    const code = runCli(
      ["--input", join(dir, "nope.csv"), "--kind", "aapr", "--out", join(dir, "x.svg")],
      io,
    );
    expect(code).toBe(4);
  });

  it("rejects an unknown kind and missing flags as config errors", () => {
    const { io } = capture();
    expect(runCli(["--input", GOLDEN_PATH, "--kind", "pie", "--out", "x.svg"], io)).toBe(2);
    expect(runCli(["--kind", "aapr"], capture().io)).toBe(2);
  });

  it("writes byte-identical figures on rerun", () => {
    const dir = mkdtempSync(join(tmpdir(), "fbplot-"));
    const a = join(dir, "a.svg");
    const b = join(dir, "b.svg");
    runCli(["--input", GOLDEN_PATH, "--kind", "variance", "--out", a], capture().io);
    runCli(["--input", GOLDEN_PATH, "--kind", "variance", "--out", b], capture().io);
    expect(readFileSync(a, "utf-8")).toBe(readFileSync(b, "utf-8"));
  });
});
