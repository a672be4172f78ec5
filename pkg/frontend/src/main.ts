#!/usr/bin/env node
import { readFileSync, writeFileSync } from "node:fs";
import { basename, extname } from "node:path";
import yargs from "yargs";

import { KINDS, renderFigure, type FigureKind } from "./render.js";
import { parseReportCsv, SchemaError, type ReportRow } from "./schema.js";

export interface CliIO {
  out: (s: string) => void;
  err: (s: string) => void;
}

/** Entry point; returns the exit code (0 ok, 2 schema/config, 4 IO). */
export function runCli(argv: string[], io: CliIO = { out: console.log, err: console.error }): number {
  const parser = yargs(argv)
    .scriptName("firmbound-plots")
    .usage("$0 --input reports.csv [--input more.csv] --kind aapr --out fig.svg")
    .option("input", { type: "string", array: true, demandOption: true, describe: "reports.csv path(s)" })
    .option("kind", { type: "string", choices: KINDS, demandOption: true, describe: "figure kind" })
    .option("out", { type: "string", demandOption: true, describe: "output SVG path" })
    .option("title", { type: "string", describe: "figure title override" })
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    })
    .help(false)
    .version(false);

  let args;
  try {
    args = parser.parseSync();
  } catch (e) {
    io.err(`config error: ${(e as Error).message}`);
    return 2;
  }

  const rows: ReportRow[] = [];
  for (const path of args.input) {
    let text: string;
    try {
      text = readFileSync(path, "utf-8");
    } catch (e) {
      io.err(`cannot read ${path}: ${(e as Error).message}`);
      return 4;
    }
    try {
      rows.push(...parseReportCsv(text, basename(path, extname(path))));
    } catch (e) {
      if (e instanceof SchemaError) {
        io.err(`schema violation in ${path} [${e.column}]: ${e.message}`);
        return 2;
      }
      throw e;
    }
  }

  const svg = renderFigure(rows, args.kind as FigureKind, args.title);
  try {
    writeFileSync(args.out, svg, "utf-8");
  } catch (e) {
    io.err(`cannot write ${args.out}: ${(e as Error).message}`);
    return 4;
  }
  io.out(`wrote ${args.out} (${rows.length} rows, kind=${args.kind})`);
  return 0;
}

const isMain = process.argv[1] !== undefined && import.meta.url.endsWith(basename(process.argv[1]));
if (isMain) {
  process.exit(runCli(process.argv.slice(2)));
}
