export { buildBars, buildSeries, sem, type Bar, type Series, type SeriesPoint } from "./aggregate.js";
export { renderFigure, KINDS, type FigureKind } from "./render.js";
export { CSV_HEADER, parseReportCsv, SchemaError, type ReportRow } from "./schema.js";
export { barFigure, scatterFigure, ticks, PALETTE, type FigureLabels } from "./svg.js";
export { runCli, type CliIO } from "./main.js";
