import type { Bar, Series } from "./aggregate.js";

/** Fixed style: palette order is the style seed, series are sorted upstream. */
export const PALETTE = [
  "#c0392b", "#2471a3", "#1e8449", "#7d3c98",
  "#b7950b", "#148f77", "#a04000", "#5d6d7e",
];

const W = 720;
const H = 480;
const MARGIN = { left: 72, right: 160, top: 40, bottom: 56 };

export interface FigureLabels {
  title: string;
  xlabel: string;
  ylabel: string;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(2);
  return String(Number(v.toPrecision(6)));
}

/** Round tick positions covering [lo, hi] with a 1/2/5 step. */
export function ticks(lo: number, hi: number, want = 5): number[] {
  if (!(hi > lo)) return [lo];
  const raw = (hi - lo) / want;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => (hi - lo) / s <= want) ?? 10 * mag;
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12 * step; v += step) {
    out.push(Math.abs(v) < 1e-12 * step ? 0 : v);
  }
  return out;
}

function pad(lo: number, hi: number): [number, number] {
  if (hi === lo) {
    const d = lo === 0 ? 1 : Math.abs(lo) * 0.1;
    return [lo - d, hi + d];
  }
  const d = (hi - lo) * 0.06;
  return [lo - d, hi + d];
}

interface Scale {
  (v: number): number;
  lo: number;
  hi: number;
}

function linear(lo: number, hi: number, a: number, b: number): Scale {
  const f = ((v: number) => a + ((v - lo) / (hi - lo)) * (b - a)) as Scale;
  f.lo = lo;
  f.hi = hi;
  return f;
}

function frame(labels: FigureLabels, sx: Scale | null, sy: Scale): string {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = W - MARGIN.right;
  const y0 = H - MARGIN.bottom;
  const y1 = MARGIN.top;
  if (sx) {
    for (const t of ticks(sx.lo, sx.hi)) {
      const x = sx(t);
      parts.push(`<line x1="${x.toFixed(2)}" y1="${y0}" x2="${x.toFixed(2)}" y2="${y1}" stroke="#eeeeee"/>`);
      parts.push(`<text x="${x.toFixed(2)}" y="${y0 + 18}" text-anchor="middle" font-size="11">${fmt(t)}</text>`);
    }
  }
  for (const t of ticks(sy.lo, sy.hi)) {
    const y = sy(t);
    parts.push(`<line x1="${x0}" y1="${y.toFixed(2)}" x2="${x1}" y2="${y.toFixed(2)}" stroke="#eeeeee"/>`);
    parts.push(`<text x="${x0 - 6}" y="${(y + 4).toFixed(2)}" text-anchor="end" font-size="11">${fmt(t)}</text>`);
  }
  parts.push(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333333"/>`);
  parts.push(`<text x="${(x0 + x1) / 2}" y="${H - 14}" text-anchor="middle" font-size="13">${esc(labels.xlabel)}</text>`);
  parts.push(`<text x="20" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 20 ${(y0 + y1) / 2})">${esc(labels.ylabel)}</text>`);
  parts.push(`<text x="${(x0 + x1) / 2}" y="24" text-anchor="middle" font-size="15">${esc(labels.title)}</text>`);
  return parts.join("\n");
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function legend(names: string[]): string {
  const x = W - MARGIN.right + 12;
  const rows = names.map((name, i) => {
    const y = MARGIN.top + 10 + i * 20;
    const color = PALETTE[i % PALETTE.length]!;
    return (
      `<rect x="${x}" y="${y - 9}" width="12" height="12" fill="${color}"/>` +
      `<text x="${x + 18}" y="${y + 2}" font-size="12">${esc(name)}</text>`
    );
  });
  return rows.join("\n");
}

function document(body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="sans-serif">\n` +
    `<rect width="${W}" height="${H}" fill="#ffffff"/>\n${body}\n</svg>\n`
  );
}

/** Scatter/line figure: one polyline + markers per series, SEM whiskers. */
export function scatterFigure(series: Series[], labels: FigureLabels): string {
  const pts = series.flatMap((s) => s.points);
  const xs = pts.flatMap((p) => [p.x - (p.xerr ?? 0), p.x + (p.xerr ?? 0)]);
  const ys = pts.flatMap((p) => [p.y - (p.yerr ?? 0), p.y + (p.yerr ?? 0)]);
  const [xlo, xhi] = pad(Math.min(...xs), Math.max(...xs));
  const [ylo, yhi] = pad(Math.min(...ys), Math.max(...ys));
  const sx = linear(xlo, xhi, MARGIN.left, W - MARGIN.right);
  const sy = linear(ylo, yhi, H - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [frame(labels, sx, sy)];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    const inner: string[] = [];
    if (s.points.length > 1) {
      const path = s.points.map((p) => `${sx(p.x).toFixed(2)},${sy(p.y).toFixed(2)}`).join(" ");
      inner.push(`<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
    }
    for (const p of s.points) {
      const cx = sx(p.x);
      const cy = sy(p.y);
      if (p.yerr !== null && p.yerr > 0) {
        const lo = sy(p.y - p.yerr);
        const hi = sy(p.y + p.yerr);
        inner.push(`<line class="errbar" x1="${cx.toFixed(2)}" y1="${lo.toFixed(2)}" x2="${cx.toFixed(2)}" y2="${hi.toFixed(2)}" stroke="${color}" stroke-width="1"/>`);
        inner.push(`<line class="errbar" x1="${(cx - 3).toFixed(2)}" y1="${lo.toFixed(2)}" x2="${(cx + 3).toFixed(2)}" y2="${lo.toFixed(2)}" stroke="${color}" stroke-width="1"/>`);
        inner.push(`<line class="errbar" x1="${(cx - 3).toFixed(2)}" y1="${hi.toFixed(2)}" x2="${(cx + 3).toFixed(2)}" y2="${hi.toFixed(2)}" stroke="${color}" stroke-width="1"/>`);
      }
      if (p.xerr !== null && p.xerr > 0) {
        const lo = sx(p.x - p.xerr);
        const hi = sx(p.x + p.xerr);
        inner.push(`<line class="errbar" x1="${lo.toFixed(2)}" y1="${cy.toFixed(2)}" x2="${hi.toFixed(2)}" y2="${cy.toFixed(2)}" stroke="${color}" stroke-width="1"/>`);
      }
      inner.push(`<circle cx="${cx.toFixed(2)}" cy="${cy.toFixed(2)}" r="3.5" fill="${color}"/>`);
    }
    parts.push(`<g class="series" data-series="${esc(s.policy_id)}">\n${inner.join("\n")}\n</g>`);
  });
  parts.push(legend(series.map((s) => s.policy_id)));
  return document(parts.join("\n"));
}

/** Grouped bar figure: bars clustered by source group, one bar per policy. */
export function barFigure(bars: Bar[], labels: FigureLabels): string {
  const groups = [...new Set(bars.map((b) => b.group))].sort();
  const policies = [...new Set(bars.map((b) => b.policy_id))].sort();
  const tops = bars.map((b) => b.value + (b.err ?? 0));
  const [ylo, yhi] = pad(0, Math.max(...tops, 0));
  const sy = linear(Math.min(ylo, 0), yhi, H - MARGIN.bottom, MARGIN.top);
  const sx = linear(0, groups.length, MARGIN.left, W - MARGIN.right);

  const groupWidth = sx(1) - sx(0);
  const barWidth = (groupWidth * 0.72) / policies.length;
  const parts: string[] = [frame(labels, null, sy)];
  const y0 = sy(0);
  groups.forEach((g, gi) => {
    const cx = sx(gi + 0.5);
    parts.push(`<text x="${cx.toFixed(2)}" y="${H - MARGIN.bottom + 18}" text-anchor="middle" font-size="12">${esc(g)}</text>`);
    policies.forEach((p, pi) => {
      const bar = bars.find((b) => b.group === g && b.policy_id === p);
      if (!bar) return;
      const color = PALETTE[pi % PALETTE.length]!;
      const x = cx - (policies.length * barWidth) / 2 + pi * barWidth;
      const yTop = sy(bar.value);
      const inner: string[] = [
        `<rect x="${x.toFixed(2)}" y="${Math.min(yTop, y0).toFixed(2)}" width="${(barWidth * 0.9).toFixed(2)}" height="${Math.abs(y0 - yTop).toFixed(2)}" fill="${color}"/>`,
      ];
      if (bar.err !== null && bar.err > 0) {
        const bx = x + barWidth * 0.45;
        const lo = sy(bar.value - bar.err);
        const hi = sy(bar.value + bar.err);
        inner.push(`<line class="errbar" x1="${bx.toFixed(2)}" y1="${lo.toFixed(2)}" x2="${bx.toFixed(2)}" y2="${hi.toFixed(2)}" stroke="#222222" stroke-width="1.2"/>`);
        inner.push(`<line class="errbar" x1="${(bx - 4).toFixed(2)}" y1="${hi.toFixed(2)}" x2="${(bx + 4).toFixed(2)}" y2="${hi.toFixed(2)}" stroke="#222222" stroke-width="1.2"/>`);
        inner.push(`<line class="errbar" x1="${(bx - 4).toFixed(2)}" y1="${lo.toFixed(2)}" x2="${(bx + 4).toFixed(2)}" y2="${lo.toFixed(2)}" stroke="#222222" stroke-width="1.2"/>`);
      }
      parts.push(`<g class="bar" data-series="${esc(p)}" data-group="${esc(g)}">\n${inner.join("\n")}\n</g>`);
    });
  });
  parts.push(legend(policies));
  return document(parts.join("\n"));
}
