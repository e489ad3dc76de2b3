import * as fs from "fs";

import { FigureKind, SchemaError, Table, distinct, numbers, parseCsv } from "./csv";
import {
  HEIGHT, MARGIN, PALETTE, WIDTH,
  axesFrame, bandPath, document, legend, linearScale, logScale, polylinePath,
} from "./svg";

const PLOT = {
  x0: MARGIN.left,
  x1: WIDTH - MARGIN.right,
  y0: HEIGHT - MARGIN.bottom,
  y1: MARGIN.top,
};

/** Threshold-evolution figure: true-state bands, counts, both thresholds. */
function renderTrace(table: Table): string {
  const t = numbers(table, "t");
  const count = numbers(table, "count");
  const bit = numbers(table, "bit");
  const lo0 = table.rows.map((r) => Number(r.mu0) - Number(r.sigma0));
  const hi0 = table.rows.map((r) => Number(r.mu0) + Number(r.sigma0));
  const lo1 = table.rows.map((r) => Number(r.mu1) - Number(r.sigma1));
  const hi1 = table.rows.map((r) => Number(r.mu1) + Number(r.sigma1));
  const tauB = numbers(table, "tau_bamap");
  const tauF = numbers(table, "tau_fixed");

  const allY = [...count, ...lo0, ...hi0, ...lo1, ...hi1, ...tauB, ...tauF];
  const pad = 0.05 * (Math.max(...allY) - Math.min(...allY));
  const x = linearScale(Math.min(...t), Math.max(...t), PLOT.x0, PLOT.x1);
  const y = linearScale(Math.min(...allY) - pad, Math.max(...allY) + pad,
                        PLOT.y0, PLOT.y1);

  const px = t.map(x);
  const parts: string[] = [];
  parts.push(axesFrame({ title: "Belief-adaptive threshold evolution",
                         xLabel: "symbol index t", yLabel: "molecule count",
                         xScale: x, yScale: y }));
  parts.push(`<path class="band band-bit0" d="${bandPath(px, lo0.map(y), hi0.map(y))}" fill="${PALETTE[0]}" fill-opacity="0.25" stroke="none"/>`);
  parts.push(`<path class="band band-bit1" d="${bandPath(px, lo1.map(y), hi1.map(y))}" fill="${PALETTE[1]}" fill-opacity="0.25" stroke="none"/>`);
  parts.push(`<path d="${polylinePath(px, tauB.map(y))}" fill="none" stroke="#111" stroke-width="2"/>`);
  parts.push(`<path d="${polylinePath(px, tauF.map(y))}" fill="none" stroke="#777" stroke-width="2" stroke-dasharray="6,4"/>`);
  for (const b of [0, 1]) {
    const cls = `marker marker-bit${b}`;
    const circles = t
      .map((_, i) => i)
      .filter((i) => bit[i] === b)
      .map((i) => `<circle class="${cls}" cx="${px[i].toFixed(2)}" cy="${y(count[i]).toFixed(2)}" r="4" fill="${PALETTE[b]}" stroke="#333" stroke-width="0.6"/>`);
    parts.push(`<g class="markers-bit${b}">\n${circles.join("\n")}\n</g>`);
  }
  parts.push(legend([
    { label: "mu0 band (x_t = 0)", color: PALETTE[0] },
    { label: "mu1 band (x_t = 1)", color: PALETTE[1] },
    { label: "count, bit 0", color: PALETTE[0], marker: true },
    { label: "count, bit 1", color: PALETTE[1], marker: true },
    { label: "tau (adaptive)", color: "#111" },
    { label: "tau (fixed)", color: "#777", dash: "6,4" },
  ]));
  return document(parts.join("\n"));
}

/** One line per method of `column` against symbol duration. */
function renderMethodLines(table: Table, column: string, title: string,
                           yLabel: string, logY: boolean): string {
  const methods = distinct(table, "method");
  const ts = numbers(table, "ts_seconds");
  let vals = numbers(table, column);
  let floor = 0;
  if (logY) {
    const positive = vals.filter((v) => v > 0);
    if (positive.length === 0) {
      throw new SchemaError(`all '${column}' values are zero; nothing to plot on a log axis`);
    }
    // zero estimates sit on the axis floor rather than vanishing
    floor = Math.min(...positive) / 2;
    vals = vals.map((v) => (v > 0 ? v : floor));
  }
  const x = linearScale(Math.min(...ts), Math.max(...ts), PLOT.x0, PLOT.x1);
  const y = logY
    ? logScale(Math.min(...vals), Math.max(1e-9, Math.max(...vals)), PLOT.y0, PLOT.y1)
    : linearScale(0, Math.max(...vals) * 1.08, PLOT.y0, PLOT.y1);

  const parts: string[] = [];
  parts.push(axesFrame({ title, xLabel: "symbol duration T_s (s)",
                         yLabel, xScale: x, yScale: y, logY }));
  methods.forEach((method, mi) => {
    const idx = table.rows
      .map((_, i) => i)
      .filter((i) => String(table.rows[i].method) === method)
      .sort((a, b) => ts[a] - ts[b]);
    const color = PALETTE[mi % PALETTE.length];
    const pxs = idx.map((i) => x(ts[i]));
    const pys = idx.map((i) => y(vals[i]));
    parts.push(`<path class="series series-${method}" d="${polylinePath(pxs, pys)}" fill="none" stroke="${color}" stroke-width="2"/>`);
    parts.push(idx.map((i, k) =>
      `<circle cx="${pxs[k].toFixed(2)}" cy="${pys[k].toFixed(2)}" r="3" fill="${color}"/>`).join("\n"));
  });
  parts.push(legend(methods.map((m, mi) => ({
    label: m, color: PALETTE[mi % PALETTE.length],
  }))));
  return document(parts.join("\n"));
}

export function render(table: Table, kind: FigureKind): string {
  switch (kind) {
    case "trace":
      return renderTrace(table);
    case "ber":
      return renderMethodLines(table, "ber", "Bit error rate vs symbol duration",
                               "BER", true);
    case "rate":
      return renderMethodLines(table, "rate", "Information rate vs symbol duration",
                               "rate (bits/symbol)", false);
    case "throughput":
      return renderMethodLines(table, "throughput",
                               "Throughput vs symbol duration",
                               "throughput (bits/s)", false);
  }
}

/** Read, validate, render, write; no output file on any error. */
export function renderFile(csvPath: string, kind: FigureKind,
                           outPath: string): void {
  const text = fs.readFileSync(csvPath, "utf-8");
  const svg = render(parseCsv(text, kind), kind);
  fs.writeFileSync(outPath, svg);
}
