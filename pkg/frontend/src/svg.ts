// Minimal hand-rolled SVG building blocks shared by all figure kinds.

export const WIDTH = 860;
export const HEIGHT = 520;
export const MARGIN = { top: 40, right: 170, bottom: 55, left: 70 };

export interface Scale {
  (v: number): number;
  ticks(): number[];
}

export function linearScale(lo: number, hi: number,
                            outLo: number, outHi: number): Scale {
  if (hi === lo) {
    hi = lo + 1;
  }
  const f = ((v: number) =>
    outLo + ((v - lo) / (hi - lo)) * (outHi - outLo)) as Scale;
  f.ticks = () => {
    const span = hi - lo;
    const step = Math.pow(10, Math.floor(Math.log10(span / 5)));
    const mult = span / step > 25 ? 5 : span / step > 12 ? 2 : 1;
    const s = step * mult;
    const out: number[] = [];
    for (let t = Math.ceil(lo / s) * s; t <= hi + 1e-9; t += s) {
      out.push(Number(t.toPrecision(10)));
    }
    return out;
  };
  return f;
}

/** Log10 scale; callers must keep inputs strictly positive. */
export function logScale(lo: number, hi: number,
                         outLo: number, outHi: number): Scale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const lin = linearScale(llo, lhi, outLo, outHi);
  const f = ((v: number) => lin(Math.log10(v))) as Scale;
  f.ticks = () => {
    const out: number[] = [];
    for (let e = Math.floor(llo); e <= Math.ceil(lhi); e += 1) {
      out.push(Math.pow(10, e));
    }
    return out.filter((t) => t >= lo / 1.001 && t <= hi * 1.001);
  };
  return f;
}

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

const fmt = (v: number) =>
  Math.abs(v) >= 1e4 || (v !== 0 && Math.abs(v) < 1e-3)
    ? v.toExponential(0) : String(Number(v.toPrecision(6)));

export function polylinePath(xs: number[], ys: number[]): string {
  return xs.map((x, i) => `${i === 0 ? "M" : "L"}${x.toFixed(2)},${ys[i].toFixed(2)}`).join(" ");
}

/** Closed band between a lower and an upper series. */
export function bandPath(xs: number[], lows: number[], highs: number[]): string {
  const fwd = polylinePath(xs, highs);
  const back = [...xs].reverse().map((x, i) =>
    `L${x.toFixed(2)},${lows[xs.length - 1 - i].toFixed(2)}`).join(" ");
  return `${fwd} ${back} Z`;
}

export interface FrameOpts {
  title: string;
  xLabel: string;
  yLabel: string;
  xScale: Scale;
  yScale: Scale;
  logY?: boolean;
}

export function axesFrame(o: FrameOpts): string {
  const { top, right, bottom, left } = MARGIN;
  const x0 = left, x1 = WIDTH - right;
  const y0 = HEIGHT - bottom, y1 = top;
  const parts: string[] = [];
  parts.push(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333"/>`);
  for (const t of o.xScale.ticks()) {
    const px = o.xScale(t);
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="#333"/>`);
    parts.push(`<text x="${px}" y="${y0 + 20}" text-anchor="middle" font-size="12">${fmt(t)}</text>`);
  }
  for (const t of o.yScale.ticks()) {
    const py = o.yScale(t);
    const label = o.logY ? `1e${Math.round(Math.log10(t))}` : fmt(t);
    parts.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`);
    parts.push(`<text x="${x0 - 9}" y="${py + 4}" text-anchor="end" font-size="12">${label}</text>`);
    parts.push(`<line x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" stroke="#ddd" stroke-dasharray="2,3"/>`);
  }
  parts.push(`<text x="${(x0 + x1) / 2}" y="${y0 + 42}" text-anchor="middle" font-size="14">${esc(o.xLabel)}</text>`);
  parts.push(`<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="14" transform="rotate(-90 18 ${(y0 + y1) / 2})">${esc(o.yLabel)}</text>`);
  parts.push(`<text x="${(x0 + x1) / 2}" y="${top - 14}" text-anchor="middle" font-size="16" font-weight="bold">${esc(o.title)}</text>`);
  return parts.join("\n");
}

export interface LegendEntry {
  label: string;
  color: string;
  marker?: boolean;
  dash?: string;
}

export function legend(entries: LegendEntry[]): string {
  const x = WIDTH - MARGIN.right + 14;
  const parts = [`<g class="legend">`];
  entries.forEach((e, i) => {
    const y = MARGIN.top + 12 + i * 22;
    if (e.marker) {
      parts.push(`<circle cx="${x + 11}" cy="${y}" r="4" fill="${e.color}"/>`);
    } else {
      parts.push(`<line x1="${x}" y1="${y}" x2="${x + 22}" y2="${y}" stroke="${e.color}" stroke-width="2"${e.dash ? ` stroke-dasharray="${e.dash}"` : ""}/>`);
    }
    parts.push(`<text x="${x + 28}" y="${y + 4}" font-size="12">${esc(e.label)}</text>`);
  });
  parts.push("</g>");
  return parts.join("\n");
}

export function document(body: string): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">
<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>
${body}
</svg>
`;
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                        "#9467bd", "#8c564b", "#17becf"];
