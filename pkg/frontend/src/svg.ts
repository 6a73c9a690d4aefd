/**
 * Small deterministic SVG chart toolkit: fixed canvas, default fonts, no
 * randomness, so re-rendering identical data yields an identical file.
 */

export const WIDTH = 760;
export const HEIGHT = 460;
export const MARGIN = { top: 48, right: 72, bottom: 56, left: 64 };

export const PALETTE = [
  "#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed",
  "#db2777", "#0891b2", "#65a30d", "#475569", "#9333ea",
];

const PLOT_W = WIDTH - MARGIN.left - MARGIN.right;
const PLOT_H = HEIGHT - MARGIN.top - MARGIN.bottom;

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  return fn;
}

export function xScale(domain: [number, number]): Scale {
  return linearScale(domain, [MARGIN.left, MARGIN.left + PLOT_W]);
}

export function yScale(domain: [number, number]): Scale {
  return linearScale(domain, [MARGIN.top + PLOT_H, MARGIN.top]);
}

export function niceTicks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain;
  if (!Number.isFinite(lo) || !Number.isFinite(hi) || lo === hi) return [lo];
  const step = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(Math.abs(step))));
  const nice = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => (hi - lo) / s <= count) ?? mag * 10;
  const start = Math.ceil(lo / nice) * nice;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-9; v += nice) ticks.push(Number(v.toFixed(10)));
  return ticks;
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export class SvgCanvas {
  private parts: string[] = [];

  constructor(public readonly title: string) {}

  add(fragment: string) {
    this.parts.push(fragment);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1, dash = "") {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.add(`<line x1="${f(x1)}" y1="${f(y1)}" x2="${f(x2)}" y2="${f(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`);
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 2, opacity = 1) {
    if (points.length === 0) return;
    const pts = points.map(([x, y]) => `${f(x)},${f(y)}`).join(" ");
    this.add(`<polyline fill="none" stroke="${stroke}" stroke-width="${width}" stroke-opacity="${opacity}" points="${pts}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, opacity = 1) {
    this.add(`<rect x="${f(x)}" y="${f(y)}" width="${f(w)}" height="${f(h)}" fill="${fill}" fill-opacity="${opacity}"/>`);
  }

  circle(cx: number, cy: number, r: number, fill: string) {
    this.add(`<circle cx="${f(cx)}" cy="${f(cy)}" r="${r}" fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string, opts: { size?: number; anchor?: string; rotate?: boolean; color?: string } = {}) {
    const size = opts.size ?? 12;
    const anchor = opts.anchor ?? "start";
    const color = opts.color ?? "#111827";
    const transform = opts.rotate ? ` transform="rotate(-90 ${f(x)} ${f(y)})"` : "";
    this.add(`<text x="${f(x)}" y="${f(y)}" font-family="sans-serif" font-size="${size}" text-anchor="${anchor}" fill="${color}"${transform}>${esc(content)}</text>`);
  }

  axes(x: Scale, y: Scale, xLabel: string, yLabel: string, opts: { xTicks?: number[]; yTicks?: number[]; xTickLabels?: string[] } = {}) {
    const x0 = MARGIN.left;
    const x1 = MARGIN.left + PLOT_W;
    const y0 = MARGIN.top + PLOT_H;
    const y1 = MARGIN.top;
    this.line(x0, y0, x1, y0, "#374151", 1.2);
    this.line(x0, y0, x0, y1, "#374151", 1.2);
    const xTicks = opts.xTicks ?? niceTicks(x.domain);
    const labels = opts.xTickLabels;
    xTicks.forEach((t, i) => {
      const px = x(t);
      this.line(px, y0, px, y0 + 5, "#374151");
      this.text(px, y0 + 20, labels ? labels[i] : fmt(t), { anchor: "middle", size: 11 });
    });
    for (const t of opts.yTicks ?? niceTicks(y.domain)) {
      const py = y(t);
      this.line(x0 - 5, py, x0, py, "#374151");
      this.line(x0, py, x1, py, "#e5e7eb", 0.6);
      this.text(x0 - 9, py + 4, fmt(t), { anchor: "end", size: 11 });
    }
    this.text((x0 + x1) / 2, HEIGHT - 14, xLabel, { anchor: "middle", size: 13 });
    this.text(18, (y0 + y1) / 2, yLabel, { anchor: "middle", size: 13, rotate: true });
  }

  rightAxis(y: Scale, label: string) {
    const x1 = MARGIN.left + PLOT_W;
    this.line(x1, MARGIN.top, x1, MARGIN.top + PLOT_H, "#374151", 1.2);
    for (const t of niceTicks(y.domain)) {
      const py = y(t);
      this.line(x1, py, x1 + 5, py, "#374151");
      this.text(x1 + 9, py + 4, fmt(t), { size: 11 });
    }
    this.text(WIDTH - 16, MARGIN.top + PLOT_H / 2, label, { anchor: "middle", size: 13, rotate: true });
  }

  legend(entries: Array<[string, string]>, opts: { dashed?: Set<string> } = {}) {
    let lx = MARGIN.left + 10;
    const ly = MARGIN.top - 18;
    for (const [name, color] of entries) {
      const dash = opts.dashed?.has(name) ? "4,3" : "";
      this.line(lx, ly - 4, lx + 22, ly - 4, color, 3, dash);
      this.text(lx + 27, ly, name, { size: 11 });
      lx += 34 + name.length * 6.4;
    }
  }

  emptyNote(message: string) {
    this.text(WIDTH / 2, HEIGHT / 2, message, { anchor: "middle", size: 14, color: "#6b7280" });
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle" fill="#111827">${esc(this.title)}</text>`,
      ...this.parts,
      "</svg>",
      "",
    ].join("\n");
  }
}

function f(v: number): string {
  return Number.isFinite(v) ? v.toFixed(2).replace(/\.00$/, "") : "0";
}

export function fmt(v: number): string {
  if (!Number.isFinite(v)) return "";
  if (Math.abs(v) >= 1000) return String(Math.round(v));
  return Number(v.toFixed(3)).toString();
}
