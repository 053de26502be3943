/** Deterministic SVG primitives: no dates, no randomness, stable digits. */

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Pixel coordinate with fixed precision so output is byte-stable. */
export function px(v: number): string {
  return v.toFixed(2);
}

export type Scale = (v: number) => number;

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function logScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const l0 = Math.log10(d0);
  const span = Math.log10(d1) - l0 || 1;
  return (v) => r0 + ((Math.log10(v) - l0) / span) * (r1 - r0);
}

export interface TextOptions {
  anchor?: "start" | "middle" | "end";
  size?: number;
  fill?: string;
  rotate?: number;
}

export class Canvas {
  readonly width: number;
  readonly height: number;
  private parts: string[] = [];

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string,
       strokeWidth = 1, dash?: string): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${px(x1)}" y1="${px(y1)}" x2="${px(x2)}" y2="${px(y2)}" ` +
      `stroke="${stroke}" stroke-width="${strokeWidth}"${d}/>`);
  }

  polyline(points: Array<[number, number]>, stroke: string,
           strokeWidth = 1.5, dash?: string): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    const pts = points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" ` +
      `stroke-width="${strokeWidth}"${d}/>`);
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.parts.push(
      `<circle cx="${px(x)}" cy="${px(y)}" r="${r}" fill="${fill}"/>`);
  }

  polygon(points: Array<[number, number]>, fill: string): void {
    const pts = points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
    this.parts.push(`<polygon points="${pts}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string,
       stroke?: string): void {
    const s = stroke ? ` stroke="${stroke}"` : "";
    this.parts.push(
      `<rect x="${px(x)}" y="${px(y)}" width="${px(w)}" height="${px(h)}" ` +
      `fill="${fill}"${s}/>`);
  }

  text(x: number, y: number, content: string, opts: TextOptions = {}): void {
    const anchor = opts.anchor ?? "start";
    const size = opts.size ?? 12;
    const fill = opts.fill ?? "#222";
    const rot = opts.rotate
      ? ` transform="rotate(${opts.rotate} ${px(x)} ${px(y)})"` : "";
    this.parts.push(
      `<text x="${px(x)}" y="${px(y)}" text-anchor="${anchor}" ` +
      `font-size="${size}" fill="${fill}"${rot}>${escapeXml(content)}</text>`);
  }

  toString(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}" ` +
      `font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${this.width}" height="${this.height}" fill="#ffffff"/>`,
      ...this.parts,
      "</svg>",
      "",
    ].join("\n");
  }
}

/** Round ticks covering [0, hi] at a 1-2-5 step, at most ~maxTicks. */
export function niceTicks(hi: number, maxTicks = 7): number[] {
  if (hi <= 0) return [0];
  const rough = hi / (maxTicks - 1);
  const mag = 10 ** Math.floor(Math.log10(rough));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (m * mag >= rough) {
      step = m * mag;
      break;
    }
  }
  const out: number[] = [];
  for (let v = 0; v <= hi + 1e-9; v += step) out.push(Number(v.toPrecision(12)));
  return out;
}

/** Ticks at 1-2-5 times powers of ten inside [lo, hi] for log axes. */
export function logTicks(lo: number, hi: number): number[] {
  const out: number[] = [];
  const start = Math.floor(Math.log10(lo));
  const end = Math.ceil(Math.log10(hi));
  for (let e = start; e <= end; e++) {
    for (const m of [1, 2, 5]) {
      const v = m * 10 ** e;
      if (v >= lo * (1 - 1e-12) && v <= hi * (1 + 1e-12)) out.push(v);
    }
  }
  return out;
}
