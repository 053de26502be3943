import { CoupleSummary, GapReport, SchemaError } from "./csv.js";
import { Canvas, logScale, logTicks } from "./svg.js";

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { left: 70, right: 24, top: 40, bottom: 52 };

const SERIES = {
  mixing: { color: "#1f77b4", label: "mixing time" },
  relaxation: { color: "#2ca02c", label: "relaxation time" },
  coupling: { color: "#d62728", label: "mean coupling time" },
};

function square(canvas: Canvas, x: number, y: number, color: string): void {
  canvas.rect(x - 3.5, y - 3.5, 7, 7, color);
}

function triangle(canvas: Canvas, x: number, y: number, color: string): void {
  canvas.polygon(
    [[x, y - 4.5], [x - 4, y + 3.5], [x + 4, y + 3.5]], color);
}

/** Log-log growth figure: measured times vs n inside fitted n^3/n^4 rails. */
export function renderBoundsFigure(gaps: GapReport[],
                                   couples: CoupleSummary[]): string {
  const byN = new Map<number, GapReport>();
  for (const gap of gaps) {
    if (byN.has(gap.n)) {
      throw new SchemaError(`duplicate gap report for n=${gap.n}`);
    }
    byN.set(gap.n, gap);
  }
  if (byN.size < 2) {
    throw new SchemaError(
      `need gap reports for at least 2 distinct n, got ${byN.size}`);
  }
  const ns = [...byN.keys()].sort((a, b) => a - b);
  const reports = ns.map((n) => byN.get(n) as GapReport);
  const coupleByN = new Map<number, CoupleSummary>();
  for (const c of couples) coupleByN.set(c.n, c);

  // rails pinned to the mixing-time points: the lower cubic passes under
  // every point, the upper quartic above every point
  const cLo = Math.min(...reports.map((r) => r.mixingTime / r.n ** 3));
  const cHi = Math.max(...reports.map((r) => r.mixingTime / r.n ** 4));
  const nLo = (ns[0] ?? 2) * 0.9;
  const nHi = (ns[ns.length - 1] ?? 2) * 1.1;

  const values = [
    ...reports.map((r) => r.mixingTime),
    ...reports.map((r) => r.relaxationTime),
    ...[...coupleByN.values()].map((c) => c.meanTau),
    cLo * nLo ** 3, cLo * nHi ** 3, cHi * nLo ** 4, cHi * nHi ** 4,
  ].filter((v) => v > 0);
  const vLo = Math.min(...values) * 0.8;
  const vHi = Math.max(...values) * 1.25;

  const canvas = new Canvas(WIDTH, HEIGHT);
  const x = logScale(nLo, nHi, MARGIN.left, WIDTH - MARGIN.right);
  const y = logScale(vLo, vHi, HEIGHT - MARGIN.bottom, MARGIN.top);

  canvas.text(MARGIN.left, 22, "Chain timescales vs leaf count (log-log)",
    { size: 15 });

  for (const n of ns) {
    canvas.line(x(n), HEIGHT - MARGIN.bottom, x(n),
      HEIGHT - MARGIN.bottom + 4, "#222");
    canvas.text(x(n), HEIGHT - MARGIN.bottom + 18, String(n),
      { anchor: "middle" });
  }
  for (const tick of logTicks(vLo, vHi)) {
    canvas.line(MARGIN.left - 4, y(tick), MARGIN.left, y(tick), "#222");
    canvas.text(MARGIN.left - 8, y(tick) + 4, String(tick),
      { anchor: "end" });
    canvas.line(MARGIN.left, y(tick), WIDTH - MARGIN.right, y(tick),
      "#eeeeee");
  }
  canvas.line(MARGIN.left, MARGIN.top, MARGIN.left, HEIGHT - MARGIN.bottom,
    "#222");
  canvas.line(MARGIN.left, HEIGHT - MARGIN.bottom, WIDTH - MARGIN.right,
    HEIGHT - MARGIN.bottom, "#222");
  canvas.text((MARGIN.left + WIDTH - MARGIN.right) / 2,
    HEIGHT - MARGIN.bottom + 38, "leaves n", { anchor: "middle" });
  canvas.text(18, (MARGIN.top + HEIGHT - MARGIN.bottom) / 2, "steps",
    { anchor: "middle", rotate: -90 });

  canvas.polyline(
    [[x(nLo), y(cLo * nLo ** 3)], [x(nHi), y(cLo * nHi ** 3)]],
    "#888", 1, "6,4");
  canvas.text(x(nHi), y(cLo * nHi ** 3) + 16, "~ n^3",
    { anchor: "end", fill: "#888" });
  canvas.polyline(
    [[x(nLo), y(cHi * nLo ** 4)], [x(nHi), y(cHi * nHi ** 4)]],
    "#888", 1, "2,3");
  canvas.text(x(nHi), y(cHi * nHi ** 4) - 8, "~ n^4",
    { anchor: "end", fill: "#888" });

  canvas.polyline(reports.map(
    (r) => [x(r.n), y(r.mixingTime)] as [number, number]),
    SERIES.mixing.color, 1);
  for (const r of reports) {
    canvas.circle(x(r.n), y(r.mixingTime), 4, SERIES.mixing.color);
    square(canvas, x(r.n), y(r.relaxationTime), SERIES.relaxation.color);
  }
  for (const n of ns) {
    const c = coupleByN.get(n);
    // a zero mean (coinciding starts) has no place on a log axis
    if (c && c.meanTau > 0) {
      triangle(canvas, x(n), y(c.meanTau), SERIES.coupling.color);
    }
  }

  const legendX = MARGIN.left + 16;
  let rowY = MARGIN.top + 14;
  canvas.rect(legendX - 10, rowY - 14, 190, 3 * 18 + 10, "#ffffff",
    "#cccccc");
  canvas.circle(legendX + 4, rowY - 4, 4, SERIES.mixing.color);
  canvas.text(legendX + 16, rowY, SERIES.mixing.label);
  rowY += 18;
  square(canvas, legendX + 4, rowY - 4, SERIES.relaxation.color);
  canvas.text(legendX + 16, rowY, SERIES.relaxation.label);
  rowY += 18;
  triangle(canvas, legendX + 4, rowY - 4, SERIES.coupling.color);
  canvas.text(legendX + 16, rowY, SERIES.coupling.label);

  return canvas.toString();
}
