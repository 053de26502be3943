import { CurveGroup, SchemaError } from "./csv.js";
import { Canvas, linearScale, niceTicks } from "./svg.js";

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { left: 64, right: 24, top: 40, bottom: 52 };

// matplotlib tab palette, stable assignment by curve order after sorting
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#7f7f7f"];

/** One figure, one line per curve, curves sorted by n then start. */
export function renderTvFigure(groups: CurveGroup[]): string {
  if (groups.length === 0) throw new SchemaError("no curves to plot");
  const curves = [...groups].sort(
    (a, b) => a.n - b.n || a.start.localeCompare(b.start));
  const tMax = Math.max(1, ...curves.map(
    (c) => c.points[c.points.length - 1]?.t ?? 0));

  const canvas = new Canvas(WIDTH, HEIGHT);
  const x = linearScale(0, tMax, MARGIN.left, WIDTH - MARGIN.right);
  const y = linearScale(0, 1, HEIGHT - MARGIN.bottom, MARGIN.top);

  canvas.text(MARGIN.left, 22, "Distance to stationarity from the worst start",
    { size: 15 });

  for (const tick of niceTicks(tMax)) {
    canvas.line(x(tick), HEIGHT - MARGIN.bottom, x(tick),
      HEIGHT - MARGIN.bottom + 4, "#222");
    canvas.text(x(tick), HEIGHT - MARGIN.bottom + 18, String(tick),
      { anchor: "middle" });
  }
  for (const tick of [0, 0.25, 0.5, 0.75, 1]) {
    canvas.line(MARGIN.left - 4, y(tick), MARGIN.left, y(tick), "#222");
    canvas.text(MARGIN.left - 8, y(tick) + 4, tick.toFixed(2),
      { anchor: "end" });
    if (tick > 0) {
      canvas.line(MARGIN.left, y(tick), WIDTH - MARGIN.right, y(tick),
        "#eeeeee");
    }
  }
  canvas.line(MARGIN.left, MARGIN.top, MARGIN.left, HEIGHT - MARGIN.bottom,
    "#222");
  canvas.line(MARGIN.left, HEIGHT - MARGIN.bottom, WIDTH - MARGIN.right,
    HEIGHT - MARGIN.bottom, "#222");
  canvas.text((MARGIN.left + WIDTH - MARGIN.right) / 2,
    HEIGHT - MARGIN.bottom + 38, "steps t", { anchor: "middle" });
  canvas.text(18, (MARGIN.top + HEIGHT - MARGIN.bottom) / 2, "TV distance",
    { anchor: "middle", rotate: -90 });

  // the mixing threshold
  canvas.line(MARGIN.left, y(0.25), WIDTH - MARGIN.right, y(0.25), "#555",
    1, "6,4");
  canvas.text(WIDTH - MARGIN.right - 4, y(0.25) - 6, "1/4",
    { anchor: "end", fill: "#555" });

  curves.forEach((curve, i) => {
    const color = COLORS[i % COLORS.length] ?? "#222";
    const pts = curve.points.map(
      (p) => [x(p.t), y(p.tv)] as [number, number]);
    if (pts.length === 1) {
      const [only] = pts;
      if (only) canvas.circle(only[0], only[1], 3, color);
    } else {
      canvas.polyline(pts, color);
    }
  });

  const legendX = WIDTH - MARGIN.right - 150;
  const legendY = MARGIN.top + 8;
  canvas.rect(legendX - 10, legendY - 14, 150, curves.length * 18 + 10,
    "#ffffff", "#cccccc");
  curves.forEach((curve, i) => {
    const color = COLORS[i % COLORS.length] ?? "#222";
    const rowY = legendY + i * 18;
    canvas.line(legendX, rowY - 4, legendX + 22, rowY - 4, color, 2);
    const suffix = curve.lazy ? ", lazy" : "";
    canvas.text(legendX + 28, rowY, `n = ${curve.n}${suffix}`, { size: 12 });
  });

  return canvas.toString();
}
