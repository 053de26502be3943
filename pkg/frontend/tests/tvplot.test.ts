import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { CurveGroup, readCurveFile, SchemaError } from "../src/csv.js";
import { renderTvFigure } from "../src/tvplot.js";

const FIXTURES = fileURLToPath(new URL("fixtures", import.meta.url));

function fixtureCurves(...names: string[]): CurveGroup[] {
  return names.flatMap((name) => readCurveFile(join(FIXTURES, name)));
}

describe("renderTvFigure", () => {
  const curves = fixtureCurves("tv6.csv", "tv7.csv", "tv8.csv", "tv9.csv");

  it("draws one polyline per curve", () => {
    const svg = renderTvFigure(curves);
    expect(svg.startsWith("<svg ")).toBe(true);
    expect(svg.match(/<polyline /g)).toHaveLength(4);
  });

  it("lists legend entries in ascending n", () => {
    const svg = renderTvFigure(curves);
    const positions = [6, 7, 8, 9].map((n) => svg.indexOf(`n = ${n}`));
    for (const pos of positions) expect(pos).toBeGreaterThan(0);
    expect([...positions].sort((a, b) => a - b)).toEqual(positions);
  });

  it("marks the quarter threshold with a dashed line", () => {
    const svg = renderTvFigure(curves);
    expect(svg).toContain('stroke-dasharray="6,4"');
    expect(svg).toContain(">1/4<");
  });

  it("is deterministic", () => {
    expect(renderTvFigure(curves)).toBe(renderTvFigure(curves));
  });

  it("does not depend on input order", () => {
    const reversed = [...curves].reverse();
    expect(renderTvFigure(reversed)).toBe(renderTvFigure(curves));
  });

  it("renders a flat zero curve", () => {
    const svg = renderTvFigure(fixtureCurves("tv3.csv"));
    expect(svg).toContain("n = 3");
    expect(svg.match(/<polyline /g)).toHaveLength(1);
  });

  it("renders a single-point curve as a dot", () => {
    const lone: CurveGroup = {
      n: 4, mode: "unlabeled", lazy: true, start: "worst",
      points: [{ t: 0, tv: 0.5 }],
    };
    const svg = renderTvFigure([lone]);
    expect(svg).not.toContain("<polyline");
    expect(svg).toContain('r="3"');
    expect(svg).toContain("n = 4, lazy");
  });

  it("rejects an empty curve list", () => {
    expect(() => renderTvFigure([])).toThrowError(SchemaError);
    expect(() => renderTvFigure([])).toThrowError("no curves to plot");
  });
});
