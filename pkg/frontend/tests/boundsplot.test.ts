import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { renderBoundsFigure } from "../src/boundsplot.js";
import {
  readCoupleFile,
  readGapReport,
  SchemaError,
} from "../src/csv.js";

const FIXTURES = fileURLToPath(new URL("fixtures", import.meta.url));

const gaps = [6, 7, 8, 9].map(
  (n) => readGapReport(join(FIXTURES, `gap${n}.json`)));
const couples = [6, 7].map(
  (n) => readCoupleFile(join(FIXTURES, `couple${n}.csv`)));

describe("renderBoundsFigure", () => {
  it("draws the three series and both reference rails", () => {
    const svg = renderBoundsFigure(gaps, couples);
    expect(svg).toContain("mixing time");
    expect(svg).toContain("relaxation time");
    expect(svg).toContain("mean coupling time");
    expect(svg).toContain("~ n^3");
    expect(svg).toContain("~ n^4");
    expect(svg.match(/<polygon /g)).toHaveLength(couples.length + 1);
  });

  it("keeps every mixing time between the fitted rails", () => {
    const cLo = Math.min(...gaps.map((g) => g.mixingTime / g.n ** 3));
    const cHi = Math.max(...gaps.map((g) => g.mixingTime / g.n ** 4));
    for (const g of gaps) {
      expect(g.mixingTime).toBeGreaterThanOrEqual(cLo * g.n ** 3);
      expect(g.mixingTime).toBeLessThanOrEqual(cHi * g.n ** 4);
    }
  });

  it("is deterministic and order independent", () => {
    const svg = renderBoundsFigure(gaps, couples);
    expect(renderBoundsFigure([...gaps].reverse(), [...couples].reverse()))
      .toBe(svg);
  });

  it("renders without coupling summaries", () => {
    const svg = renderBoundsFigure(gaps, []);
    expect(svg).toContain("mixing time");
    expect(svg.match(/<polygon /g)).toHaveLength(1);
  });

  it("drops a zero mean coupling time instead of plotting it", () => {
    const zero = { n: 6, mode: "unlabeled", replicates: 50, timeouts: 0,
                   meanTau: 0 };
    const svg = renderBoundsFigure(gaps, [zero]);
    expect(svg).not.toMatch(/NaN|Infinity/);
    expect(svg.match(/<polygon /g)).toHaveLength(1);
  });

  it("never emits non-finite coordinates", () => {
    expect(renderBoundsFigure(gaps, couples)).not.toMatch(/NaN|Infinity/);
  });

  it("needs at least two distinct n", () => {
    expect(() => renderBoundsFigure([gaps[0]!], []))
      .toThrowError(SchemaError);
    expect(() => renderBoundsFigure([gaps[0]!], []))
      .toThrowError("at least 2 distinct n");
  });

  it("rejects duplicate reports for one n", () => {
    expect(() => renderBoundsFigure([gaps[0]!, gaps[1]!, gaps[0]!], []))
      .toThrowError("duplicate gap report for n=6");
  });
});
