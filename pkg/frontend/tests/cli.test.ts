import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { main } from "../src/cli.js";

const FIXTURES = fileURLToPath(new URL("fixtures", import.meta.url));
const fixture = (name: string) => join(FIXTURES, name);

const scratch = mkdtempSync(join(tmpdir(), "plotviz-cli-"));
let counter = 0;
const outPath = () => join(scratch, `fig${counter++}.svg`);

let stderr: string[];

beforeEach(() => {
  stderr = [];
  vi.spyOn(process.stderr, "write").mockImplementation((chunk) => {
    stderr.push(String(chunk));
    return true;
  });
});

afterEach(() => {
  vi.restoreAllMocks();
});

describe("plot-tv", () => {
  it("renders curves from tvdist files", () => {
    const out = outPath();
    const rc = main([
      "plot-tv", fixture("tv6.csv"), fixture("tv7.csv"),
      fixture("tv8.csv"), fixture("tv9.csv"), "--out", out,
    ]);
    expect(rc).toBe(0);
    expect(stderr).toEqual([]);
    const svg = readFileSync(out, "utf8");
    expect(svg.startsWith("<svg ")).toBe(true);
    expect(svg.match(/<polyline /g)).toHaveLength(4);
  });

  it("writes identical bytes on identical inputs", () => {
    const a = outPath();
    const b = outPath();
    expect(main(["plot-tv", fixture("tv6.csv"), "--out", a])).toBe(0);
    expect(main(["plot-tv", fixture("tv6.csv"), "--out", b])).toBe(0);
    expect(readFileSync(a, "utf8")).toBe(readFileSync(b, "utf8"));
  });

  it("rejects the same curve arriving twice", () => {
    const out = outPath();
    const rc = main([
      "plot-tv", fixture("tv6.csv"), fixture("tv6.csv"), "--out", out,
    ]);
    expect(rc).toBe(1);
    expect(stderr.join("")).toContain("duplicate curve for n=6 start=worst");
    expect(existsSync(out)).toBe(false);
  });

  it("leaves no file behind on malformed input", () => {
    const bad = join(scratch, "bad.csv");
    writeFileSync(bad, "t,tv\n0,0.5\n");
    const out = outPath();
    expect(main(["plot-tv", bad, "--out", out])).toBe(1);
    expect(stderr.join("")).toContain(`${bad}:1: expected header`);
    expect(existsSync(out)).toBe(false);
  });

  it("reports a missing input file", () => {
    const out = outPath();
    expect(main(["plot-tv", join(scratch, "ghost.csv"), "--out", out]))
      .toBe(1);
    expect(existsSync(out)).toBe(false);
  });
});

describe("plot-bounds", () => {
  const gapArgs = [6, 7, 8, 9].map((n) => fixture(`gap${n}.json`));

  it("renders gap reports with coupling summaries", () => {
    const out = outPath();
    const rc = main([
      "plot-bounds", ...gapArgs,
      fixture("couple6.csv"), fixture("couple7.csv"), "--out", out,
    ]);
    expect(rc).toBe(0);
    expect(readFileSync(out, "utf8")).toContain("mean coupling time");
  });

  it("needs two distinct n", () => {
    const out = outPath();
    expect(main(["plot-bounds", fixture("gap6.json"), "--out", out])).toBe(1);
    expect(stderr.join("")).toContain("at least 2 distinct n");
    expect(existsSync(out)).toBe(false);
  });

  it("rejects unrecognized input extensions", () => {
    const stray = join(scratch, "notes.txt");
    writeFileSync(stray, "hello");
    expect(main(["plot-bounds", stray, "--out", outPath()])).toBe(1);
    expect(stderr.join("")).toContain("expected a .json gap report");
  });
});

describe("argument handling", () => {
  it.each([
    [[]],
    [["render"]],
    [["plot-tv"]],
    [["plot-tv", "--out", "x.svg"]],
    [["plot-tv", "a.csv"]],
    [["plot-tv", "a.csv", "--out"]],
    [["plot-tv", "a.csv", "--scale", "log", "--out", "x.svg"]],
  ])("returns 2 and prints usage for %j", (argv) => {
    expect(main(argv as string[])).toBe(2);
    expect(stderr.join("")).toContain("usage: plotviz");
  });
});
