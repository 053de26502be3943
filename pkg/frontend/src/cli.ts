#!/usr/bin/env node
import { writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import process from "node:process";

import { renderBoundsFigure } from "./boundsplot.js";
import {
  CoupleSummary,
  CurveGroup,
  GapReport,
  readCoupleFile,
  readCurveFile,
  readGapReport,
  SchemaError,
} from "./csv.js";
import { renderTvFigure } from "./tvplot.js";

const USAGE = `usage: plotviz <command> <input...> --out <figure.svg>

commands:
  plot-tv      render total-variation decay curves from tvdist CSV files
  plot-bounds  render timescale growth from gap JSON and couple CSV files

Inputs are files written by the treeswap command line tool. The figure is
rendered fully in memory and written only on success.`;

interface Args {
  inputs: string[];
  out: string;
}

function parseArgs(argv: string[]): Args {
  const inputs: string[] = [];
  let out: string | null = null;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i] as string;
    if (arg === "--out") {
      const value = argv[++i];
      if (value === undefined) throw new SchemaError("--out needs a path");
      out = value;
    } else if (arg.startsWith("-")) {
      throw new SchemaError(`unknown flag ${arg}`);
    } else {
      inputs.push(arg);
    }
  }
  if (inputs.length === 0) throw new SchemaError("no input files given");
  if (out === null) throw new SchemaError("missing required --out");
  return { inputs, out };
}

function plotTv(args: Args): string {
  const groups: CurveGroup[] = [];
  const seen = new Set<string>();
  for (const path of args.inputs) {
    for (const group of readCurveFile(path)) {
      const key = `${group.n}/${group.mode}/${group.lazy}/${group.start}`;
      if (seen.has(key)) {
        throw new SchemaError(
          `${path}: duplicate curve for n=${group.n} start=${group.start}`);
      }
      seen.add(key);
      groups.push(group);
    }
  }
  return renderTvFigure(groups);
}

function plotBounds(args: Args): string {
  const gaps: GapReport[] = [];
  const couples: CoupleSummary[] = [];
  for (const path of args.inputs) {
    if (path.endsWith(".json")) {
      gaps.push(readGapReport(path));
    } else if (path.endsWith(".csv")) {
      couples.push(readCoupleFile(path));
    } else {
      throw new SchemaError(
        `${path}: expected a .json gap report or .csv couple summary`);
    }
  }
  return renderBoundsFigure(gaps, couples);
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command !== "plot-tv" && command !== "plot-bounds") {
    process.stderr.write(USAGE + "\n");
    return 2;
  }
  let args: Args;
  try {
    args = parseArgs(rest);
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n\n${USAGE}\n`);
    return 2;
  }
  try {
    const svg = command === "plot-tv" ? plotTv(args) : plotBounds(args);
    writeFileSync(args.out, svg);
  } catch (err) {
    if (err instanceof SchemaError ||
        (err as NodeJS.ErrnoException).code === "ENOENT") {
      process.stderr.write(`error: ${(err as Error).message}\n`);
      return 1;
    }
    throw err;
  }
  return 0;
}

if (process.argv[1] &&
    import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
