import { readFileSync } from "node:fs";

/** Raised for any malformed input file; messages carry path:line. */
export class SchemaError extends Error {}

export interface CurvePoint {
  t: number;
  tv: number;
}

/** One TV curve: the rows of a (n, start) group, t strictly increasing. */
export interface CurveGroup {
  n: number;
  mode: string;
  lazy: boolean;
  start: string;
  points: CurvePoint[];
}

export interface GapReport {
  n: number;
  mode: string;
  relaxationTime: number;
  mixingTime: number;
}

export interface CoupleSummary {
  n: number;
  mode: string;
  replicates: number;
  timeouts: number;
  meanTau: number;
}

const CURVE_HEADER = "n,mode,lazy,start,t,tv";
const COUPLE_PREFIX = ["n", "mode", "seed", "replicate", "tau"];

function fail(path: string, line: number, msg: string): never {
  throw new SchemaError(`${path}:${line}: ${msg}`);
}

interface NumberedLine {
  no: number;
  text: string;
}

/** Data lines with their 1-based physical numbers; '#' comments skipped. */
function dataLines(path: string): NumberedLine[] {
  const raw = readFileSync(path, "utf8").split("\n");
  const out: NumberedLine[] = [];
  for (let i = 0; i < raw.length; i++) {
    const text = (raw[i] ?? "").trim();
    if (text === "" || text.startsWith("#")) continue;
    out.push({ no: i + 1, text });
  }
  return out;
}

function intField(path: string, line: number, name: string, v: string): number {
  if (!/^-?\d+$/.test(v)) fail(path, line, `${name} must be an integer, got "${v}"`);
  return Number(v);
}

function floatField(path: string, line: number, name: string, v: string): number {
  const x = Number(v);
  if (v === "" || !Number.isFinite(x)) {
    fail(path, line, `${name} must be a finite number, got "${v}"`);
  }
  return x;
}

export function readCurveFile(path: string): CurveGroup[] {
  const lines = dataLines(path);
  const header = lines[0];
  if (!header) throw new SchemaError(`${path}: no header row`);
  if (header.text !== CURVE_HEADER) {
    fail(path, header.no, `expected header "${CURVE_HEADER}", got "${header.text}"`);
  }
  const groups: CurveGroup[] = [];
  const seen = new Set<string>();
  let current: CurveGroup | null = null;
  for (const { no, text } of lines.slice(1)) {
    const fields = text.split(",");
    if (fields.length !== 6) fail(path, no, `expected 6 fields, got ${fields.length}`);
    const [nStr, mode, lazyStr, start, tStr, tvStr] = fields as [
      string, string, string, string, string, string];
    const n = intField(path, no, "n", nStr);
    if (n < 2) fail(path, no, `n must be >= 2, got ${n}`);
    if (lazyStr !== "0" && lazyStr !== "1") fail(path, no, `lazy must be 0 or 1, got "${lazyStr}"`);
    const t = intField(path, no, "t", tStr);
    const tv = floatField(path, no, "tv", tvStr);
    if (tv < 0 || tv > 1) fail(path, no, `tv must lie in [0, 1], got ${tv}`);
    const key = `${n}|${start}`;
    if (current === null || `${current.n}|${current.start}` !== key) {
      if (seen.has(key)) fail(path, no, `rows for n=${n}, start=${start} are not contiguous`);
      seen.add(key);
      current = { n, mode, lazy: lazyStr === "1", start, points: [] };
      groups.push(current);
    }
    if (mode !== current.mode) fail(path, no, `mode changed within a group: "${mode}"`);
    if ((lazyStr === "1") !== current.lazy) fail(path, no, "lazy changed within a group");
    const last = current.points[current.points.length - 1];
    if (last && t <= last.t) {
      fail(path, no, `t must be strictly increasing within a group (${last.t} then ${t})`);
    }
    current.points.push({ t, tv });
  }
  if (groups.length === 0) throw new SchemaError(`${path}: no data rows`);
  return groups;
}

export function readCoupleFile(path: string): CoupleSummary {
  const lines = dataLines(path);
  const header = lines[0];
  if (!header) throw new SchemaError(`${path}: no header row`);
  const cols = header.text.split(",");
  const prefixOk = COUPLE_PREFIX.every((name, i) => cols[i] === name);
  const tCols = cols.slice(COUPLE_PREFIX.length);
  const tOk = tCols.length > 0 && tCols.every(
    (c, i) => c === `T_${tCols.length - i}`);
  if (!prefixOk || !tOk) {
    fail(path, header.no,
      `expected header "n,mode,seed,replicate,tau,T_k..T_1", got "${header.text}"`);
  }
  let n = 0;
  let mode = "";
  let timeouts = 0;
  let sum = 0;
  let completed = 0;
  let rows = 0;
  for (const { no, text } of lines.slice(1)) {
    const fields = text.split(",");
    if (fields.length !== cols.length) {
      fail(path, no, `expected ${cols.length} fields, got ${fields.length}`);
    }
    const rowN = intField(path, no, "n", fields[0] ?? "");
    if (rows === 0) {
      n = rowN;
      mode = fields[1] ?? "";
      if (tCols.length !== n - 3) {
        fail(path, no, `n=${n} rows need ${n - 3} T columns, header has ${tCols.length}`);
      }
    } else if (rowN !== n) {
      fail(path, no, `n changed from ${n} to ${rowN}`);
    }
    const tau = intField(path, no, "tau", fields[4] ?? "");
    if (tau < -1) fail(path, no, `tau must be >= -1, got ${tau}`);
    if (tau === -1) {
      timeouts++;
    } else {
      sum += tau;
      completed++;
    }
    rows++;
  }
  if (rows === 0) throw new SchemaError(`${path}: no data rows`);
  if (completed === 0) throw new SchemaError(`${path}: every replicate timed out`);
  return { n, mode, replicates: rows, timeouts, meanTau: sum / completed };
}

export function readGapReport(path: string): GapReport {
  const text = readFileSync(path, "utf8");
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new SchemaError(`${path}: invalid JSON (${(err as Error).message})`);
  }
  if (typeof raw !== "object" || raw === null) {
    throw new SchemaError(`${path}: expected a JSON object`);
  }
  const obj = raw as Record<string, unknown>;
  const n = obj["n"];
  if (typeof n !== "number" || !Number.isInteger(n) || n < 2) {
    throw new SchemaError(`${path}: "n" must be an integer >= 2`);
  }
  const mode = typeof obj["mode"] === "string" ? (obj["mode"] as string) : "";
  const relax = obj["relaxation_time"];
  if (typeof relax !== "number" || !(relax > 0)) {
    throw new SchemaError(`${path}: "relaxation_time" must be a positive number`);
  }
  const mix = obj["mixing_time"];
  if (typeof mix !== "number" || !Number.isInteger(mix) || mix < 0) {
    throw new SchemaError(
      `${path}: "mixing_time" must be a non-negative integer (rerun with a larger --t-max)`);
  }
  return { n, mode, relaxationTime: relax, mixingTime: mix };
}
