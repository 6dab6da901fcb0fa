/** Loaders for the core's trial-record formats (CSV long form, binary frame). */

import { readFileSync } from "node:fs";

export interface TrialRecords {
  digest: string;
  seed: number | null;
  kept: number[];
  /** raw[k][port][trial]; null when the run kept processed values only. */
  raw: Float64Array[][] | null;
  processed: Float64Array[][];
  nTrials: number;
}

const PORTS = ["A", "B", "C", "D"];
const MAGIC = "QRLFRAME";

export function readFrame(path: string): TrialRecords {
  const buf = readFileSync(path);
  if (buf.subarray(0, 8).toString("ascii") !== MAGIC) {
    throw new Error(`${path}: not a trial frame (bad magic)`);
  }
  const version = buf.readUInt32LE(8);
  if (version !== 1) {
    throw new Error(`${path}: unsupported frame version ${version}`);
  }
  const digest = buf.subarray(12, 28).toString("ascii");
  let off = 28;
  const nKept = Number(buf.readBigUInt64LE(off));
  const nPorts = Number(buf.readBigUInt64LE(off + 8));
  const nTrials = Number(buf.readBigUInt64LE(off + 16));
  off += 24;
  const seed = Number(buf.readBigInt64LE(off));
  off += 8;
  const kept: number[] = [];
  for (let i = 0; i < nKept; i += 1) {
    kept.push(Number(buf.readBigUInt64LE(off)));
    off += 8;
  }
  const readBlock = (): Float64Array[][] => {
    const block: Float64Array[][] = [];
    for (let k = 0; k < nKept; k += 1) {
      const perPort: Float64Array[] = [];
      for (let p = 0; p < nPorts; p += 1) {
        const arr = new Float64Array(nTrials);
        for (let t = 0; t < nTrials; t += 1) {
          arr[t] = buf.readDoubleLE(off);
          off += 8;
        }
        perPort.push(arr);
      }
      block.push(perPort);
    }
    return block;
  };
  const raw = readBlock();
  const processed = readBlock();
  if (off !== buf.length) {
    throw new Error(`${path}: trailing bytes after frame payload`);
  }
  return { digest, seed, kept, raw, processed, nTrials };
}

export function readRecordsCsv(path: string): TrialRecords {
  const text = readFileSync(path, "utf8");
  const lines = text.split("\n");
  const header = lines[0];
  const match = header.match(/^# run_digest=(\S+)/);
  if (!match) {
    throw new Error(`${path}: missing run digest header`);
  }
  const digest = match[1];
  const seedMatch = header.match(/seed=(-?\d+)/);
  const keptSet = new Set<number>();
  let maxTrial = -1;
  const cells: Array<[number, number, number, number, number]> = [];
  for (const line of lines.slice(2)) {
    if (!line.trim()) {
      continue;
    }
    const [trial, macronode, port, raw, processed] = line.split(",");
    const k = parseInt(macronode, 10);
    const t = parseInt(trial, 10);
    keptSet.add(k);
    maxTrial = Math.max(maxTrial, t);
    cells.push([t, k, PORTS.indexOf(port), parseFloat(raw), parseFloat(processed)]);
  }
  const kept = [...keptSet].sort((a, b) => a - b);
  const index = new Map(kept.map((k, i) => [k, i]));
  const nTrials = maxTrial + 1;
  const alloc = () =>
    kept.map(() => PORTS.map(() => new Float64Array(nTrials)));
  const raw = alloc();
  const processed = alloc();
  for (const [t, k, p, r, m] of cells) {
    const i = index.get(k)!;
    raw[i][p][t] = r;
    processed[i][p][t] = m;
  }
  return {
    digest,
    seed: seedMatch ? parseInt(seedMatch[1], 10) : null,
    kept,
    raw,
    processed,
    nTrials,
  };
}
