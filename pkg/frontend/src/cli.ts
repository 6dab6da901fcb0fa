/**
 * Thin runner binding: every call shells out to the core's command-line
 * interface and exchanges data through its text, CSV/JSON, and frame
 * formats.  No physics is computed here.
 */

import { execFile } from "node:child_process";
import { mkdtemp, readFile, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

import { readFrame, readRecordsCsv, TrialRecords } from "./records.js";

const execFileAsync = promisify(execFile);

export interface LatticeOptions {
  n?: number;
  seed?: number;
  squeezingDb?: number | [number, number, number, number];
  pathEfficiency?: [number, number];
  totalMacronodes?: number;
  configFile?: string;
}

export interface RunOutput {
  meta: Record<string, unknown>;
  rows: Array<Record<string, number | string | boolean>>;
  stdout: string;
}

const CLI = process.env.QRLSIM_CLI ?? "qrlsim";

function latticeArgs(opts: LatticeOptions): string[] {
  const args: string[] = [];
  if (opts.configFile !== undefined) {
    args.push("--config", opts.configFile);
  }
  if (opts.n !== undefined) {
    args.push("--n", String(opts.n));
  }
  if (opts.seed !== undefined) {
    args.push("--seed", String(opts.seed));
  }
  if (opts.squeezingDb !== undefined) {
    const db = Array.isArray(opts.squeezingDb)
      ? opts.squeezingDb.join(",")
      : String(opts.squeezingDb);
    args.push("--squeezing-db", db);
  }
  if (opts.pathEfficiency !== undefined) {
    args.push("--path-efficiency", opts.pathEfficiency.join(","));
  }
  if (opts.totalMacronodes !== undefined) {
    args.push("--total-macronodes", String(opts.totalMacronodes));
  }
  return args;
}

async function withTempDir<T>(fn: (dir: string) => Promise<T>): Promise<T> {
  const dir = await mkdtemp(join(tmpdir(), "qrlsdk-"));
  try {
    return await fn(dir);
  } finally {
    await rm(dir, { recursive: true, force: true });
  }
}

export async function runCli(args: string[]): Promise<string> {
  try {
    const { stdout } = await execFileAsync(CLI, args, { maxBuffer: 1 << 28 });
    return stdout;
  } catch (err) {
    const e = err as { code?: number; stderr?: string; message: string };
    throw new Error(
      `qrlsim ${args[0]} failed (exit ${e.code ?? "?"}): ${e.stderr?.trim() ?? e.message}`,
    );
  }
}

/** Lower program text to schedule text via the core compiler. */
export async function compileProgram(
  programText: string,
  opts: LatticeOptions = {},
): Promise<{ scheduleText: string; stdout: string }> {
  return withTempDir(async (dir) => {
    const programPath = join(dir, "program.qrlp");
    const schedulePath = join(dir, "schedule.qrls");
    await writeFile(programPath, programText);
    const stdout = await runCli([
      "compile",
      ...latticeArgs(opts),
      "--program",
      programPath,
      "--schedule-out",
      schedulePath,
    ]);
    return { scheduleText: await readFile(schedulePath, "utf8"), stdout };
  });
}

export interface SimulateOptions extends LatticeOptions {
  trials?: number;
  keep?: "all" | "readouts";
  recordFormat?: "frame" | "csv";
}

/** Run schedule text through the sampler; returns the trial records. */
export async function simulateSchedule(
  scheduleText: string,
  opts: SimulateOptions = {},
): Promise<TrialRecords> {
  return withTempDir(async (dir) => {
    const schedulePath = join(dir, "schedule.qrls");
    await writeFile(schedulePath, scheduleText);
    const format = opts.recordFormat ?? "frame";
    await runCli([
      "simulate",
      ...latticeArgs(opts),
      "--schedule",
      schedulePath,
      "--trials",
      String(opts.trials ?? 1000),
      "--keep",
      opts.keep ?? "all",
      "--record-format",
      format,
      "--out",
      dir,
    ]);
    return format === "frame"
      ? readFrame(join(dir, "records.qrlf"))
      : readRecordsCsv(join(dir, "records.csv"));
  });
}

async function runReport(
  command: string,
  stem: string,
  extraArgs: string[],
  opts: LatticeOptions,
): Promise<RunOutput> {
  return withTempDir(async (dir) => {
    const stdout = await runCli([
      command,
      ...latticeArgs(opts),
      ...extraArgs,
      "--format",
      "json",
      "--no-figures",
      "--out",
      dir,
    ]);
    const payload = JSON.parse(await readFile(join(dir, `${stem}.json`), "utf8"));
    return { meta: payload.meta, rows: payload.rows, stdout };
  });
}

export interface TeleportOptions extends LatticeOptions {
  kind?: "parallel" | "helical";
  steps?: number[];
  trials?: number;
  displacementSd?: number;
}

export async function runTeleport(opts: TeleportOptions = {}): Promise<RunOutput> {
  const kind = opts.kind ?? "parallel";
  const args = ["--kind", kind, "--steps", (opts.steps ?? [0, 1, 2]).join(",")];
  if (opts.trials !== undefined) {
    args.push("--trials", String(opts.trials));
  }
  if (opts.displacementSd !== undefined) {
    args.push("--displacement-sd", String(opts.displacementSd));
  }
  return runReport("teleport", `teleport_${kind}`, args, opts);
}

export interface RouteOptions extends LatticeOptions {
  order?: "ascending" | "descending";
  nModes?: number;
  trials?: number;
}

export async function runRoute(opts: RouteOptions = {}): Promise<RunOutput> {
  const order = opts.order ?? "ascending";
  const args = ["--order", order];
  if (opts.nModes !== undefined) {
    args.push("--n-modes", String(opts.nModes));
  }
  if (opts.trials !== undefined) {
    args.push("--trials", String(opts.trials));
  }
  return runReport("route", `route_${order}`, args, opts);
}

export interface NullifierOptions extends LatticeOptions {
  steps?: number;
  trials?: number;
}

export async function runNullifiers(opts: NullifierOptions = {}): Promise<RunOutput> {
  const args: string[] = [];
  if (opts.steps !== undefined) {
    args.push("--steps", String(opts.steps));
  }
  if (opts.trials !== undefined) {
    args.push("--trials", String(opts.trials));
  }
  return runReport("nullifiers", "nullifiers", args, opts);
}

export interface TomographyOptions extends LatticeOptions {
  kind?: "single" | "cz";
  trials?: number;
  method?: "mc" | "oracle";
  gridA?: [number, number, number];
  gridB?: [number, number, number];
}

export async function runTomography(opts: TomographyOptions = {}): Promise<RunOutput> {
  const kind = opts.kind ?? "single";
  const args = ["--kind", kind];
  if (opts.trials !== undefined) {
    args.push("--trials", String(opts.trials));
  }
  if (opts.method !== undefined) {
    args.push("--method", opts.method);
  }
  if (opts.gridA) {
    args.push("--grid-a", ...opts.gridA.map(String));
  }
  if (opts.gridB) {
    args.push("--grid-b", ...opts.gridB.map(String));
  }
  return runReport("tomography", `tomography_${kind}`, args, opts);
}
