/**
 * SDK parity suite: the binding must produce byte-identical schedules and
 * numerically identical seeded results versus driving the CLI directly.
 */

import { execFile } from "node:child_process";
import { mkdtemp, readFile, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";
import { afterAll, describe, expect, it } from "vitest";

import {
  CircuitBuilder,
  ProgramValidationError,
  compileProgram,
  g17,
  runNullifiers,
  runRoute,
  runTeleport,
  runTomography,
  simulateSchedule,
} from "../src/index.js";

const execFileAsync = promisify(execFile);
const CLI = process.env.QRLSIM_CLI ?? "qrlsim";
const tempDirs: string[] = [];

async function newTempDir(): Promise<string> {
  const dir = await mkdtemp(join(tmpdir(), "qrlsdk-test-"));
  tempDirs.push(dir);
  return dir;
}

afterAll(async () => {
  await Promise.all(tempDirs.map((d) => rm(d, { recursive: true, force: true })));
});

describe("g17 float formatting", () => {
  it("matches the core's %.17g rendering", () => {
    const cases: Array<[number, string]> = [
      [0.0, "0"],
      [-0.0, "-0"],
      [1.0, "1"],
      [-1.0, "-1"],
      [0.5, "0.5"],
      [0.7, "0.69999999999999996"],
      [2.0, "2"],
      [101.0, "101"],
      [3.141592653589793, "3.1415926535897931"],
      [1.5707963267948966, "1.5707963267948966"],
      [-2.220446049250313e-16, "-2.2204460492503131e-16"],
      [1e-5, "1.0000000000000001e-05"],
      [1.23e-7, "1.23e-07"],
      [1.5e20, "1.5e+20"],
      [123456789012345680.0, "1.2345678901234568e+17"],
      [0.1, "0.10000000000000001"],
      [-4.930380657631324e-32, "-4.9303806576313238e-32"],
      [7.0710678118654755, "7.0710678118654755"],
    ];
    for (const [value, expected] of cases) {
      expect(g17(value), `g17(${value})`).toBe(expected);
    }
  });
});

describe("circuit builder", () => {
  it("validates structure and reports the offending op index", () => {
    const builder = new CircuitBuilder(2)
      .init(0)
      .rotation(1, 0.3) // op 1 uses mode 1 before initialization
      .measureAll();
    expect(() => builder.build()).toThrowError(ProgramValidationError);
    try {
      builder.build();
    } catch (err) {
      expect((err as ProgramValidationError).opIndex).toBe(1);
    }
  });

  it("rejects repeated operands and unknown gates", () => {
    expect(() =>
      new CircuitBuilder(2).init(0).init(1).cz(0, 0, 1).measureAll().build(),
    ).toThrowError(/distinct/);
    expect(() =>
      new CircuitBuilder(1).init(0).gate("warp", [0]).measure(0).build(),
    ).toThrowError(/unknown gate/);
  });
});

describe("schedule parity with the CLI", () => {
  const handWritten = [
    "qrl-program v1",
    "modes 2",
    "name demo",
    "init 0 theta=0 x=2 p=0",
    "init 1 theta=0 x=-1 p=0.5",
    "gate rotation 0 psi=0.69999999999999996 variant=crossed",
    "gate cz 0 1 g=1 h=0",
    "measure 0 theta=1.5707963267948966",
    "measure 1 theta=1.5707963267948966",
    "",
  ].join("\n");

  function builderDemo(): string {
    return new CircuitBuilder(2, "demo")
      .init(0, { x: 2.0 })
      .init(1, { x: -1.0, p: 0.5 })
      .rotation(0, 0.7)
      .cz(0, 1, 1.0, 0.0)
      .measureAll()
      .build();
  }

  it("builder programs compile to byte-identical schedules", async () => {
    const viaBuilder = await compileProgram(builderDemo(), { n: 5 });

    const dir = await newTempDir();
    const programPath = join(dir, "hand.qrlp");
    const schedulePath = join(dir, "hand.qrls");
    await writeFile(programPath, handWritten);
    await execFileAsync(CLI, [
      "compile", "--n", "5",
      "--program", programPath,
      "--schedule-out", schedulePath,
    ]);
    const direct = await readFile(schedulePath, "utf8");
    expect(viaBuilder.scheduleText).toBe(direct);
    expect(viaBuilder.scheduleText).toContain("qrl-schedule v1");
  });

  it("seeded simulation through the binding equals the CLI records", async () => {
    const { scheduleText } = await compileProgram(builderDemo(), { n: 5 });
    const viaSdk = await simulateSchedule(scheduleText, {
      n: 5,
      seed: 77,
      trials: 64,
      recordFormat: "frame",
    });

    const dir = await newTempDir();
    const schedulePath = join(dir, "demo.qrls");
    await writeFile(schedulePath, scheduleText);
    await execFileAsync(CLI, [
      "simulate", "--n", "5", "--seed", "77", "--trials", "64",
      "--schedule", schedulePath, "--record-format", "both", "--out", dir,
    ]);
    const frameBytes = await readFile(join(dir, "records.qrlf"));
    const sdkFirstTrial = viaSdk.processed[0][0][0];

    // byte-level: re-read the CLI frame through the loader and compare arrays
    const { readFrame } = await import("../src/records.js");
    const direct = readFrame(join(dir, "records.qrlf"));
    expect(viaSdk.digest).toBe(direct.digest);
    expect(viaSdk.kept).toEqual(direct.kept);
    for (let k = 0; k < direct.kept.length; k += 1) {
      for (let p = 0; p < 4; p += 1) {
        expect(viaSdk.processed[k][p]).toEqual(direct.processed[k][p]);
      }
    }
    expect(Number.isFinite(sdkFirstTrial)).toBe(true);
    expect(frameBytes.subarray(0, 8).toString("ascii")).toBe("QRLFRAME");

    // CSV and frame loaders agree with each other
    const viaCsv = await simulateSchedule(scheduleText, {
      n: 5,
      seed: 77,
      trials: 64,
      recordFormat: "csv",
    });
    expect(viaCsv.digest).toBe(viaSdk.digest);
    for (let k = 0; k < viaSdk.kept.length; k += 1) {
      for (let p = 0; p < 4; p += 1) {
        for (let t = 0; t < viaSdk.nTrials; t += 1) {
          expect(viaCsv.processed[k][p][t]).toBeCloseTo(
            viaSdk.processed[k][p][t], 12,
          );
        }
      }
    }
  }, 30_000);
});

describe("runner demos match direct CLI invocations", () => {
  async function directJson(
    args: string[],
    stem: string,
  ): Promise<{ meta: Record<string, unknown>; rows: unknown[] }> {
    const dir = await newTempDir();
    await execFileAsync(CLI, [...args, "--format", "json", "--no-figures", "--out", dir]);
    return JSON.parse(await readFile(join(dir, `${stem}.json`), "utf8"));
  }

  it("teleport metrics are numerically identical for the same seed", async () => {
    const viaSdk = await runTeleport({
      kind: "helical", steps: [0, 1], trials: 3000, n: 7, seed: 5,
    });
    const direct = await directJson(
      ["teleport", "--kind", "helical", "--steps", "0,1",
       "--trials", "3000", "--n", "7", "--seed", "5"],
      "teleport_helical",
    );
    expect(viaSdk.rows).toEqual(direct.rows);
  }, 30_000);

  it("route, nullifier and tomography demos agree with the CLI", async () => {
    const route = await runRoute({ n: 5, nModes: 4, order: "descending", trials: 3000, seed: 9 });
    const routeDirect = await directJson(
      ["route", "--n", "5", "--n-modes", "4", "--order", "descending",
       "--trials", "3000", "--seed", "9"],
      "route_descending",
    );
    expect(route.rows).toEqual(routeDirect.rows);
    expect(route.meta.sorted).toBe(true);

    const nulls = await runNullifiers({ n: 7, steps: 2, trials: 400, seed: 3 });
    const nullsDirect = await directJson(
      ["nullifiers", "--n", "7", "--steps", "2", "--trials", "400", "--seed", "3"],
      "nullifiers",
    );
    expect(nulls.rows).toEqual(nullsDirect.rows);

    const tomo = await runTomography({
      kind: "cz", method: "oracle", n: 3,
      gridA: [-1, 1, 2], gridB: [-1, 1, 2], seed: 1,
    });
    const tomoDirect = await directJson(
      ["tomography", "--kind", "cz", "--method", "oracle", "--n", "3",
       "--grid-a", "-1", "1", "2", "--grid-b", "-1", "1", "2", "--seed", "1"],
      "tomography_cz",
    );
    expect(tomo.rows).toEqual(tomoDirect.rows);
    for (const row of tomo.rows) {
      expect(Number(row.frobenius_error)).toBeLessThan(1e-9);
    }
  }, 60_000);
});
