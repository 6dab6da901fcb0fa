/**
 * Fluent circuit builder producing the core's program text format.
 *
 * The builder holds no numerics: it validates structure (mode ranges,
 * initialize-before-use, measure-exactly-once) and serializes; all physics
 * lives in the core engine behind the CLI.
 */

import { g17 } from "./format.js";

export type Variant = "crossed" | "twisted";

interface InitOp {
  kind: "init";
  mode: number;
  theta: number;
  x: number;
  p: number;
}

interface MeasureOp {
  kind: "measure";
  mode: number;
  theta: number;
}

interface GateOp {
  kind: "gate";
  gate: string;
  modes: number[];
  params: Record<string, number>;
  variant?: Variant;
}

export type Operation = InitOp | MeasureOp | GateOp;

export class ProgramValidationError extends Error {
  constructor(public opIndex: number, message: string) {
    super(`op ${opIndex}: ${message}`);
    this.name = "ProgramValidationError";
  }
}

const SINGLE_MODE_GATES = new Set([
  "rotation",
  "teleport",
  "xshear",
  "pshear",
  "squeeze90",
  "squeeze45",
  "arb",
]);
const TWO_MODE_GATES = new Set(["bs", "cz"]);

export class CircuitBuilder {
  readonly nModes: number;
  readonly name: string;
  private ops: Operation[] = [];

  constructor(nModes: number, name = "") {
    if (!Number.isInteger(nModes) || nModes < 1) {
      throw new Error(`nModes must be a positive integer, got ${nModes}`);
    }
    this.nModes = nModes;
    this.name = name;
  }

  init(mode: number, opts: { theta?: number; x?: number; p?: number } = {}): this {
    this.ops.push({
      kind: "init",
      mode,
      theta: opts.theta ?? 0,
      x: opts.x ?? 0,
      p: opts.p ?? 0,
    });
    return this;
  }

  gate(
    gate: string,
    modes: number[],
    params: Record<string, number> = {},
    variant?: Variant,
  ): this {
    this.ops.push({ kind: "gate", gate, modes: [...modes], params, variant });
    return this;
  }

  rotation(mode: number, psi: number, variant: Variant = "crossed"): this {
    return this.gate("rotation", [mode], { psi }, variant);
  }

  teleport(mode: number, variant: Variant = "crossed"): this {
    return this.gate("teleport", [mode], {}, variant);
  }

  xShear(mode: number, kappa: number, variant: Variant = "crossed"): this {
    return this.gate("xshear", [mode], { kappa }, variant);
  }

  pShear(mode: number, eta: number, variant: Variant = "crossed"): this {
    return this.gate("pshear", [mode], { eta }, variant);
  }

  squeeze90(mode: number, t: number, variant: Variant = "crossed"): this {
    return this.gate("squeeze90", [mode], { t }, variant);
  }

  squeeze45(mode: number, t: number, variant: Variant = "crossed"): this {
    return this.gate("squeeze45", [mode], { t }, variant);
  }

  arbitrary(
    mode: number,
    alpha: number,
    lam: number,
    beta: number,
    variant: Variant = "crossed",
  ): this {
    return this.gate("arb", [mode], { alpha, lam, beta }, variant);
  }

  beamSplitter(modeA: number, modeB: number, r: number, psi = 0): this {
    return this.gate("bs", [modeA, modeB], { r, psi });
  }

  cz(modeA: number, modeB: number, g: number, h = 0): this {
    return this.gate("cz", [modeA, modeB], { g, h });
  }

  measure(mode: number, theta: number = Math.PI / 2): this {
    this.ops.push({ kind: "measure", mode, theta });
    return this;
  }

  measureAll(theta: number = Math.PI / 2): this {
    for (let m = 0; m < this.nModes; m += 1) {
      this.measure(m, theta);
    }
    return this;
  }

  validate(): this {
    const initialized = new Set<number>();
    const measured = new Set<number>();
    this.ops.forEach((op, i) => {
      const modes = op.kind === "gate" ? op.modes : [op.mode];
      for (const m of modes) {
        if (!Number.isInteger(m) || m < 0 || m >= this.nModes) {
          throw new ProgramValidationError(i, `mode ${m} outside 0..${this.nModes - 1}`);
        }
        if (measured.has(m)) {
          throw new ProgramValidationError(i, `mode ${m} already measured`);
        }
      }
      if (op.kind === "init") {
        if (initialized.has(op.mode)) {
          throw new ProgramValidationError(i, `mode ${op.mode} initialized twice`);
        }
        initialized.add(op.mode);
      } else if (op.kind === "gate") {
        if (new Set(op.modes).size !== op.modes.length) {
          throw new ProgramValidationError(i, "gate operands must be distinct");
        }
        const arity = SINGLE_MODE_GATES.has(op.gate)
          ? 1
          : TWO_MODE_GATES.has(op.gate)
            ? 2
            : -1;
        if (arity < 0) {
          throw new ProgramValidationError(i, `unknown gate ${op.gate}`);
        }
        if (op.modes.length !== arity) {
          throw new ProgramValidationError(
            i,
            `${op.gate} takes ${arity} mode(s), got ${op.modes.length}`,
          );
        }
        for (const m of op.modes) {
          if (!initialized.has(m)) {
            throw new ProgramValidationError(i, `mode ${m} used before initialization`);
          }
        }
      } else {
        if (!initialized.has(op.mode)) {
          throw new ProgramValidationError(i, `mode ${op.mode} measured before initialization`);
        }
        measured.add(op.mode);
      }
    });
    for (const m of initialized) {
      if (!measured.has(m)) {
        throw new ProgramValidationError(this.ops.length - 1, `mode ${m} never measured`);
      }
    }
    return this;
  }

  /** Serialize to the core's versioned program text. */
  build(): string {
    this.validate();
    const lines = ["qrl-program v1", `modes ${this.nModes}`];
    if (this.name) {
      lines.push(`name ${this.name}`);
    }
    for (const op of this.ops) {
      if (op.kind === "init") {
        lines.push(
          `init ${op.mode} theta=${g17(op.theta)} x=${g17(op.x)} p=${g17(op.p)}`,
        );
      } else if (op.kind === "measure") {
        lines.push(`measure ${op.mode} theta=${g17(op.theta)}`);
      } else {
        const parts = [`gate ${op.gate} ${op.modes.join(" ")}`];
        const kv = Object.entries(op.params)
          .map(([k, v]) => `${k}=${g17(v)}`)
          .join(" ");
        if (kv) {
          parts.push(kv);
        }
        if (SINGLE_MODE_GATES.has(op.gate)) {
          parts.push(`variant=${op.variant ?? "crossed"}`);
        }
        lines.push(parts.join(" "));
      }
    }
    return lines.join("\n") + "\n";
  }
}
