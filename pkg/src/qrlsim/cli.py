"""Command-line experiment runner.

Subcommands reproduce the model-level experiments (nullifiers, tomography,
teleport, route) as CSV/JSON tables plus rendered figures, and expose the
compiler pipeline (compile, simulate) over the text formats.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapacityError, ParseError, QrlError
from .experiments import (
    run_nullifiers,
    run_route,
    run_teleport,
    run_tomography,
)
from .lattice import LatticeConfig, simulate
from .program import (
    compile_program,
    deserialize_program,
    deserialize_schedule,
    serialize_schedule,
)
from .records import write_frame, write_records_csv

CONFIG_KEYS = ("n", "squeezing_db", "path_efficiency", "seed", "total_macronodes")


def _parse_config_file(path):
    values = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected key=value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        values[key] = val
    return values


def _floats(text):
    return tuple(float(v) for v in str(text).split(","))


def build_lattice_config(args):
    file_values = _parse_config_file(args.config) if args.config else {}
    merged = {}
    for key in CONFIG_KEYS:
        if key in file_values:
            merged[key] = file_values[key]
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag  # command-line flags win
    kwargs = {}
    if "n" in merged:
        kwargs["n"] = int(merged["n"])
    if "squeezing_db" in merged:
        db = _floats(merged["squeezing_db"])
        kwargs["squeezing_db"] = db if len(db) > 1 else db[0]
    if "path_efficiency" in merged:
        eta = _floats(merged["path_efficiency"])
        kwargs["path_efficiency"] = eta if len(eta) == 2 else (eta[0], eta[0])
    if "seed" in merged:
        kwargs["seed"] = int(merged["seed"])
    if "total_macronodes" in merged:
        kwargs["total_macronodes"] = int(merged["total_macronodes"])
    return LatticeConfig(**kwargs), file_values


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_digest(config):
    return config.digest()


def write_rows(rows, out_dir, stem, fmt, meta):
    """Delimited output plus a JSON sidecar when requested."""
    paths = []
    if fmt in ("csv", "both"):
        path = out_dir / f"{stem}.csv"
        with open(path, "w") as handle:
            handle.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
            if rows:
                keys = list(rows[0])
                handle.write(",".join(keys) + "\n")
                for row in rows:
                    handle.write(",".join(repr(row[k]) for k in keys) + "\n")
        paths.append(path)
    if fmt in ("json", "both"):
        path = out_dir / f"{stem}.json"
        with open(path, "w") as handle:
            json.dump({"meta": meta, "rows": rows}, handle, indent=1)
        paths.append(path)
    return paths


def cmd_nullifiers(args):
    config, _ = build_lattice_config(args)
    result = run_nullifiers(config, n_steps=args.steps, trials=args.trials)
    out = _out_dir(args)
    meta = {"experiment": "nullifiers", "config_digest": _config_digest(config),
            "trials": args.trials, "seed": config.seed}
    paths = write_rows(result.rows(), out, "nullifiers", args.format, meta)
    if args.figures:
        from .figures import save_nullifier_figure

        save_nullifier_figure(result, out / "nullifiers.png")
        paths.append(out / "nullifiers.png")
    for (port, kind), (vals, _) in sorted(result.table.items()):
        print(f"port {port} {kind}: mean {np.mean(vals):+.2f} dB")
    _report_paths(paths)
    return 0


def cmd_tomography(args):
    config, _ = build_lattice_config(args)
    grid_a = np.linspace(args.grid_a[0], args.grid_a[1], int(args.grid_a[2])) \
        if args.grid_a else None
    grid_b = np.linspace(args.grid_b[0], args.grid_b[1], int(args.grid_b[2])) \
        if args.grid_b else None
    result = run_tomography(
        config, kind=args.kind, grid_a=grid_a, grid_b=grid_b,
        trials_per_basis=args.trials, method=args.method,
    )
    out = _out_dir(args)
    meta = {"experiment": f"tomography-{args.kind}", "method": args.method,
            "config_digest": _config_digest(config),
            "trials_per_basis": args.trials,
            "mean_error": result.mean_error, "std_error": result.std_error}
    paths = write_rows(result.rows(), out, f"tomography_{args.kind}", args.format, meta)
    if args.figures:
        from .figures import save_tomography_figure

        save_tomography_figure(result, out / f"tomography_{args.kind}.png")
        paths.append(out / f"tomography_{args.kind}.png")
    print(
        f"{args.kind} grid ({len(result.points)} points, {args.method}): "
        f"mean Frobenius error {100 * result.mean_error:.2f}% "
        f"+- {100 * result.std_error:.2f}%"
    )
    _report_paths(paths)
    return 0


def cmd_teleport(args):
    config, _ = build_lattice_config(args)
    steps = [int(s) for s in args.steps.split(",")]
    if args.kind == "helical" and max(steps) > 10_000 and args.trials > 10_000:
        raise ValueError(
            "helical runs beyond 10000 steps need trials <= 10000 to stay in memory"
        )
    result = run_teleport(
        config, kind=args.kind, steps=steps, trials=args.trials,
        displacement_sd=args.displacement_sd,
    )
    out = _out_dir(args)
    meta = {"experiment": f"teleport-{args.kind}",
            "config_digest": _config_digest(config), "trials": args.trials,
            "displacement_sd": args.displacement_sd}
    paths = write_rows(result.rows(), out, f"teleport_{args.kind}", args.format, meta)
    paths += write_rows(
        result.long_rows(), out, f"teleport_{args.kind}_long", "csv", meta
    )
    if args.figures:
        from .figures import save_teleport_figure

        save_teleport_figure(result, out / f"teleport_{args.kind}.png")
        paths.append(out / f"teleport_{args.kind}.png")
    noise, _ = result.noise_summary()
    gain_x, gain_p = result.gain_arrays()
    for i, m in enumerate(result.steps):
        print(
            f"m={m}: witness {10 * np.log10(noise[i]):+.2f} dB "
            f"(model {10 * np.log10(result.theory[i]):+.2f}, "
            f"benchmark {10 * np.log10(result.benchmark[i]):+.2f}), "
            f"gain x {gain_x[i].mean():.4f} p {gain_p[i].mean():.4f}"
        )
    _report_paths(paths)
    return 0


def cmd_route(args):
    config, _ = build_lattice_config(args)
    result = run_route(
        config, n_modes=args.n_modes, order=args.order, trials=args.trials,
    )
    out = _out_dir(args)
    meta = {"experiment": "route", "order": args.order,
            "config_digest": _config_digest(config), "trials": args.trials,
            "sorted": result.sorted_ok}
    paths = write_rows(result.rows(), out, f"route_{args.order}", args.format, meta)
    if args.figures:
        from .figures import save_route_figure

        save_route_figure(result, out / f"route_{args.order}.png")
        paths.append(out / f"route_{args.order}.png")
    trace_ok = bool(np.array_equal(result.realized, result.target))
    worst_gain = float(np.max(np.abs(result.gains - 1.0)))
    print(
        f"route {args.order}: {len(result.keys_sd)} modes, "
        f"trace {'ok' if trace_ok else 'MISMATCH'}, "
        f"output means {'monotone' if result.sorted_ok else 'NOT monotone'}, "
        f"max |gain-1| {worst_gain:.3f}"
    )
    _report_paths(paths)
    return 0 if trace_ok else 3


def cmd_compile(args):
    config, _ = build_lattice_config(args)
    text = Path(args.program).read_text()
    program = deserialize_program(text)
    schedule = compile_program(program, config)
    out_path = Path(args.schedule_out)
    out_path.write_text(serialize_schedule(schedule))
    if args.provenance:
        Path(args.provenance).write_text(
            json.dumps(schedule.provenance, indent=1, sort_keys=True)
        )
    print(
        f"compiled {program.n_modes} modes -> {len(schedule)} macronodes "
        f"({len(schedule) // schedule.n} turns), digest {schedule.digest()}"
    )
    print(f"wrote {out_path}")
    return 0


def cmd_simulate(args):
    config, _ = build_lattice_config(args)
    schedule = deserialize_schedule(Path(args.schedule).read_text())
    keep = None
    if args.keep == "readouts":
        from .lattice import Readout

        keep = [k for k, r in enumerate(schedule.roles) if isinstance(r, Readout)]
    result = simulate(schedule, config, args.trials, keep=keep)
    out = _out_dir(args)
    paths = []
    if args.record_format in ("csv", "both"):
        path = out / "records.csv"
        write_records_csv(result, path)
        paths.append(path)
    if args.record_format in ("frame", "both"):
        path = out / "records.qrlf"
        write_frame(result, path)
        paths.append(path)
    print(
        f"simulated {args.trials} trials x {len(schedule)} macronodes "
        f"(kept {result.kept.size}), run digest {result.run_digest}"
    )
    _report_paths(paths)
    return 0


def _report_paths(paths):
    for path in paths:
        print(f"wrote {path}")


def _add_common(parser):
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, default=None, help="base RNG seed")
    parser.add_argument("--n", type=int, default=None,
                        help="macronodes per helix turn")
    parser.add_argument("--squeezing-db", dest="squeezing_db", default=None,
                        help="source squeezing in dB (one value or A,B,C,D)")
    parser.add_argument("--path-efficiency", dest="path_efficiency", default=None,
                        help="delay-path efficiencies eta_short,eta_long")
    parser.add_argument("--total-macronodes", dest="total_macronodes", type=int,
                        default=None, help="capacity guard for schedules")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--format", choices=("csv", "json", "both"), default="csv")
    parser.add_argument("--figures", action=argparse.BooleanOptionalAction,
                        default=True, help="render matplotlib figures")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qrlsim",
        description="Desk-scale simulator for time-domain macronode-lattice "
                    "Gaussian quantum computation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nullifiers", help="noise of the lattice entanglement")
    _add_common(p)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--trials", type=int, default=2000)
    p.set_defaults(func=cmd_nullifiers)

    p = sub.add_parser("tomography", help="operation estimation over a grid")
    _add_common(p)
    p.add_argument("--kind", choices=("single", "cz"), default="single")
    p.add_argument("--trials", type=int, default=6000,
                   help="trials per basis configuration")
    p.add_argument("--method", choices=("mc", "oracle"), default="mc")
    p.add_argument("--grid-a", type=float, nargs=3, default=None,
                   metavar=("LO", "HI", "POINTS"),
                   help="first parameter range (linspace)")
    p.add_argument("--grid-b", type=float, nargs=3, default=None,
                   metavar=("LO", "HI", "POINTS"))
    p.set_defaults(func=cmd_tomography)

    p = sub.add_parser("teleport", help="repeated teleportation metrics")
    _add_common(p)
    p.add_argument("--kind", choices=("parallel", "helical"), default="parallel")
    p.add_argument("--steps", default="0,1,2,5,10")
    p.add_argument("--trials", type=int, default=50_000)
    p.add_argument("--displacement-sd", dest="displacement_sd", type=float,
                   default=5.0)
    p.set_defaults(func=cmd_teleport)

    p = sub.add_parser("route", help="programmable routing by amplitude")
    _add_common(p)
    p.add_argument("--order", choices=("ascending", "descending"),
                   default="ascending")
    p.add_argument("--n-modes", dest="n_modes", type=int, default=None)
    p.add_argument("--trials", type=int, default=50_000)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("compile", help="lower a program file to a schedule file")
    _add_common(p)
    p.add_argument("--program", required=True)
    p.add_argument("--schedule-out", dest="schedule_out", required=True)
    p.add_argument("--provenance", default=None,
                   help="optional JSON provenance output")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("simulate", help="run a schedule file, export records")
    _add_common(p)
    p.add_argument("--schedule", required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--keep", choices=("all", "readouts"), default="all")
    p.add_argument("--record-format", dest="record_format",
                   choices=("csv", "frame", "both"), default="csv")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, CapacityError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except QrlError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
