"""Experiment runners: nullifier scans, gate tomography, teleportation, routing.

Each runner builds schedules, drives the Monte Carlo engine (or the exact
affine oracle), reduces the outcomes with the estimator, and returns a result
object with tabular rows ready for CSV/JSON emission.
"""

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import MisuseError
from .estimator import (
    CorrelationMatrix,
    analytic_input_reference_correlation,
    classical_benchmark,
    estimate_s_matrix,
    frobenius_error,
    gain_estimate,
    measurement_plan_for_tomography,
    nullifier_variances_db,
    theory_noise_power,
    witness_noise_power,
)
from .gates import GeneralizedCZ, MacronodeAngles, Teleport, angles_for, s_of_theta
from .lattice import (
    AngleSchedule,
    LatticeConfig,
    Operate,
    Readout,
    build_outcome_map,
    readout_values,
    simulate,
)
from .program import RoutingRequest, compile_routing, realized_permutation
from .symplectic import four_splitter

X_BASIS = math.pi / 2
P_BASIS = 0.0
_B4 = four_splitter()
VACUUM_SD = math.sqrt(0.5)


def derive_seed(base_seed: int, label: str) -> int:
    """Stable 63-bit sub-stream seed for one run of a larger experiment."""
    digest = hashlib.blake2s(f"{base_seed}:{label}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def _with_seed(config: LatticeConfig, seed: int) -> LatticeConfig:
    return LatticeConfig(
        n=config.n,
        squeezing_db=config.squeezing_db,
        path_efficiency=config.path_efficiency,
        seed=seed,
        total_macronodes=config.total_macronodes,
    )


# --- nullifier scans ----------------------------------------------------------


@dataclass
class NullifierResult:
    steps: np.ndarray
    table: dict          # (port, kind) -> (db array, stderr array)
    config: LatticeConfig
    trials: int

    def rows(self):
        out = []
        for (port, kind), (vals, errs) in sorted(self.table.items()):
            for m, (v, e) in enumerate(zip(vals, errs)):
                out.append(
                    {"step": m, "port": port, "kind": kind,
                     "db": float(v), "stderr_db": float(e)}
                )
        return out


def run_nullifiers(config: LatticeConfig, n_steps: int = 10,
                   trials: int = 2000) -> NullifierResult:
    """Turn-averaged nullifier and anti-squeezing noise versus step."""
    n = config.n
    turns = n_steps + 2
    table = {}
    for basis_name, theta in (("x", X_BASIS), ("p", P_BASIS)):
        cfg = _with_seed(config, derive_seed(config.seed, f"nullifiers:{basis_name}"))
        sched = AngleSchedule(n, [Readout(theta)] * (turns * n))
        res = simulate(sched, cfg, trials)
        for anti in (False, True):
            out = nullifier_variances_db(res.raw, basis_name, n, anti=anti)
            for port, (steps, vals, errs) in out.items():
                kind = "antisqueeze" if anti else "squeeze"
                table[(port, kind)] = (vals[:n_steps], errs[:n_steps])
    return NullifierResult(np.arange(n_steps), table, config, trials)


# --- gate tomography ----------------------------------------------------------


def tomography_schedule(n: int, op_role: Operate, ref_angle: float,
                        out_angle: float) -> AngleSchedule:
    """Single-macronode estimation run: references, the operation, outputs.

    The operation sits at macronode n; its b input pairs with reference a at
    macronode n-1 and its d input with reference c at macronode 0; the outputs
    are read at macronodes n+1 and 2n.
    """
    roles = [Readout(X_BASIS)] * (2 * n + 1)
    roles[0] = Readout(ref_angle)
    roles[n - 1] = Readout(ref_angle)
    roles[n] = op_role
    roles[n + 1] = Readout(out_angle)
    roles[2 * n] = Readout(out_angle)
    return AngleSchedule(n, roles)


_QUAD_INDEX = {"x": (0, 2), "p": (1, 3)}


def estimate_macronode_operation(angles: MacronodeAngles, config: LatticeConfig,
                                 trials_per_basis: int, method: str = "mc",
                                 seed_label: str = ""):
    """Estimate the 4x4 map of one macronode from reference correlations.

    ``method`` "mc" runs the sampler for each of the four basis configurations;
    "oracle" extracts the exact correlations from the affine outcome map.
    """
    n = config.n
    c_or = np.zeros((4, 4))
    c_or_err = np.zeros((4, 4))
    for basis in measurement_plan_for_tomography():
        sched = tomography_schedule(n, Operate(angles), basis.ref_angle, basis.out_angle)
        out_rows, ref_cols = _QUAD_INDEX[basis.out_basis], _QUAD_INDEX[basis.ref_basis]
        if method == "oracle":
            omap = build_outcome_map(sched, config)
            scaled = omap.processed * omap.scales
            ref_vec = np.stack(
                [_B4.T[0] @ scaled[4 * (n - 1):4 * n], _B4.T[2] @ scaled[0:4]]
            )
            out_vec = np.stack(
                [_B4.T[1] @ scaled[4 * (n + 1):4 * (n + 2)],
                 _B4.T[3] @ scaled[4 * 2 * n:4 * 2 * n + 4]]
            )
            block = out_vec @ ref_vec.T
            err = np.zeros((2, 2))
        elif method == "mc":
            label = f"tomo:{seed_label}:{basis.ref_basis}{basis.out_basis}"
            cfg = _with_seed(config, derive_seed(config.seed, label))
            res = simulate(sched, cfg, trials_per_basis,
                           keep=[0, n - 1, n + 1, 2 * n], keep_raw=False)
            vals = readout_values(res.processed)
            ref = np.stack(
                [vals[res.kept_index(n - 1)][0], vals[res.kept_index(0)][2]]
            )
            out = np.stack(
                [vals[res.kept_index(n + 1)][1], vals[res.kept_index(2 * n)][3]]
            )
            corr = CorrelationMatrix.from_samples(out, ref)
            block, err = corr.matrix, corr.stderr
        else:
            raise MisuseError(f"unknown method {method!r}")
        for bi, i in enumerate(out_rows):
            for bj, j in enumerate(ref_cols):
                c_or[i, j] = block[bi, bj]
                c_or_err[i, j] = err[bi, bj]
    n_samples = 0 if method == "oracle" else trials_per_basis
    out_ref = CorrelationMatrix(c_or, n_samples, c_or_err)
    in_ref = analytic_input_reference_correlation(config)
    return estimate_s_matrix(out_ref, in_ref)


@dataclass
class TomographyPoint:
    params: dict
    s_est: np.ndarray
    s_stderr: np.ndarray
    s_theory: np.ndarray
    error: float


@dataclass
class TomographyResult:
    kind: str
    points: list
    config: LatticeConfig
    trials_per_basis: int
    method: str

    @property
    def mean_error(self) -> float:
        return float(np.mean([p.error for p in self.points]))

    @property
    def std_error(self) -> float:
        return float(np.std([p.error for p in self.points]))

    def rows(self):
        out = []
        for p in self.points:
            row = dict(p.params)
            row["frobenius_error"] = p.error
            for i in range(4):
                for j in range(4):
                    row[f"s{i + 1}{j + 1}_est"] = float(p.s_est[i, j])
                    row[f"s{i + 1}{j + 1}_theory"] = float(p.s_theory[i, j])
                    row[f"s{i + 1}{j + 1}_stderr"] = float(p.s_stderr[i, j])
            out.append(row)
        return out


def single_mode_grid(n_plus: int = 7, n_minus: int = 7, margin: float = 0.15):
    """(phi+, phi-) grid inside (0, pi) avoiding the degeneracy band."""
    phi_plus = np.linspace(margin * math.pi, (1 - margin) * math.pi, n_plus)
    phi_minus = np.linspace(margin * math.pi, (1 - margin) * math.pi, n_minus)
    return phi_plus, phi_minus


def run_tomography(config: LatticeConfig, kind: str = "single",
                   grid_a=None, grid_b=None, trials_per_basis: int = 6000,
                   method: str = "mc") -> TomographyResult:
    """Sweep a parameter grid and estimate the operation at every point.

    ``kind`` "single" sweeps crossed single-mode operations over (phi+, phi-);
    "cz" sweeps the entangling gate over (g, h).
    """
    points = []
    if kind == "single":
        phi_plus, phi_minus = single_mode_grid()
        if grid_a is not None:
            phi_plus = np.asarray(grid_a, dtype=float)
        if grid_b is not None:
            phi_minus = np.asarray(grid_b, dtype=float)
        sweep = [
            ({"phi_plus": float(a), "phi_minus": float(b)},
             MacronodeAngles((a - b) / 2, (a + b) / 2, (a - b) / 2, (a + b) / 2))
            for a in phi_plus
            for b in phi_minus
        ]
    elif kind == "cz":
        grid_g = np.linspace(-2.0, 2.0, 7) if grid_a is None else np.asarray(grid_a)
        grid_h = np.linspace(-2.0, 2.0, 7) if grid_b is None else np.asarray(grid_b)
        sweep = [
            ({"g": float(g), "h": float(h)}, angles_for(GeneralizedCZ(g, h)))
            for g in grid_g
            for h in grid_h
        ]
    else:
        raise MisuseError(f"unknown tomography kind {kind!r}")

    for params, angles in sweep:
        label = kind + ":" + ",".join(f"{k}={v:.6g}" for k, v in params.items())
        est = estimate_macronode_operation(
            angles, config, trials_per_basis, method=method, seed_label=label
        )
        theory = s_of_theta(angles)
        points.append(
            TomographyPoint(params, est.matrix, est.stderr, theory,
                            frobenius_error(est.matrix, theory))
        )
    return TomographyResult(kind, points, config, trials_per_basis, method)


# --- teleportation ------------------------------------------------------------


def parallel_teleport_schedule(n: int, m_steps: int, basis: float,
                               displacement) -> AngleSchedule:
    """All n rows teleported m_steps times along the turn-to-turn rail.

    Turn 0 reads the references; the inputs stay EPR-entangled with them and
    are displaced through the numerical feedforward at the first turn.
    """
    identity = angles_for(Teleport())
    roles = [Readout(basis)] * n
    for _ in range(m_steps):
        roles += [Operate(identity)] * n
    roles += [Readout(basis)] * n
    extra = {
        n + j: np.array([0.0, 0.0, displacement[0], displacement[1]])
        for j in range(n)
    }
    return AngleSchedule(n, roles, extra_displacements=extra)


def helical_teleport_schedule(n: int, m_steps: int, basis: float,
                              displacement) -> AngleSchedule:
    """One mode teleported m_steps times along the helix (macronode + 1 rail)."""
    identity = angles_for(Teleport())
    roles = [Readout(basis)]
    roles += [Operate(identity)] * m_steps
    roles += [Readout(basis)]
    extra = {1: np.array([displacement[0], displacement[1], 0.0, 0.0])}
    return AngleSchedule(n, roles, extra_displacements=extra)


@dataclass
class TeleportStep:
    step: int
    gain_x: np.ndarray
    gain_x_stderr: np.ndarray
    gain_p: np.ndarray
    gain_p_stderr: np.ndarray
    noise_power: np.ndarray
    noise_power_stderr: np.ndarray


@dataclass
class TeleportResult:
    kind: str
    steps: list
    per_step: list
    theory: np.ndarray
    benchmark: np.ndarray
    config: LatticeConfig
    trials: int
    displacement: tuple

    def noise_summary(self):
        """Mode-averaged witness per step with standard error."""
        vals = np.array([s.noise_power.mean() for s in self.per_step])
        errs = np.array(
            [np.linalg.norm(s.noise_power_stderr) / len(s.noise_power)
             for s in self.per_step]
        )
        return vals, errs

    def gain_arrays(self):
        gx = np.array([s.gain_x for s in self.per_step])
        gp = np.array([s.gain_p for s in self.per_step])
        return gx, gp

    def long_rows(self):
        """Long format: one row per (step, mode, quantity)."""
        out = []
        quantities = (
            ("gain_x", "gain_x", "gain_x_stderr"),
            ("gain_p", "gain_p", "gain_p_stderr"),
            ("noise_power", "noise_power", "noise_power_stderr"),
        )
        for s in self.per_step:
            for mode in range(len(s.gain_x)):
                for name, attr, err_attr in quantities:
                    out.append(
                        {
                            "step": s.step,
                            "mode": mode,
                            "quantity": name,
                            "value": float(getattr(s, attr)[mode]),
                            "stderr": float(getattr(s, err_attr)[mode]),
                        }
                    )
        return out

    def rows(self):
        out = []
        for s, theory, bench in zip(self.per_step, self.theory, self.benchmark):
            for mode in range(len(s.gain_x)):
                out.append(
                    {
                        "step": s.step,
                        "mode": mode,
                        "gain_x": float(s.gain_x[mode]),
                        "gain_x_stderr": float(s.gain_x_stderr[mode]),
                        "gain_p": float(s.gain_p[mode]),
                        "gain_p_stderr": float(s.gain_p_stderr[mode]),
                        "noise_power": float(s.noise_power[mode]),
                        "noise_power_stderr": float(s.noise_power_stderr[mode]),
                        "noise_db": float(10 * np.log10(s.noise_power[mode])),
                        "theory_power": float(theory),
                        "benchmark_power": float(bench),
                    }
                )
        return out


def run_teleport(config: LatticeConfig, kind: str = "parallel", steps=(0, 1, 2),
                 trials: int = 100_000,
                 displacement_sd: float = 5.0) -> TeleportResult:
    """Repeated identity teleportation with reference-correlation metrics.

    For each step count, one x-basis and one p-basis run measure the
    references (turn 0) and the outputs (final turn); gains use the programmed
    displacement of ``displacement_sd`` vacuum standard deviations and the
    noise power is the two-quadrature EPR witness normalized to shot noise.
    """
    steps = sorted(int(m) for m in steps)
    disp = displacement_sd * VACUUM_SD
    n = config.n
    rail = "d" if kind == "parallel" else "b"
    per_step = []
    for m in steps:
        ref_vals = {}
        out_vals = {}
        for basis_name, theta in (("x", X_BASIS), ("p", P_BASIS)):
            cfg = _with_seed(config, derive_seed(config.seed, f"tele:{kind}:{m}:{basis_name}"))
            if kind == "parallel":
                sched = parallel_teleport_schedule(n, m, theta, (disp, disp))
                keep = list(range(n)) + list(range((m + 1) * n, (m + 2) * n))
                res = simulate(sched, cfg, trials, keep=keep, keep_raw=False)
                vals = readout_values(res.processed)
                ref = np.stack([vals[res.kept_index(j)][2] for j in range(n)])
                out = np.stack(
                    [vals[res.kept_index((m + 1) * n + j)][3] for j in range(n)]
                )
            elif kind == "helical":
                sched = helical_teleport_schedule(n, m, theta, (disp, disp))
                res = simulate(sched, cfg, trials, keep=[0, m + 1], keep_raw=False)
                vals = readout_values(res.processed)
                ref = vals[res.kept_index(0)][0][None, :]
                out = vals[res.kept_index(m + 1)][1][None, :]
            else:
                raise MisuseError(f"unknown teleport kind {kind!r}")
            ref_vals[basis_name] = ref
            out_vals[basis_name] = out

        n_modes = ref_vals["x"].shape[0]
        gx = np.empty(n_modes)
        gxe = np.empty(n_modes)
        gp = np.empty(n_modes)
        gpe = np.empty(n_modes)
        pw = np.empty(n_modes)
        pwe = np.empty(n_modes)
        for mode in range(n_modes):
            gx[mode], gxe[mode] = gain_estimate(out_vals["x"][mode], disp)
            gp[mode], gpe[mode] = gain_estimate(out_vals["p"][mode], disp)
            pw[mode], pwe[mode] = witness_noise_power(
                ref_vals["x"][mode], out_vals["x"][mode],
                ref_vals["p"][mode], out_vals["p"][mode],
            )
        per_step.append(TeleportStep(m, gx, gxe, gp, gpe, pw, pwe))

    return TeleportResult(
        kind=kind,
        steps=list(steps),
        per_step=per_step,
        theory=theory_noise_power(steps, config, rail=rail),
        benchmark=classical_benchmark(steps),
        config=config,
        trials=trials,
        displacement=(disp, disp),
    )


# --- routing ------------------------------------------------------------------


def route_keys(n_modes: int, seed: int, low_sd: float = 4.0,
               high_sd: float = 20.0) -> np.ndarray:
    """Random displacement keys: a shuffled two-sided ladder, in vacuum SDs.

    Magnitudes are spaced evenly in [low_sd, high_sd] with alternating signs,
    then randomly permuted, so every mode is displaced well away from zero and
    all sort keys are cleanly separated.
    """
    mags = np.linspace(low_sd, high_sd, n_modes)
    keys = mags * np.where(np.arange(n_modes) % 2 == 0, 1.0, -1.0)
    rng = np.random.default_rng(seed)
    return rng.permutation(keys)


@dataclass
class RouteResult:
    order: str
    keys_sd: np.ndarray
    target: np.ndarray
    realized: np.ndarray
    out_means: np.ndarray
    out_stderr: np.ndarray
    gains: np.ndarray
    gain_stderr: np.ndarray
    sorted_ok: bool
    config: LatticeConfig
    trials: int
    schedule: AngleSchedule

    def rows(self):
        out = []
        for mode in range(len(self.keys_sd)):
            out.append(
                {
                    "mode": mode,
                    "input_sd": float(self.keys_sd[mode]),
                    "target_position": int(self.target[mode]),
                    "realized_position": int(self.realized[mode]),
                    "output_mean": float(self.out_means[mode]),
                    "output_stderr": float(self.out_stderr[mode]),
                    "gain": float(self.gains[mode]),
                    "gain_stderr": float(self.gain_stderr[mode]),
                }
            )
        return out


def run_route(config: LatticeConfig, n_modes: int | None = None,
              order: str = "ascending", trials: int = 50_000,
              keys_sd: np.ndarray | None = None,
              permutation=None) -> RouteResult:
    """Compile, simulate and verify one programmable-routing run."""
    if n_modes is None:
        n_modes = config.n if keys_sd is None else len(keys_sd)
    if keys_sd is None:
        keys_sd = route_keys(n_modes, derive_seed(config.seed, "route-keys"))
    keys_sd = np.asarray(keys_sd, dtype=float)
    displacements = keys_sd * VACUUM_SD
    request = RoutingRequest(
        order=order,
        displacements=displacements,
        permutation=permutation,
    )
    sched = compile_routing(request, config, n_modes=n_modes)
    target = np.asarray(sched.provenance["target"], dtype=int)
    realized = realized_permutation(sched)

    cfg = _with_seed(config, derive_seed(config.seed, f"route:{order}"))
    outputs = sched.provenance["outputs"]
    keep = sorted({info["macronode"] for info in outputs.values()})
    res = simulate(sched, cfg, trials, keep=keep, keep_raw=False)
    vals = readout_values(res.processed)
    port_index = {"b": 1, "d": 3}
    out_means = np.empty(n_modes)
    out_stderr = np.empty(n_modes)
    gains = np.empty(n_modes)
    gain_stderr = np.empty(n_modes)
    for mode in range(n_modes):
        info = outputs[mode]
        samples = vals[res.kept_index(info["macronode"])][port_index[info["port"]]]
        out_means[mode] = samples.mean()
        out_stderr[mode] = samples.std(ddof=1) / math.sqrt(trials)
        gains[mode], gain_stderr[mode] = gain_estimate(samples, displacements[mode])

    by_position = np.empty(n_modes)
    by_position[realized] = out_means
    diffs = np.diff(by_position)
    sorted_ok = bool(np.all(diffs > 0) if order == "ascending" else np.all(diffs < 0)) \
        if order in ("ascending", "descending") else True

    return RouteResult(
        order=order,
        keys_sd=keys_sd,
        target=target,
        realized=realized,
        out_means=out_means,
        out_stderr=out_stderr,
        gains=gains,
        gain_stderr=gain_stderr,
        sorted_ok=sorted_ok,
        config=config,
        trials=trials,
        schedule=sched,
    )
