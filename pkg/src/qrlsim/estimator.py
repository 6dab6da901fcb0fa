"""Statistical reconstruction and experiment metrics.

Covers transformation-matrix estimation from reference correlations, nullifier
variances, teleportation gains / noise powers with their classical benchmark,
Frobenius errors, and dB conversions.  Accumulators are mergeable so trial
streams can be folded in from any number of workers.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EstimationSingularityError,
    IllConditionedGainError,
    MisuseError,
)
from .lattice import LatticeConfig

X_BASIS = math.pi / 2
P_BASIS = 0.0

# Per-quadrature shot-noise level of the (ref - out) / (ref + out) pair
# correlation; the two-quadrature witness sum is normalized by twice this.
PAIR_SHOT_NOISE = 1.0


def db(value: float) -> float:
    """Variance ratio to decibels."""
    if np.any(np.asarray(value) <= 0):
        raise ValueError(f"dB undefined for non-positive value {value}")
    return 10.0 * np.log10(value)


def inverse_db(decibels: float) -> float:
    return 10.0 ** (np.asarray(decibels) / 10.0)


def frobenius_error(s_est: np.ndarray, s_theory: np.ndarray) -> float:
    """Normalized Frobenius distance |S_theory - S_est|_F / |S_theory|_F."""
    s_est = np.asarray(s_est, dtype=float)
    s_theory = np.asarray(s_theory, dtype=float)
    if s_est.shape != s_theory.shape:
        raise ValueError(f"shape mismatch {s_est.shape} vs {s_theory.shape}")
    norm = np.linalg.norm(s_theory)
    if norm == 0:
        raise ValueError("reference matrix has zero norm")
    return float(np.linalg.norm(s_theory - s_est) / norm)


class MomentAccumulator:
    """Mergeable running sums for means and symmetric second moments."""

    def __init__(self, dim: int, tag: str | None = None):
        self.dim = dim
        self.tag = tag
        self.count = 0
        self.total = np.zeros(dim)
        self.outer = np.zeros((dim, dim))

    def add(self, batch: np.ndarray):
        """Fold in samples of shape (dim, n)."""
        batch = np.asarray(batch, dtype=float)
        if batch.ndim == 1:
            batch = batch[:, None]
        if batch.shape[0] != self.dim:
            raise MisuseError(f"expected dim {self.dim}, got {batch.shape[0]}")
        self.count += batch.shape[1]
        self.total += batch.sum(axis=1)
        self.outer += batch @ batch.T
        return self

    def merge(self, other: "MomentAccumulator"):
        if other.dim != self.dim:
            raise MisuseError("accumulator dimensions differ")
        if self.tag is not None and other.tag is not None and self.tag != other.tag:
            raise MisuseError(
                f"refusing to merge accumulators from different runs: "
                f"{self.tag} vs {other.tag}"
            )
        self.count += other.count
        self.total += other.total
        self.outer += other.outer
        return self

    def mean(self) -> np.ndarray:
        if self.count < 1:
            raise MisuseError("no samples accumulated")
        return self.total / self.count

    def second_moment(self) -> np.ndarray:
        """Symmetric-ordered product averages <q_a q_b>."""
        if self.count < 1:
            raise MisuseError("no samples accumulated")
        return self.outer / self.count

    def covariance(self) -> np.ndarray:
        if self.count < 2:
            raise MisuseError("need at least two samples")
        mu = self.mean()
        return self.count / (self.count - 1) * (self.second_moment() - np.outer(mu, mu))


@dataclass
class CorrelationMatrix:
    """Quadrature product averages with per-entry standard errors."""

    matrix: np.ndarray
    n_samples: int
    stderr: np.ndarray

    @classmethod
    def exact(cls, matrix: np.ndarray) -> "CorrelationMatrix":
        matrix = np.asarray(matrix, dtype=float)
        return cls(matrix, 0, np.zeros_like(matrix))

    @classmethod
    def from_samples(cls, a: np.ndarray, b: np.ndarray) -> "CorrelationMatrix":
        """<a_i b_j> estimates from paired samples of shape (dim, n)."""
        a = np.atleast_2d(a)
        b = np.atleast_2d(b)
        n = a.shape[1]
        if n < 2:
            raise MisuseError("need at least two samples")
        prod_mean = a @ b.T / n
        sq_mean = (a**2) @ (b**2).T / n
        stderr = np.sqrt(np.maximum(sq_mean - prod_mean**2, 0.0) / n)
        return cls(prod_mean, n, stderr)


@dataclass
class SEstimate:
    matrix: np.ndarray
    stderr: np.ndarray


def estimate_s_matrix(out_ref: CorrelationMatrix, in_ref: CorrelationMatrix) -> SEstimate:
    """Transformation matrix from reference correlations.

    S = <q_out q_ref^T> <q_in q_ref^T>^-1, with first-order error propagation.
    The in/ref correlation is diagonal by construction; a vanishing diagonal
    entry (zero squeezing) makes the estimate singular.
    """
    c_or = np.asarray(out_ref.matrix, dtype=float)
    c_ir = np.asarray(in_ref.matrix, dtype=float)
    diag = np.diag(c_ir).copy()
    if np.max(np.abs(c_ir - np.diag(diag))) > 1e-9 * max(1.0, np.max(np.abs(diag))):
        raise EstimationSingularityError("input/reference correlation must be diagonal")
    if np.any(np.abs(diag) < 1e-12):
        raise EstimationSingularityError(
            "input/reference correlation is singular (a diagonal entry is zero; "
            "this happens at zero squeezing)"
        )
    s = c_or / diag[None, :]
    var = (out_ref.stderr / diag[None, :]) ** 2
    var += (c_or * in_ref.stderr.diagonal()[None, :] / diag[None, :] ** 2) ** 2
    return SEstimate(s, np.sqrt(var))


def analytic_input_reference_correlation(config: LatticeConfig) -> CorrelationMatrix:
    """Closed-form diagonal <q_in q_ref^T> for non-initialized inputs.

    Pairings: input b_k with reference a_{k-1}, input d_k with reference
    c_{k-N}; x components correlate, p components anti-correlate.
    """
    ra, rb, rc, rd = config.r_parameters
    eta_s, eta_l = config.path_efficiency
    diag = np.array(
        [
            math.sqrt(eta_s) * (math.exp(2 * ra) - math.exp(-2 * rb)) / 4.0,
            math.sqrt(eta_s) * (math.exp(-2 * ra) - math.exp(2 * rb)) / 4.0,
            math.sqrt(eta_l) * (math.exp(2 * rc) - math.exp(-2 * rd)) / 4.0,
            math.sqrt(eta_l) * (math.exp(-2 * rc) - math.exp(2 * rd)) / 4.0,
        ]
    )
    return CorrelationMatrix.exact(np.diag(diag))


@dataclass(frozen=True)
class BasisConfig:
    """One tomography run: shared readout angles for reference and output."""

    ref_basis: str
    out_basis: str

    @property
    def ref_angle(self) -> float:
        return X_BASIS if self.ref_basis == "x" else P_BASIS

    @property
    def out_angle(self) -> float:
        return X_BASIS if self.out_basis == "x" else P_BASIS


def measurement_plan_for_tomography(n_pairs: int = 1) -> list[BasisConfig]:
    """The four basis configurations filling all xx/xp/px/pp correlation entries.

    All reference/output mode pairs are measured jointly each trial, so the
    same four configurations are reused for any number of pairs.
    """
    if n_pairs < 1:
        raise ValueError("need at least one mode pair")
    return [
        BasisConfig("x", "x"),
        BasisConfig("x", "p"),
        BasisConfig("p", "x"),
        BasisConfig("p", "p"),
    ]


# --- nullifiers -------------------------------------------------------------

_W = 1.0 / (2.0 * math.sqrt(2.0))
# Coefficients on the measured ports (A, B, C, D) at steps (k, k+1) for the
# short-delay combinations and (k, k+N) for the long-delay ones.
NULLIFIER_COEFFS = {
    "A": (np.array([_W, -_W, _W, -_W]), np.array([_W, _W, _W, _W]), 1),
    "B": (np.array([-_W, _W, -_W, _W]), np.array([_W, _W, _W, _W]), 1),
    "C": (np.array([-_W, _W, _W, -_W]), np.array([-_W, -_W, _W, _W]), None),
    "D": (np.array([_W, -_W, -_W, _W]), np.array([-_W, -_W, _W, _W]), None),
}
NULLIFIER_BASIS = {"A": "p", "B": "x", "C": "p", "D": "x"}


def nullifier_samples(raw: np.ndarray, port: str, n: int) -> np.ndarray:
    """Per-(k, trial) nullifier combination values from full raw outcomes.

    ``raw`` has shape (T, 4, trials) and must cover every macronode; the
    combination for step k uses steps k and k+1 (ports A, B) or k and k+N
    (ports C, D).
    """
    if port not in NULLIFIER_COEFFS:
        raise MisuseError(f"unknown nullifier port {port!r}")
    c_here, c_there, short = NULLIFIER_COEFFS[port]
    offset = 1 if short == 1 else n
    t_total = raw.shape[0]
    if t_total <= offset:
        raise MisuseError("raw record too short for this nullifier")
    here = np.tensordot(c_here, raw[: t_total - offset], axes=(0, 1))
    there = np.tensordot(c_there, raw[offset:], axes=(0, 1))
    return here + there


def nullifier_variances_db(raw: np.ndarray, basis: str, n: int,
                           anti: bool = False) -> dict:
    """Turn-averaged nullifier noise in dB relative to shot noise.

    ``basis`` is "x" (all angles pi/2) or "p" (all angles 0) and must match
    the schedule that produced ``raw``.  With ``anti`` the same combinations
    quantify the anti-squeezed partner quadratures instead.  Returns
    {port: (steps, db, stderr_db)} for the ports measurable in this basis.
    """
    if basis not in ("x", "p"):
        raise MisuseError(f"basis must be 'x' or 'p', got {basis!r}")
    out = {}
    n_trials = raw.shape[2]
    for port, meas_basis in NULLIFIER_BASIS.items():
        want = meas_basis if not anti else ("x" if meas_basis == "p" else "p")
        if want != basis:
            continue
        samples = nullifier_samples(raw, port, n)
        n_steps = samples.shape[0] // n
        if n_steps < 1:
            raise MisuseError("record shorter than one turn")
        per_turn = samples[: n_steps * n].reshape(n_steps, n, n_trials)
        var = per_turn.var(axis=(1, 2), ddof=1)
        rel = var / 0.5  # shot-noise variance of a unit-norm combination
        stderr = np.sqrt(2.0 / (n * n_trials - 1)) * 10.0 / math.log(10.0)
        out[port] = (
            np.arange(n_steps),
            10.0 * np.log10(rel),
            np.full(n_steps, stderr),
        )
    return out


# --- teleportation metrics ---------------------------------------------------


def witness_noise_power(ref_x, out_x, ref_p, out_p):
    """Normalized two-quadrature EPR witness and its standard error.

    Var(x_ref - x_out) + Var(p_ref + p_out), normalized to its vacuum value 2.
    """
    dx = np.asarray(ref_x) - np.asarray(out_x)
    sp = np.asarray(ref_p) + np.asarray(out_p)
    n = dx.size
    if n < 2:
        raise MisuseError("need at least two samples")
    vx = dx.var(ddof=1)
    vp = sp.var(ddof=1)
    value = (vx + vp) / 2.0
    stderr = math.sqrt((vx**2 + vp**2) * 2.0 / (n - 1)) / 2.0
    return value, stderr


def gain_estimate(out_values: np.ndarray, in_mean: float):
    """Ratio-of-means gain with standard error."""
    out_values = np.asarray(out_values)
    if abs(in_mean) < 1e-9:
        raise IllConditionedGainError(
            f"input displacement {in_mean} too small for a gain estimate"
        )
    n = out_values.size
    g = float(out_values.mean() / in_mean)
    stderr = float(out_values.std(ddof=1) / (math.sqrt(n) * abs(in_mean)))
    return g, stderr


def classical_benchmark(steps) -> np.ndarray:
    """Witness level of the same protocol run with vacuum resources: 1 + m."""
    return 1.0 + np.asarray(steps, dtype=float)


def theory_noise_power(steps, config: LatticeConfig, rail: str = "d") -> np.ndarray:
    """Model witness level e^{-2r}(1 + m), averaged over the rail's two sources."""
    ra, rb, rc, rd = config.r_parameters
    if rail == "d":
        base = (math.exp(-2 * rc) + math.exp(-2 * rd)) / 2.0
    elif rail == "b":
        base = (math.exp(-2 * ra) + math.exp(-2 * rb)) / 2.0
    else:
        raise MisuseError(f"rail must be 'b' or 'd', got {rail!r}")
    return base * (1.0 + np.asarray(steps, dtype=float))
