"""Time-domain macronode lattice: exact affine outcome maps and Monte Carlo.

The machine is modeled exactly as its measurement pipeline: four squeezed
sources per time step, two balanced beam splitters forming EPR pairs, one- and
N-step delays, the four-splitter, homodyne detection at scheduled angles, and
numerical feedforward applied to the recorded outcomes.

Two engines share one schedule contract: ``build_outcome_map`` produces the
exact affine map from initial-mode quadratures to processed outcomes (the
oracle for every closed-form check), and ``simulate`` streams Monte Carlo
trials in a rolling window of N+1 macronodes.
"""

import hashlib
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import MisuseError, ScheduleOrderError
from .gates import MacronodeAngles, feedforward_matrices, t_of_theta
from .symplectic import four_splitter

_B4 = four_splitter()
_SQRT2 = math.sqrt(2.0)

LOG10_E = math.log10(math.e)


def db_to_r(squeezing_db: float) -> float:
    """Squeezing parameter r with nullifier variance e^{-2r}/2 at the given dB."""
    if squeezing_db < 0:
        raise ValueError(f"squeezing_db must be >= 0, got {squeezing_db}")
    return squeezing_db * math.log(10.0) / 20.0


@dataclass(frozen=True)
class LatticeConfig:
    """Machine parameters: lattice period, squeezing, loss, and RNG seed."""

    n: int = 101
    squeezing_db: tuple = (4.5, 4.5, 4.5, 4.5)
    path_efficiency: tuple = (1.0, 1.0)
    seed: int = 0
    total_macronodes: int | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        db = self.squeezing_db
        if np.isscalar(db):
            db = (float(db),) * 4
        else:
            db = tuple(float(v) for v in db)
            if len(db) != 4:
                raise ValueError("squeezing_db needs one value per source A, B, C, D")
        if any(v < 0 for v in db):
            raise ValueError("squeezing_db values must be >= 0")
        object.__setattr__(self, "squeezing_db", db)
        eta = tuple(float(v) for v in self.path_efficiency)
        if len(eta) != 2 or any(not 0.0 < v <= 1.0 for v in eta):
            raise ValueError("path_efficiency must be two values in (0, 1]")
        object.__setattr__(self, "path_efficiency", eta)

    @property
    def r_parameters(self) -> np.ndarray:
        return np.array([db_to_r(v) for v in self.squeezing_db])

    @property
    def lossless(self) -> bool:
        return self.path_efficiency == (1.0, 1.0)

    def source_scales(self) -> np.ndarray:
        """Standard deviations of the per-step source draws.

        Slots 0..7 are (xA, pA, xB, pB, xC, pC, xD, pD); A and C are
        p-squeezed, B and D are x-squeezed.  With loss enabled, slots 8..11
        are the vacuum admixtures for the delayed b and d paths.
        """
        ra, rb, rc, rd = self.r_parameters
        s = math.sqrt(0.5)
        scales = [
            math.exp(ra) * s, math.exp(-ra) * s,
            math.exp(-rb) * s, math.exp(rb) * s,
            math.exp(rc) * s, math.exp(-rc) * s,
            math.exp(-rd) * s, math.exp(rd) * s,
        ]
        if not self.lossless:
            scales += [s, s, s, s]
        return np.array(scales)

    def digest(self) -> str:
        text = (
            f"n={self.n};db={self.squeezing_db};eta={self.path_efficiency};"
            f"seed={self.seed}"
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]


# --- macronode roles -------------------------------------------------------


@dataclass(frozen=True)
class Operate:
    """Apply the two-mode map defined by the four angles; E is T(theta)."""

    angles: MacronodeAngles


@dataclass(frozen=True)
class Readout:
    """Measure all four ports at one shared angle; no feedforward (E = 0).

    theta = pi/2 reads the x quadratures, theta = 0 the p quadratures.
    """

    theta: float = math.pi / 2


@dataclass(frozen=True)
class Initialize:
    """Measure at one shared angle and prepare squeezed thermal inputs.

    The prepared modes land on the b port of macronode k+1 and the d port of
    macronode k+N; ``displacement`` = (x_b, p_b, x_d, p_d) displaces them.
    """

    theta: float = 0.0
    displacement: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        disp = tuple(float(v) for v in self.displacement)
        if len(disp) != 4 or not all(np.isfinite(disp)):
            raise ValueError("displacement must be four finite values")
        object.__setattr__(self, "displacement", disp)


def init_feedforward_matrix(theta: float) -> np.ndarray:
    """Displacement coefficient matrix E for an initialization at angle theta."""
    k = np.array([[-math.sin(theta), 0.0], [math.cos(theta), 0.0]])
    kk = np.zeros((4, 4))
    kk[:2, :2] = k
    kk[2:, 2:] = k
    return kk @ _B4.T


def initialization_moments(theta: float, config: LatticeConfig) -> np.ndarray:
    """Variances of the prepared modes in the frame rotated by -theta.

    Order: (x_b, p_b, x_d, p_d).  Means are the programmed displacements.
    """
    ra, rb, rc, rd = config.r_parameters
    c2, s2 = math.cos(theta) ** 2, math.sin(theta) ** 2
    return np.array(
        [
            c2 / 4.0 * (math.exp(2 * ra) + math.exp(-2 * rb))
            + s2 / 4.0 * (math.exp(-2 * ra) + math.exp(2 * rb)),
            c2 * math.exp(-2 * ra) + s2 * math.exp(-2 * rb),
            c2 / 4.0 * (math.exp(2 * rc) + math.exp(-2 * rd))
            + s2 / 4.0 * (math.exp(-2 * rc) + math.exp(2 * rd)),
            c2 * math.exp(-2 * rc) + s2 * math.exp(-2 * rd),
        ]
    )


def role_angles(role) -> np.ndarray:
    if isinstance(role, Operate):
        return role.angles.as_array()
    if isinstance(role, (Readout, Initialize)):
        return np.full(4, float(role.theta))
    raise TypeError(f"not a macronode role: {role!r}")


def role_e_matrix(role) -> np.ndarray:
    if isinstance(role, Operate):
        return t_of_theta(role.angles)
    if isinstance(role, Initialize):
        return init_feedforward_matrix(role.theta)
    if isinstance(role, Readout):
        return np.zeros((4, 4))
    raise TypeError(f"not a macronode role: {role!r}")


class AngleSchedule:
    """Per-macronode roles and displacements for an entire run."""

    def __init__(self, n, roles, extra_displacements=None, provenance=None):
        if n < 2:
            raise ValueError(f"n must be >= 2, got {n}")
        self.n = int(n)
        self.roles = list(roles)
        if not self.roles:
            raise ValueError("schedule must contain at least one macronode")
        for k, role in enumerate(self.roles):
            role_angles(role)  # validates the role type
        self.extra_displacements = {}
        for k, disp in (extra_displacements or {}).items():
            if not 0 <= k < len(self.roles):
                raise ScheduleOrderError(f"displacement target {k} outside schedule")
            self.extra_displacements[int(k)] = np.asarray(disp, dtype=float).reshape(4)
        self.provenance = dict(provenance or {})

    def __len__(self):
        return len(self.roles)

    @property
    def total_macronodes(self):
        return len(self.roles)

    @cached_property
    def theta_array(self) -> np.ndarray:
        return np.array([role_angles(r) for r in self.roles])

    @cached_property
    def e_matrices(self) -> np.ndarray:
        return np.array([role_e_matrix(r) for r in self.roles])

    @cached_property
    def input_displacements(self) -> np.ndarray:
        """Resolved displacement (x_b, p_b, x_d, p_d) on each macronode's inputs."""
        t = len(self.roles)
        disp = np.zeros((t, 4))
        for k, role in enumerate(self.roles):
            if isinstance(role, Initialize):
                if k + 1 < t:
                    disp[k + 1, 0:2] += role.displacement[0:2]
                if k + self.n < t:
                    disp[k + self.n, 2:4] += role.displacement[2:4]
        for k, extra in self.extra_displacements.items():
            disp[k] += extra
        return disp

    @cached_property
    def ff_matrices(self):
        """(F, G, H) stacks; out-of-range predecessors contribute zero."""
        t = len(self.roles)
        zero = np.zeros((4, 4))
        e = self.e_matrices
        f = np.empty((t, 4, 4))
        g = np.empty((t, 4, 4))
        h = np.empty((t, 4, 4))
        for k in range(t):
            e1 = e[k - 1] if k - 1 >= 0 else zero
            en = e[k - self.n] if k - self.n >= 0 else zero
            f[k], g[k], h[k] = feedforward_matrices(self.theta_array[k], e1, en)
        return f, g, h

    def digest(self) -> str:
        parts = [f"n={self.n}"]
        for k, role in enumerate(self.roles):
            parts.append(f"{k}:{role!r}")
            extra = self.extra_displacements.get(k)
            if extra is not None:
                parts.append("+" + ",".join(f"{v:.17g}" for v in extra))
        return hashlib.sha256("\n".join(parts).encode()).hexdigest()[:16]


def run_digest(schedule: AngleSchedule, config: LatticeConfig) -> str:
    return hashlib.sha256(
        (schedule.digest() + config.digest()).encode()
    ).hexdigest()[:16]


# --- exact affine engine ----------------------------------------------------


@dataclass
class OutcomeMap:
    """Exact affine map from source quadratures to homodyne outcomes.

    ``raw`` and ``processed`` have one row per (macronode, port); columns index
    the source draws of steps -N .. T-1 in the sampler's slot layout.  The
    outcome vector is ``processed @ draws + offset``.
    """

    raw: np.ndarray
    processed: np.ndarray
    offset: np.ndarray
    scales: np.ndarray
    schedule: AngleSchedule
    config: LatticeConfig

    def row(self, k: int, port: int) -> int:
        return 4 * k + port

    def covariance(self, rows=None, processed=True) -> np.ndarray:
        m = self.processed if processed else self.raw
        if rows is not None:
            m = m[np.asarray(rows)]
        scaled = m * self.scales
        return scaled @ scaled.T

    def cross_covariance(self, rows_a, rows_b, processed=True) -> np.ndarray:
        m = self.processed if processed else self.raw
        a = m[np.asarray(rows_a)] * self.scales
        b = m[np.asarray(rows_b)] * self.scales
        return a @ b.T

    def mean(self, rows=None) -> np.ndarray:
        if rows is None:
            return self.offset
        return self.offset[np.asarray(rows)]

    def source_column(self, step: int, slot: int) -> int:
        width = len(self.config.source_scales())
        return (step + self.config.n) * width + slot


def build_outcome_map(schedule: AngleSchedule, config: LatticeConfig) -> OutcomeMap:
    """Exact affine map for the whole schedule (oracle engine)."""
    n = config.n
    if schedule.n != n:
        raise MisuseError(f"schedule lattice period {schedule.n} != config {n}")
    if config.total_macronodes is not None and len(schedule) > config.total_macronodes:
        raise ScheduleOrderError(
            f"schedule length {len(schedule)} exceeds configured capacity "
            f"{config.total_macronodes}"
        )
    t = len(schedule)
    per_step = config.source_scales()
    width = len(per_step)
    n_cols = width * (t + n)
    eta_s, eta_l = config.path_efficiency
    cs, cl = math.sqrt(eta_s), math.sqrt(eta_l)
    vs, vl = math.sqrt(1.0 - eta_s), math.sqrt(1.0 - eta_l)

    thetas = schedule.theta_array
    f_mats, g_mats, h_mats = schedule.ff_matrices
    disps = schedule.input_displacements

    raw = np.zeros((4 * t, n_cols))
    col0 = lambda step: (step + n) * width

    for k in range(t):
        sin_t = np.sin(thetas[k])
        cos_t = np.cos(thetas[k])
        for j in range(4):
            r = raw[4 * k + j]
            base_k = col0(k)
            base_1 = col0(k - 1)
            base_n = col0(k - n)
            # mode a: (A_k - B_k)/sqrt(2)
            ca = _B4[j, 0] / _SQRT2
            r[base_k + 0] += sin_t[j] * ca
            r[base_k + 1] += cos_t[j] * ca
            r[base_k + 2] -= sin_t[j] * ca
            r[base_k + 3] -= cos_t[j] * ca
            # mode b: sqrt(eta_s) (A_{k-1} + B_{k-1})/sqrt(2) + loss vacuum
            cb = _B4[j, 1] * cs / _SQRT2
            r[base_1 + 0] += sin_t[j] * cb
            r[base_1 + 1] += cos_t[j] * cb
            r[base_1 + 2] += sin_t[j] * cb
            r[base_1 + 3] += cos_t[j] * cb
            # mode c: (C_k - D_k)/sqrt(2)
            cc = _B4[j, 2] / _SQRT2
            r[base_k + 4] += sin_t[j] * cc
            r[base_k + 5] += cos_t[j] * cc
            r[base_k + 6] -= sin_t[j] * cc
            r[base_k + 7] -= cos_t[j] * cc
            # mode d: sqrt(eta_l) (C_{k-N} + D_{k-N})/sqrt(2) + loss vacuum
            cd = _B4[j, 3] * cl / _SQRT2
            r[base_n + 4] += sin_t[j] * cd
            r[base_n + 5] += cos_t[j] * cd
            r[base_n + 6] += sin_t[j] * cd
            r[base_n + 7] += cos_t[j] * cd
            if width == 12:
                r[base_k + 8] += sin_t[j] * _B4[j, 1] * vs
                r[base_k + 9] += cos_t[j] * _B4[j, 1] * vs
                r[base_k + 10] += sin_t[j] * _B4[j, 3] * vl
                r[base_k + 11] += cos_t[j] * _B4[j, 3] * vl

    processed = raw.copy()
    offset = np.zeros(4 * t)
    for k in range(t):
        rows = slice(4 * k, 4 * k + 4)
        if k - 1 >= 0:
            prev = slice(4 * (k - 1), 4 * k)
            processed[rows] += f_mats[k] @ processed[prev]
            offset[rows] += f_mats[k] @ offset[prev]
        if k - n >= 0:
            prev = slice(4 * (k - n), 4 * (k - n) + 4)
            processed[rows] += g_mats[k] @ processed[prev]
            offset[rows] += g_mats[k] @ offset[prev]
        offset[rows] += h_mats[k] @ disps[k]

    scales = np.tile(per_step, t + n)
    return OutcomeMap(raw, processed, offset, scales, schedule, config)


# --- streaming Monte Carlo engine -------------------------------------------


@dataclass
class SimResult:
    """Monte Carlo outcomes for the kept macronodes.

    ``raw`` and ``processed`` have shape (kept, 4 ports, trials).
    """

    kept: np.ndarray
    raw: np.ndarray
    processed: np.ndarray
    n_trials: int
    seed: int
    config: LatticeConfig
    schedule: AngleSchedule
    state_window: int

    @property
    def run_digest(self) -> str:
        return run_digest(self.schedule, self.config)

    def kept_index(self, k: int) -> int:
        idx = np.nonzero(self.kept == k)[0]
        if idx.size == 0:
            raise MisuseError(f"macronode {k} was not recorded")
        return int(idx[0])


class StreamingSampler:
    """Trial sampler holding only a rolling window of N+1 macronode states."""

    def __init__(self, schedule: AngleSchedule, config: LatticeConfig):
        if schedule.n != config.n:
            raise MisuseError(
                f"schedule lattice period {schedule.n} != config {config.n}"
            )
        if config.total_macronodes is not None and len(schedule) > config.total_macronodes:
            raise ScheduleOrderError(
                f"schedule length {len(schedule)} exceeds configured capacity "
                f"{config.total_macronodes}"
            )
        self.schedule = schedule
        self.config = config
        self.scales = config.source_scales()
        self.sin_t = np.sin(schedule.theta_array)
        self.cos_t = np.cos(schedule.theta_array)
        f, g, h = schedule.ff_matrices
        self.f_mats, self.g_mats = f, g
        # Displacement contributions are trial-independent; fold them once.
        self.disp_terms = np.einsum(
            "kij,kj->ki", h, schedule.input_displacements
        )
        self.state_window = config.n + 1

    def _step_draws(self, step: int, n_trials: int) -> np.ndarray:
        """Scaled source draws for one step, shape (width, trials)."""
        bitgen = np.random.Philox(
            key=self.config.seed & (2**64 - 1), counter=[0, 0, step + self.config.n, 0]
        )
        rng = np.random.Generator(bitgen)
        z = rng.standard_normal((len(self.scales), n_trials))
        z *= self.scales[:, None]
        return z

    def run(self, n_trials: int, keep=None, keep_raw: bool = True) -> SimResult:
        if n_trials < 1:
            raise ValueError(f"n_trials must be >= 1, got {n_trials}")
        n = self.config.n
        t_total = len(self.schedule)
        if keep is None or (isinstance(keep, str) and keep == "all"):
            kept = np.arange(t_total)
        else:
            kept = np.unique(np.asarray(keep, dtype=int))
            if kept.size and (kept[0] < 0 or kept[-1] >= t_total):
                raise MisuseError("keep indices outside schedule")
        keep_set = {int(k): i for i, k in enumerate(kept)}

        eta_s, eta_l = self.config.path_efficiency
        inv = 1.0 / _SQRT2
        vs, vl = math.sqrt(1.0 - eta_s), math.sqrt(1.0 - eta_l)
        lossy = not self.config.lossless
        # per-row scales for the (a, b, c, d) mode stack
        mode_scale = np.array(
            [[inv], [math.sqrt(eta_s) * inv], [inv], [math.sqrt(eta_l) * inv]]
        )

        raw_out = np.empty((kept.size, 4, n_trials)) if keep_raw else None
        proc_out = np.empty((kept.size, 4, n_trials))

        # Rolling state: AB sources of the previous step, CD sources of the
        # last N steps, processed outcomes of the last N macronodes; nothing
        # here scales with the schedule length.
        ab_prev = None
        cd_ring = np.zeros((n, 4, n_trials))
        m_ring = np.zeros((n, 4, n_trials))
        sin_col = self.sin_t[:, :, None]
        cos_col = self.cos_t[:, :, None]
        disp_col = self.disp_terms[:, :, None]

        modes_x = np.empty((4, n_trials))
        modes_p = np.empty((4, n_trials))
        meas_x = np.empty((4, n_trials))
        meas_p = np.empty((4, n_trials))
        m_raw = np.empty((4, n_trials))
        tmp = np.empty((4, n_trials))
        g_term = np.empty((4, n_trials))

        for step in range(-n, t_total):
            draws = self._step_draws(step, n_trials)
            if step < 0:
                if step == -1:
                    ab_prev = draws
                cd_ring[step % n] = draws[4:8]
                continue

            k = step
            cd_old = cd_ring[(k - n) % n]
            np.subtract(draws[0], draws[2], out=modes_x[0])
            np.add(ab_prev[0], ab_prev[2], out=modes_x[1])
            np.subtract(draws[4], draws[6], out=modes_x[2])
            np.add(cd_old[0], cd_old[2], out=modes_x[3])
            np.subtract(draws[1], draws[3], out=modes_p[0])
            np.add(ab_prev[1], ab_prev[3], out=modes_p[1])
            np.subtract(draws[5], draws[7], out=modes_p[2])
            np.add(cd_old[1], cd_old[3], out=modes_p[3])
            modes_x *= mode_scale
            modes_p *= mode_scale
            if lossy:
                modes_x[1] += vs * draws[8]
                modes_p[1] += vs * draws[9]
                modes_x[3] += vl * draws[10]
                modes_p[3] += vl * draws[11]

            np.matmul(_B4, modes_x, out=meas_x)
            np.matmul(_B4, modes_p, out=meas_p)
            np.multiply(sin_col[k], meas_x, out=m_raw)
            np.multiply(cos_col[k], meas_p, out=tmp)
            m_raw += tmp

            # Slot k % n still holds the k-N outcome needed by the G term;
            # consume it before overwriting the slot in place.
            slot = m_ring[k % n]
            use_g = k >= n
            if use_g:
                np.matmul(self.g_mats[k], slot, out=g_term)
            np.add(m_raw, disp_col[k], out=slot)
            if k >= 1:
                np.matmul(self.f_mats[k], m_ring[(k - 1) % n], out=tmp)
                slot += tmp
            if use_g:
                slot += g_term

            ab_prev = draws
            cd_ring[k % n] = draws[4:8]

            if k in keep_set:
                i = keep_set[k]
                if keep_raw:
                    raw_out[i] = m_raw
                proc_out[i] = slot

        return SimResult(
            kept=kept,
            raw=raw_out,
            processed=proc_out,
            n_trials=n_trials,
            seed=self.config.seed,
            config=self.config,
            schedule=self.schedule,
            state_window=self.state_window,
        )


def simulate(schedule: AngleSchedule, config: LatticeConfig, n_trials: int,
             keep=None, keep_raw: bool = True) -> SimResult:
    """Run the streaming sampler over the full schedule."""
    return StreamingSampler(schedule, config).run(n_trials, keep=keep,
                                                  keep_raw=keep_raw)


def apply_numerical_feedforward(raw: np.ndarray, schedule: AngleSchedule) -> np.ndarray:
    """Re-run the feedforward recursion on complete raw outcomes.

    ``raw`` must cover every macronode of the schedule, shape (T, 4) or
    (T, 4, trials).  Returns the processed outcomes in the same shape.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.shape[0] != len(schedule) or raw.shape[1] != 4:
        raise ScheduleOrderError(
            f"raw outcomes shape {raw.shape} does not cover the schedule "
            f"({len(schedule)} macronodes)"
        )
    squeeze = raw.ndim == 2
    if squeeze:
        raw = raw[:, :, None]
    f_mats, g_mats, h_mats = schedule.ff_matrices
    disps = schedule.input_displacements
    n = schedule.n
    out = np.empty_like(raw)
    for k in range(raw.shape[0]):
        m = raw[k] + (h_mats[k] @ disps[k])[:, None]
        if k - 1 >= 0:
            m = m + f_mats[k] @ out[k - 1]
        if k - n >= 0:
            m = m + g_mats[k] @ out[k - n]
        out[k] = m
    return out[:, :, 0] if squeeze else out


def readout_values(m: np.ndarray) -> np.ndarray:
    """Computational-mode outcomes (a, b, c, d) from measured-port outcomes.

    Applies the inverse four-splitter along the port axis; accepts shapes
    (4,), (4, trials) or (macronodes, 4, trials).
    """
    m = np.asarray(m, dtype=float)
    if m.ndim == 1 or m.ndim == 2:
        if m.shape[0] != 4:
            raise MisuseError(f"port axis must have length 4, got {m.shape}")
        return _B4.T @ m
    if m.ndim == 3:
        if m.shape[1] != 4:
            raise MisuseError(f"port axis must have length 4, got {m.shape}")
        return np.einsum("pq,kqt->kpt", _B4.T, m)
    raise MisuseError(f"unsupported outcome shape {m.shape}")


def schedule_readout(result: SimResult, k: int) -> np.ndarray:
    """Readout values at macronode k of a simulation; role must be Readout."""
    if not isinstance(result.schedule.roles[k], Readout):
        raise MisuseError(f"macronode {k} is not a readout macronode")
    return readout_values(result.processed[result.kept_index(k)])
