"""Measurement-angle algebra for macronode operations.

One macronode measures its four ports at angles (thetaA, thetaB, thetaC,
thetaD) and thereby applies a two-mode Gaussian map S to its (b, d) inputs.
This module holds the generalized-teleportation matrix V, the feedforward
coefficient matrices L / T / F / G / H, and the catalogue translating named
gates to angle settings and back to closed-form 4x4 matrices.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTeleportError
from .symplectic import bs2, four_splitter, quad_lift, rotation_matrix, squeeze_matrix

# Reject |sin(angle difference)| below this: the feedforward matrix L diverges
# at differences of 0 mod pi.
EPS_DEGENERATE = 1e-6

_B0 = bs2()
_B0_LIFT = quad_lift(_B0)
_B0_INV_LIFT = quad_lift(_B0.T)
_B4 = four_splitter()
_SWAP_OUT = quad_lift(np.array([[0.0, 1.0], [1.0, 0.0]]))


def normalize_angle(theta: float) -> float:
    """Map an angle to the canonical interval (-pi, pi]."""
    return math.atan2(math.sin(theta), math.cos(theta))


@dataclass(frozen=True)
class MacronodeAngles:
    """The four homodyne angles defining one macronode operation."""

    theta_a: float
    theta_b: float
    theta_c: float
    theta_d: float

    def __post_init__(self):
        for name in ("theta_a", "theta_b", "theta_c", "theta_d"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, normalize_angle(float(v)))
        if abs(math.sin(self.theta_b - self.theta_a)) < EPS_DEGENERATE:
            raise DegenerateTeleportError(
                f"theta_b - theta_a = {self.theta_b - self.theta_a!r} is 0 mod pi"
            )
        if abs(math.sin(self.theta_d - self.theta_c)) < EPS_DEGENERATE:
            raise DegenerateTeleportError(
                f"theta_d - theta_c = {self.theta_d - self.theta_c!r} is 0 mod pi"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.theta_a, self.theta_b, self.theta_c, self.theta_d])

    def swapped(self) -> "MacronodeAngles":
        """Exchange theta_a and theta_b, which swaps the two output modes."""
        return MacronodeAngles(self.theta_b, self.theta_a, self.theta_c, self.theta_d)


def v_matrix(phi_plus: float, phi_minus: float) -> np.ndarray:
    """Generalized teleportation matrix V(phi+, phi-); det V = 1."""
    s = math.sin(phi_minus)
    if abs(s) < EPS_DEGENERATE:
        raise DegenerateTeleportError(f"phi_minus = {phi_minus!r} is 0 mod pi")
    cp, cm = math.cos(phi_plus), math.cos(phi_minus)
    sp = math.sin(phi_plus)
    return np.array([[sp, cm + cp], [cm - cp, sp]]) / s


def l_matrix(theta1: float, theta2: float) -> np.ndarray:
    """Feedforward coefficient matrix L(theta1, theta2)."""
    s = math.sin(theta2 - theta1)
    if abs(s) < EPS_DEGENERATE:
        raise DegenerateTeleportError(f"theta2 - theta1 = {theta2 - theta1!r} is 0 mod pi")
    return np.array(
        [
            [math.cos(theta2), math.cos(theta1)],
            [math.sin(theta2), math.sin(theta1)],
        ]
    ) * (math.sqrt(2.0) / s)


def s_of_theta(angles: MacronodeAngles) -> np.ndarray:
    """4x4 symplectic map applied to (x_b, p_b, x_d, p_d) by one macronode."""
    v1 = v_matrix(angles.theta_b + angles.theta_a, angles.theta_b - angles.theta_a)
    v2 = v_matrix(angles.theta_d + angles.theta_c, angles.theta_d - angles.theta_c)
    blocks = np.zeros((4, 4))
    blocks[:2, :2] = v1
    blocks[2:, 2:] = v2
    return _B0_INV_LIFT @ blocks @ _B0_LIFT


def t_of_theta(angles: MacronodeAngles) -> np.ndarray:
    """Feedforward matrix T whose use as E cancels the measurement back-action."""
    blocks = np.zeros((4, 4))
    blocks[:2, :2] = l_matrix(angles.theta_a, angles.theta_b)
    blocks[2:, 2:] = l_matrix(angles.theta_c, angles.theta_d)
    return _B0_INV_LIFT @ blocks


def feedforward_matrices(theta: np.ndarray, e_prev1: np.ndarray, e_prev_n: np.ndarray):
    """Numerical feedforward matrices (F, G, H) for one macronode.

    ``theta`` holds the four measurement angles of the current macronode;
    ``e_prev1`` / ``e_prev_n`` are the displacement coefficient matrices E of
    macronodes k-1 and k-N (zero matrices for readout or out-of-range).
    """
    theta = np.asarray(theta, dtype=float)
    sin_b = np.sin(theta) * _B4[:, 1]
    cos_b = np.cos(theta) * _B4[:, 1]
    sin_d = np.sin(theta) * _B4[:, 3]
    cos_d = np.cos(theta) * _B4[:, 3]
    f = np.outer(sin_b, e_prev1[0]) + np.outer(cos_b, e_prev1[1])
    g = np.outer(sin_d, e_prev_n[2]) + np.outer(cos_d, e_prev_n[3])
    h = np.zeros((4, 4))
    h[:, 0] = sin_b
    h[:, 1] = cos_b
    h[:, 2] = sin_d
    h[:, 3] = cos_d
    return f, g, h


# --- gate catalogue -------------------------------------------------------

CROSSED = "crossed"
TWISTED = "twisted"


def _check_variant(variant):
    if variant not in (CROSSED, TWISTED):
        raise ValueError(f"variant must be 'crossed' or 'twisted', got {variant!r}")


@dataclass(frozen=True)
class Rotation:
    """Phase rotation R(psi) on each transiting mode."""

    psi: float
    variant: str = CROSSED

    def __post_init__(self):
        _check_variant(self.variant)

    def block(self) -> np.ndarray:
        return rotation_matrix(self.psi)

    def phis(self):
        return self.psi + math.pi / 2, math.pi / 2


@dataclass(frozen=True)
class Teleport:
    """Identity teleportation; twisted variant exchanges the two outputs."""

    variant: str = CROSSED

    def __post_init__(self):
        _check_variant(self.variant)

    def block(self) -> np.ndarray:
        return np.eye(2)

    def phis(self):
        return math.pi / 2, math.pi / 2


@dataclass(frozen=True)
class XShear:
    """x-invariant shear [[1, 0], [2 kappa, 1]]."""

    kappa: float
    variant: str = CROSSED

    def __post_init__(self):
        _check_variant(self.variant)

    def block(self) -> np.ndarray:
        return np.array([[1.0, 0.0], [2.0 * self.kappa, 1.0]])

    def phis(self):
        a = math.atan(self.kappa)
        return math.pi / 2 + a, math.pi / 2 - a


@dataclass(frozen=True)
class PShear:
    """p-invariant shear [[1, 2 eta], [0, 1]]."""

    eta: float
    variant: str = CROSSED

    def __post_init__(self):
        _check_variant(self.variant)

    def block(self) -> np.ndarray:
        return np.array([[1.0, 2.0 * self.eta], [0.0, 1.0]])

    def phis(self):
        c = math.pi / 2 - math.atan(self.eta)
        return c, c


@dataclass(frozen=True)
class SqueezeNeg90:
    """Squeezing by t composed with a -90 degree rotation: [[0, 1/t], [-t, 0]]."""

    t: float
    variant: str = CROSSED

    def __post_init__(self):
        _check_variant(self.variant)
        if self.t == 0.0 or not np.isfinite(self.t):
            raise ValueError(f"squeeze parameter must be finite and nonzero, got {self.t}")

    def block(self) -> np.ndarray:
        return np.array([[0.0, 1.0 / self.t], [-self.t, 0.0]])

    def phis(self):
        return 0.0, 2.0 * math.atan(self.t)


@dataclass(frozen=True)
class Squeeze45:
    """Squeezing along the 45-degree axis: R(-pi/4) Sigma(t) R(pi/4)."""

    t: float
    variant: str = CROSSED

    def __post_init__(self):
        _check_variant(self.variant)
        if self.t == 0.0 or not np.isfinite(self.t):
            raise ValueError(f"squeeze parameter must be finite and nonzero, got {self.t}")

    def block(self) -> np.ndarray:
        t = self.t
        return 0.5 * np.array([[t + 1.0 / t, 1.0 / t - t], [1.0 / t - t, t + 1.0 / t]])

    def phis(self):
        return math.pi / 2, 2.0 * math.atan(self.t)


@dataclass(frozen=True)
class ArbitrarySingleMode:
    """R(alpha) Sigma(exp(lam)) R(beta), realized over two consecutive macronodes."""

    alpha: float
    lam: float
    beta: float
    variant: str = CROSSED

    def __post_init__(self):
        _check_variant(self.variant)

    def block(self) -> np.ndarray:
        return (
            rotation_matrix(self.alpha)
            @ squeeze_matrix(math.exp(self.lam))
            @ rotation_matrix(self.beta)
        )


@dataclass(frozen=True)
class BeamSplitter:
    """Variable beam splitter with reflectivity-like parameter r in [-1, 1].

    The primitive inherently rotates both outputs by psi and the second mode
    by an extra -pi/2 (+pi/2 on its input); nothing is compensated here.
    """

    r: float
    psi: float = 0.0

    def __post_init__(self):
        if not -1.0 <= self.r <= 1.0:
            raise ValueError(f"beam splitter parameter r must lie in [-1, 1], got {self.r}")


@dataclass(frozen=True)
class GeneralizedCZ:
    """Entangling gate with x-x coupling g and joint shear h."""

    g: float
    h: float = 0.0


SINGLE_MODE_KINDS = (Rotation, Teleport, XShear, PShear, SqueezeNeg90, Squeeze45)
GATE_KINDS = SINGLE_MODE_KINDS + (ArbitrarySingleMode, BeamSplitter, GeneralizedCZ)


def _single_mode_angles(phi_plus, phi_minus, variant):
    lo = (phi_plus - phi_minus) / 2.0
    hi = (phi_plus + phi_minus) / 2.0
    if variant == CROSSED:
        return MacronodeAngles(lo, hi, lo, hi)
    return MacronodeAngles(hi, lo, lo, hi)


def angles_for(gate):
    """Measurement angles realizing ``gate``.

    Returns one MacronodeAngles, or a (first, second) pair for
    ArbitrarySingleMode, which needs two consecutive macronodes.
    """
    if isinstance(gate, SINGLE_MODE_KINDS):
        phi_plus, phi_minus = gate.phis()
        return _single_mode_angles(phi_plus, phi_minus, gate.variant)
    if isinstance(gate, ArbitrarySingleMode):
        # First a plain rotation, then a squeeze-rotation; the pair composes
        # to R(alpha) Sigma(e^lam) R(beta).  The twisted variant swaps outputs
        # at the second macronode.
        first = _single_mode_angles(gate.beta - gate.alpha, math.pi / 2, CROSSED)
        second = _single_mode_angles(
            2.0 * gate.alpha + math.pi, 2.0 * math.atan(math.exp(gate.lam)), gate.variant
        )
        return first, second
    if isinstance(gate, BeamSplitter):
        c = math.acos(gate.r)
        base = gate.psi / 2.0
        return MacronodeAngles(
            base + c / 2.0,
            base + c / 2.0 + math.pi / 2.0,
            base - c / 2.0,
            base - c / 2.0 + math.pi / 2.0,
        )
    if isinstance(gate, GeneralizedCZ):
        return MacronodeAngles(
            math.atan(gate.h - gate.g / 2.0),
            math.pi / 2.0,
            math.atan(gate.h + gate.g / 2.0),
            math.pi / 2.0,
        )
    raise TypeError(f"not a gate spec: {gate!r}")


def analytic_gate_matrix(gate) -> np.ndarray:
    """Closed-form 4x4 matrix of ``gate``, independent of angle compilation."""
    if isinstance(gate, SINGLE_MODE_KINDS + (ArbitrarySingleMode,)):
        m = np.kron(np.eye(2), gate.block())
        if gate.variant == TWISTED:
            m = _SWAP_OUT @ m
        return m
    if isinstance(gate, BeamSplitter):
        b2 = np.array(
            [
                [gate.r, -math.sqrt(1.0 - gate.r**2)],
                [math.sqrt(1.0 - gate.r**2), gate.r],
            ]
        )
        pre = np.eye(4)
        pre[2:, 2:] = rotation_matrix(math.pi / 2)
        post = np.eye(4)
        post[2:, 2:] = rotation_matrix(-math.pi / 2)
        both_rot = np.kron(np.eye(2), rotation_matrix(gate.psi))
        return both_rot @ post @ quad_lift(b2) @ pre
    if isinstance(gate, GeneralizedCZ):
        g, h = gate.g, gate.h
        return np.array(
            [
                [1.0, 0.0, 0.0, 0.0],
                [2.0 * h, 1.0, g, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [g, 0.0, 2.0 * h, 1.0],
            ]
        )
    raise TypeError(f"not a gate spec: {gate!r}")


def compiled_gate_matrix(gate) -> np.ndarray:
    """4x4 matrix obtained by running the gate's angles through s_of_theta."""
    angles = angles_for(gate)
    if isinstance(angles, tuple):
        first, second = angles
        return s_of_theta(second) @ s_of_theta(first)
    return s_of_theta(angles)
