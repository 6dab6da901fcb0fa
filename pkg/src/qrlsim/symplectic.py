"""Phase-space linear algebra on real quadrature vectors.

Quadratures are ordered (x1, p1, x2, p2, ...) with hbar = 1 and vacuum
variance 1/2.  All matrices are dense real ndarrays.
"""

import numpy as np

from .errors import MisuseError

VACUUM_VARIANCE = 0.5


def rotation_matrix(theta: float) -> np.ndarray:
    """2x2 phase-space rotation [[cos, -sin], [sin, cos]]."""
    if not np.isfinite(theta):
        raise ValueError(f"rotation angle must be finite, got {theta}")
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def squeeze_matrix(t: float) -> np.ndarray:
    """2x2 squeezing diag(t, 1/t); t is the x-axis scale factor."""
    if not np.isfinite(t) or t == 0.0:
        raise ValueError(f"squeeze parameter must be finite and nonzero, got {t}")
    return np.diag([t, 1.0 / t])


def bs2() -> np.ndarray:
    """Balanced two-mode beam splitter on mode labels: (1/sqrt2) [[1, -1], [1, 1]]."""
    return np.array([[1.0, -1.0], [1.0, 1.0]]) / np.sqrt(2.0)


def four_splitter() -> np.ndarray:
    """Balanced four-mode splitter mapping (a, b, c, d) to the measured ports.

    B = (B0 (x) I2)(I2 (x) B0^-1); orthogonal, so B^-1 = B^T.  Acts identically
    on x and p, so the same 4x4 applies per quadrature.
    """
    b0 = bs2()
    return np.kron(b0, np.eye(2)) @ np.kron(np.eye(2), b0.T)


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal Omega with 2x2 blocks [[0, 1], [-1, 0]] per mode."""
    if n_modes < 1:
        raise ValueError("n_modes must be positive")
    omega2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(n_modes), omega2)


def is_symplectic(m: np.ndarray, tol: float = 1e-12) -> bool:
    """True iff max |M Omega M^T - Omega| <= tol."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2 != 0:
        raise MisuseError(f"matrix must be square with even dimension, got {m.shape}")
    omega = symplectic_form(m.shape[0] // 2)
    return bool(np.max(np.abs(m @ omega @ m.T - omega)) <= tol)


def direct_sum(*mats: np.ndarray) -> np.ndarray:
    """Block-diagonal stacking of the given matrices."""
    mats = [np.atleast_2d(np.asarray(m, dtype=float)) for m in mats]
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols))
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the first factor as the coarse block structure."""
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def quad_lift(m: np.ndarray) -> np.ndarray:
    """Lift a mode-label matrix to interleaved (x, p) quadratures: M (x) I2."""
    return kron(m, np.eye(2))
