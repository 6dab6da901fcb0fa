import numpy as np
import pytest

from qrlsim.errors import MisuseError
from qrlsim.symplectic import (
    bs2,
    direct_sum,
    four_splitter,
    is_symplectic,
    kron,
    quad_lift,
    rotation_matrix,
    squeeze_matrix,
    symplectic_form,
)


def test_rotation_identity_and_quarter_turn():
    assert np.allclose(rotation_matrix(0.0), np.eye(2))
    assert np.allclose(rotation_matrix(np.pi / 2), [[0, -1], [1, 0]])


def test_rotation_composition():
    lhs = rotation_matrix(0.3) @ rotation_matrix(0.7)
    assert np.allclose(lhs, rotation_matrix(1.0), atol=1e-14)


def test_rotation_rejects_non_finite():
    with pytest.raises(ValueError):
        rotation_matrix(np.nan)
    with pytest.raises(ValueError):
        rotation_matrix(np.inf)


def test_squeeze_values():
    assert np.allclose(squeeze_matrix(1.0), np.eye(2))
    assert np.allclose(squeeze_matrix(2.0), np.diag([2.0, 0.5]))
    assert np.allclose(squeeze_matrix(3.0) @ squeeze_matrix(1 / 3), np.eye(2))
    assert np.isclose(np.linalg.det(squeeze_matrix(2.0)), 1.0)


def test_squeeze_rejects_zero():
    with pytest.raises(ValueError):
        squeeze_matrix(0.0)


def test_bs2_is_orthogonal_rotation():
    b0 = bs2()
    assert np.allclose(b0 @ b0.T, np.eye(2), atol=1e-15)
    assert np.isclose(np.linalg.det(b0), 1.0)
    vec = np.array([1.0, 1.0]) / np.sqrt(2)
    assert np.allclose(b0 @ vec, [0.0, 1.0], atol=1e-15)


def test_four_splitter_entries():
    expected = 0.5 * np.array(
        [
            [1, 1, -1, -1],
            [-1, 1, 1, -1],
            [1, 1, 1, 1],
            [-1, 1, -1, 1],
        ]
    )
    b = four_splitter()
    assert np.allclose(b, expected, atol=1e-15)
    assert np.allclose(b @ b.T, np.eye(4), atol=1e-14)
    assert np.allclose(np.linalg.inv(b), b.T, atol=1e-12)
    assert np.allclose(b @ np.ones(4), [0, 0, 2, 0], atol=1e-15)


def test_symplectic_form_properties():
    omega = symplectic_form(3)
    assert np.allclose(omega @ omega, -np.eye(6))
    assert np.allclose(omega.T, -omega)


def test_is_symplectic():
    assert is_symplectic(np.eye(4), tol=1e-12)
    assert is_symplectic(rotation_matrix(0.4))
    assert not is_symplectic(np.diag([2.0, 1.0]))
    with pytest.raises(MisuseError):
        is_symplectic(np.eye(3))


def test_rotation_symplectic_sweep():
    rng = np.random.default_rng(7)
    for theta in rng.uniform(-np.pi, np.pi, 1000):
        assert is_symplectic(rotation_matrix(theta), tol=1e-12)


def test_squeeze_symplectic_log_spaced():
    for t in np.logspace(-1, 1, 25):
        assert is_symplectic(squeeze_matrix(t), tol=1e-12)


def test_four_splitter_quadrature_lift_symplectic():
    assert is_symplectic(quad_lift(four_splitter()), tol=1e-12)


def test_direct_sum_and_kron():
    assert np.allclose(direct_sum(np.eye(2), np.eye(2)), np.eye(4))
    b0 = bs2()
    lifted = kron(b0, np.eye(2))
    assert lifted.shape == (4, 4)
    assert np.allclose(lifted[:2, :2], b0[0, 0] * np.eye(2))
    assert np.allclose(lifted[:2, 2:], b0[0, 1] * np.eye(2))
    big = kron(b0, np.eye(4))
    assert big.shape == (8, 8)
    prod = kron(np.eye(2), np.linalg.inv(b0)) @ kron(np.eye(2), b0)
    assert np.allclose(prod, np.eye(4), atol=1e-14)
