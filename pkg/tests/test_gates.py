import math

import numpy as np
import pytest

from qrlsim.errors import DegenerateTeleportError
from qrlsim.gates import (
    ArbitrarySingleMode,
    BeamSplitter,
    GeneralizedCZ,
    MacronodeAngles,
    PShear,
    Rotation,
    Squeeze45,
    SqueezeNeg90,
    Teleport,
    XShear,
    analytic_gate_matrix,
    angles_for,
    compiled_gate_matrix,
    feedforward_matrices,
    l_matrix,
    s_of_theta,
    t_of_theta,
    v_matrix,
)
from qrlsim.symplectic import four_splitter, is_symplectic, quad_lift, rotation_matrix

SWAP = quad_lift(np.array([[0.0, 1.0], [1.0, 0.0]]))


def random_angles(rng):
    while True:
        t = rng.uniform(-np.pi, np.pi, 4)
        if min(abs(np.sin(t[1] - t[0])), abs(np.sin(t[3] - t[2]))) > 1e-3:
            return MacronodeAngles(*t)


class TestVMatrix:
    def test_rotation_special_case(self):
        psi = 0.6
        assert np.allclose(v_matrix(psi + np.pi / 2, np.pi / 2), rotation_matrix(psi))

    def test_sign_flip_on_phi_minus(self):
        assert np.allclose(v_matrix(0.8, -1.1), -v_matrix(0.8, 1.1))

    def test_neg90_squeeze_value(self):
        assert np.allclose(
            v_matrix(0.0, 2 * np.arctan(2.0)), [[0.0, 0.5], [-2.0, 0.0]]
        )

    def test_anti_symmetry_grid(self):
        grid = np.linspace(0.1, np.pi - 0.1, 20)
        for fp in grid:
            for fm in grid:
                assert np.allclose(v_matrix(fp, -fm), -v_matrix(fp, fm), atol=1e-12)

    def test_det_one_on_grid(self):
        grid = np.linspace(0.1, np.pi - 0.1, 20)
        for fp in grid:
            for fm in grid:
                assert np.isclose(np.linalg.det(v_matrix(fp, fm)), 1.0, atol=1e-12)

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateTeleportError):
            v_matrix(0.3, 0.0)
        with pytest.raises(DegenerateTeleportError):
            v_matrix(0.3, np.pi)


class TestLMatrix:
    def test_axis_aligned_value(self):
        assert np.allclose(l_matrix(0.0, np.pi / 2), np.sqrt(2) * np.array([[0, 1], [1, 0]]))

    def test_column_norms_at_right_angle(self):
        theta = 0.3
        l = l_matrix(theta, theta + np.pi / 2)
        assert np.allclose(np.linalg.norm(l, axis=0), np.sqrt(2), atol=1e-12)

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateTeleportError):
            l_matrix(0.4, 0.4)


class TestMacronodeAngles:
    def test_normalization(self):
        a = MacronodeAngles(3 * np.pi, np.pi / 2, 0.0, np.pi / 2)
        assert np.isclose(a.theta_a, np.pi)

    def test_degenerate_pair_rejected(self):
        with pytest.raises(DegenerateTeleportError):
            MacronodeAngles(0.2, 0.2, 0.0, np.pi / 2)


class TestSOfTheta:
    def test_crossed_identity(self):
        angles = angles_for(Teleport())
        assert angles == MacronodeAngles(0.0, np.pi / 2, 0.0, np.pi / 2)
        assert np.allclose(s_of_theta(angles), np.eye(4), atol=1e-12)

    def test_cz_unit_coupling(self):
        angles = angles_for(GeneralizedCZ(g=1.0, h=0.0))
        expected = np.array(
            [
                [1, 0, 0, 0],
                [0, 1, 1, 0],
                [0, 0, 1, 0],
                [1, 0, 0, 1],
            ],
            dtype=float,
        )
        assert np.allclose(s_of_theta(angles), expected, atol=1e-12)

    def test_swap_law(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            angles = random_angles(rng)
            lhs = s_of_theta(angles.swapped())
            rhs = SWAP @ s_of_theta(angles)
            assert np.allclose(lhs, rhs, atol=1e-9)

    def test_symplectic_sweep(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            assert is_symplectic(s_of_theta(random_angles(rng)), tol=1e-9)


class TestTOfTheta:
    def test_finite_for_catalogue_gates(self):
        gates = [
            Rotation(0.9),
            Teleport(),
            XShear(1.0),
            PShear(1.0),
            SqueezeNeg90(2.0),
            Squeeze45(1.5),
            BeamSplitter(0.5, 0.3),
            GeneralizedCZ(1.0, 0.5),
        ]
        for gate in gates:
            angles = angles_for(gate)
            assert np.all(np.isfinite(t_of_theta(angles)))

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateTeleportError):
            MacronodeAngles(0.1, 0.1 + np.pi, 0.0, np.pi / 2)


class TestFeedforwardMatrices:
    def test_zero_sources_give_zero_fg(self):
        theta = np.array([0.1, 0.9, -0.4, 1.2])
        zero = np.zeros((4, 4))
        f, g, _ = feedforward_matrices(theta, zero, zero)
        assert np.allclose(f, 0.0)
        assert np.allclose(g, 0.0)

    def test_h_at_zero_angles(self):
        b = four_splitter()
        e2 = np.zeros(4)
        e2[1] = 1.0
        e4 = np.zeros(4)
        e4[3] = 1.0
        expected = b @ (np.outer(e2, e2) + np.outer(e4, e4))
        _, _, h = feedforward_matrices(np.zeros(4), np.zeros((4, 4)), np.zeros((4, 4)))
        assert np.allclose(h, expected, atol=1e-15)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(3)
        theta = rng.uniform(-np.pi, np.pi, 4)
        e1 = rng.normal(size=(4, 4))
        en = rng.normal(size=(4, 4))
        b = four_splitter()
        basis = np.eye(4)
        sin_d, cos_d = np.diag(np.sin(theta)), np.diag(np.cos(theta))
        f_expected = (
            sin_d @ b @ np.outer(basis[1], basis[0])
            + cos_d @ b @ np.outer(basis[1], basis[1])
        ) @ e1
        g_expected = (
            sin_d @ b @ np.outer(basis[3], basis[2])
            + cos_d @ b @ np.outer(basis[3], basis[3])
        ) @ en
        h_expected = sin_d @ b @ (
            np.outer(basis[1], basis[0]) + np.outer(basis[3], basis[2])
        ) + cos_d @ b @ (np.outer(basis[1], basis[1]) + np.outer(basis[3], basis[3]))
        f, g, h = feedforward_matrices(theta, e1, en)
        assert np.allclose(f, f_expected, atol=1e-14)
        assert np.allclose(g, g_expected, atol=1e-14)
        assert np.allclose(h, h_expected, atol=1e-14)


def catalogue_grid():
    params = np.linspace(-2.0, 2.0, 10)
    gates = []
    for variant in ("crossed", "twisted"):
        gates += [Rotation(float(p), variant) for p in params]
        gates += [Teleport(variant)]
        gates += [XShear(float(p), variant) for p in params]
        gates += [PShear(float(p), variant) for p in params]
        gates += [SqueezeNeg90(float(p), variant) for p in params if abs(p) > 1e-6]
        gates += [Squeeze45(float(p), variant) for p in params if abs(p) > 1e-6]
        gates += [
            ArbitrarySingleMode(float(a), float(l), float(b), variant)
            for a, l, b in [(0.3, 0.5, -0.8), (1.2, -0.7, 0.4), (-2.0, 1.0, 2.0)]
        ]
    gates += [BeamSplitter(float(r), 0.7) for r in np.linspace(-1.0, 1.0, 10)]
    gates += [BeamSplitter(0.5, float(p)) for p in params]
    gates += [GeneralizedCZ(float(g), float(h)) for g in params[::3] for h in params[::3]]
    return gates


class TestCatalogue:
    def test_round_trip_against_analytic(self):
        for gate in catalogue_grid():
            compiled = compiled_gate_matrix(gate)
            target = analytic_gate_matrix(gate)
            assert np.max(np.abs(compiled - target)) <= 1e-9, gate

    def test_crossed_rotation_block_structure(self):
        m = s_of_theta(angles_for(Rotation(0.9)))
        expected = np.kron(np.eye(2), rotation_matrix(0.9))
        assert np.allclose(m, expected, atol=1e-12)

    def test_cz_parameter_example(self):
        m = s_of_theta(angles_for(GeneralizedCZ(0.5, 0.25)))
        expected = np.array(
            [
                [1, 0, 0, 0],
                [0.5, 1, 0.5, 0],
                [0, 0, 1, 0],
                [0.5, 0, 0.5, 1],
            ]
        )
        assert np.allclose(m, expected, atol=1e-12)

    def test_full_transmission_beam_splitter_is_identity(self):
        assert np.allclose(analytic_gate_matrix(BeamSplitter(1.0, 0.0)), np.eye(4))
        assert np.allclose(compiled_gate_matrix(BeamSplitter(1.0, 0.0)), np.eye(4), atol=1e-12)

    def test_shear_blocks(self):
        assert np.allclose(XShear(1.0).block(), [[1, 0], [2, 1]])
        assert np.allclose(PShear(1.0).block(), [[1, 2], [0, 1]])
        assert np.allclose(Squeeze45(1.0).block(), np.eye(2))

    def test_twisted_variant_is_swap_times_crossed(self):
        for gate, twisted in [
            (Rotation(0.4), Rotation(0.4, "twisted")),
            (XShear(0.8), XShear(0.8, "twisted")),
        ]:
            assert np.allclose(
                analytic_gate_matrix(twisted), SWAP @ analytic_gate_matrix(gate)
            )

    def test_arbitrary_single_mode_block(self):
        gate = ArbitrarySingleMode(0.3, 0.5, -0.8)
        expected = (
            rotation_matrix(0.3)
            @ np.diag([math.exp(0.5), math.exp(-0.5)])
            @ rotation_matrix(-0.8)
        )
        assert np.allclose(gate.block(), expected)

    def test_out_of_domain_rejected(self):
        with pytest.raises(ValueError):
            BeamSplitter(1.5)
        with pytest.raises(ValueError):
            SqueezeNeg90(0.0)
        with pytest.raises(ValueError):
            Rotation(0.3, variant="sideways")
