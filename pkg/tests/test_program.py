import math

import numpy as np
import pytest

from qrlsim.errors import AdjacencyError, CapacityError, ParseError
from qrlsim.gates import (
    ArbitrarySingleMode,
    BeamSplitter,
    GeneralizedCZ,
    PShear,
    Rotation,
    Squeeze45,
    XShear,
)
from qrlsim.lattice import (
    LatticeConfig,
    Operate,
    Readout,
    build_outcome_map,
    readout_values,
    simulate,
)
from qrlsim.program import (
    CircuitProgram,
    Gate,
    Init,
    Measure,
    RoutingRequest,
    compile_program,
    compile_routing,
    composed_gate_matrix,
    deserialize_program,
    deserialize_schedule,
    odd_even_layers,
    realized_permutation,
    serialize_program,
    serialize_schedule,
)
from qrlsim.symplectic import four_splitter

B4 = four_splitter()
X_BASIS = math.pi / 2
CFG = LatticeConfig(n=5, squeezing_db=(3.0, 4.0, 5.0, 6.0), seed=31)


def program_mean_map(program, config):
    """Readout means of the compiled program for unit tests, via the oracle."""
    out = np.zeros(2 * program.n_modes)
    for theta, offset in ((math.pi / 2, 0), (0.0, 1)):
        prog = CircuitProgram(
            program.n_modes,
            [op for op in program.operations if not isinstance(op, Measure)]
            + [Measure(m, theta) for m in range(program.n_modes)],
            name=program.name,
        )
        sched = compile_program(prog, config)
        omap = build_outcome_map(sched, config)
        for mode in range(program.n_modes):
            info = sched.provenance["outputs"][mode]
            block = omap.mean()[4 * info["macronode"]:4 * info["macronode"] + 4]
            out[2 * mode + offset] = (B4.T @ block)[3]
    return out


class TestCompile:
    def test_empty_program_returns_displacement(self):
        prog = CircuitProgram(1, [Init(0, x=1.25, p=-0.75), Measure(0)])
        mean = program_mean_map(prog, CFG)
        assert np.allclose(mean, [1.25, -0.75], atol=1e-12)

    def test_single_rotation_placement(self):
        prog = CircuitProgram(
            2, [Init(0, x=1.0), Init(1), Gate(Rotation(0.9), (0,)),
                Measure(0), Measure(1)]
        )
        sched = compile_program(prog, CFG)
        ops = [r for r in sched.roles if isinstance(r, Operate)]
        assert len(ops) == CFG.n  # one gate turn
        placed = sched.provenance["placements"]
        assert placed == [{"op": 2, "turn": 1, "rows": [0]}]

    def test_compiler_soundness_mixed_program(self):
        prog = CircuitProgram(
            3,
            [
                Init(0, x=1.0, p=-0.5),
                Init(1, x=0.3, p=0.7),
                Init(2, x=-1.1, p=0.2),
                Gate(Rotation(0.9), (0,)),
                Gate(XShear(0.8), (1,)),
                Gate(GeneralizedCZ(0.7, -0.2), (0, 1)),
                Gate(PShear(-0.6), (2,)),
                Gate(BeamSplitter(0.4, 0.3), (1, 2)),
                Gate(Squeeze45(1.4), (0,)),
                Gate(ArbitrarySingleMode(0.5, -0.4, 1.2), (2,)),
                Measure(0),
                Measure(1),
                Measure(2),
            ],
        )
        disp = np.array([1.0, -0.5, 0.3, 0.7, -1.1, 0.2])
        expected = composed_gate_matrix(prog) @ disp
        got = program_mean_map(prog, CFG)
        assert np.max(np.abs(got - expected)) <= 1e-9

    def test_cz_operands_auto_ordered(self):
        prog = CircuitProgram(
            2, [Init(0, x=1.0), Init(1, x=2.0),
                Gate(GeneralizedCZ(1.0, 0.0), (1, 0)), Measure(0), Measure(1)]
        )
        disp = np.array([1.0, 0.0, 2.0, 0.0])
        expected = composed_gate_matrix(prog) @ disp
        assert np.max(np.abs(program_mean_map(prog, CFG) - expected)) <= 1e-9

    def test_beam_splitter_requires_row_order(self):
        prog = CircuitProgram(
            2, [Init(0), Init(1), Gate(BeamSplitter(0.5), (1, 0)),
                Measure(0), Measure(1)]
        )
        with pytest.raises(AdjacencyError):
            compile_program(prog, CFG)

    def test_twisted_single_mode_rejected(self):
        prog = CircuitProgram(
            1, [Init(0), Gate(Rotation(0.3, "twisted"), (0,)), Measure(0)]
        )
        with pytest.raises(AdjacencyError):
            compile_program(prog, CFG)

    def test_too_many_modes(self):
        ops = [Init(m) for m in range(5)] + [Measure(m) for m in range(5)]
        with pytest.raises(CapacityError):
            compile_program(CircuitProgram(5, ops), CFG)

    def test_capacity_guard(self):
        cfg = LatticeConfig(n=5, total_macronodes=8)
        prog = CircuitProgram(1, [Init(0), Measure(0)])
        with pytest.raises(CapacityError):
            compile_program(prog, cfg)

    def test_program_validation(self):
        with pytest.raises(ValueError):
            CircuitProgram(1, [Measure(0)]).validate()  # not initialized
        with pytest.raises(ValueError):
            CircuitProgram(1, [Init(0)]).validate()  # never measured
        with pytest.raises(ValueError):
            CircuitProgram(
                1, [Init(0), Measure(0), Gate(Rotation(0.1), (0,))]
            ).validate()  # gate after measurement
        with pytest.raises(ValueError):
            Gate(GeneralizedCZ(1.0), (0, 0))  # repeated operand


class TestOddEvenLayers:
    def test_identity_is_single_empty_layer(self):
        assert odd_even_layers(np.arange(4)) == [[]]

    def test_reverse_of_three(self):
        target = np.array([2, 1, 0])
        layers = odd_even_layers(target)
        assert len(layers) <= 3
        items = list(range(3))
        for layer in layers:
            for i in layer:
                items[i], items[i + 1] = items[i + 1], items[i]
        assert [items.index(m) for m in range(3)] == [2, 1, 0]

    def test_depth_bound_random(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            n = int(rng.integers(2, 17))
            target = rng.permutation(n)
            layers = odd_even_layers(target)
            assert len(layers) <= n
            items = list(range(n))
            for layer in layers:
                for i in layer:
                    items[i], items[i + 1] = items[i + 1], items[i]
            assert all(items[target[m]] == m for m in range(n))


class TestRouting:
    def test_identity_request(self):
        cfg = LatticeConfig(n=4, seed=1)
        sched = compile_routing(
            RoutingRequest(order="explicit", permutation=np.arange(3)), cfg
        )
        assert np.array_equal(realized_permutation(sched), np.arange(3))
        assert sched.provenance["readout_turn"] == 2  # one sanity turn

    def test_single_transposition(self):
        cfg = LatticeConfig(n=4, seed=1)
        sched = compile_routing(
            RoutingRequest(order="explicit", permutation=np.array([1, 0, 2])), cfg
        )
        assert np.array_equal(realized_permutation(sched), [1, 0, 2])

    def test_random_permutations_symbolic(self):
        rng = np.random.default_rng(23)
        for trial in range(200):
            n_modes = int(rng.integers(2, 17))
            perm = rng.permutation(n_modes)
            cfg = LatticeConfig(n=max(2, n_modes + int(rng.integers(0, 3))), seed=trial)
            sched = compile_routing(
                RoutingRequest(order="explicit", permutation=perm), cfg
            )
            assert np.array_equal(realized_permutation(sched), perm), (n_modes, perm)
            assert len(sched.provenance["layers"]) <= n_modes

    def test_full_lattice_permutation(self):
        # n_modes equal to the turn size exercises the wrap-straddling pairs.
        rng = np.random.default_rng(29)
        cfg = LatticeConfig(n=7, seed=5)
        for trial in range(20):
            perm = rng.permutation(7)
            sched = compile_routing(
                RoutingRequest(order="explicit", permutation=perm), cfg
            )
            assert np.array_equal(realized_permutation(sched), perm), perm

    def test_sorting_orders(self):
        keys = np.array([0.4, -1.2, 3.0, 0.1])
        asc = RoutingRequest(order="ascending", displacements=keys)
        assert np.array_equal(asc.target_permutation(4), [2, 0, 3, 1])
        desc = RoutingRequest(order="descending", displacements=keys)
        assert np.array_equal(desc.target_permutation(4), [1, 3, 0, 2])

    def test_routing_simulation_agrees_with_trace(self):
        rng = np.random.default_rng(37)
        for trial in range(5):
            n_modes = int(rng.integers(3, 7))
            perm = rng.permutation(n_modes)
            cfg = LatticeConfig(n=n_modes + 1, squeezing_db=4.5, seed=trial)
            disp_sd = np.linspace(2.0, 6.0, n_modes) * np.where(
                np.arange(n_modes) % 2 == 0, 1, -1
            )
            disp = disp_sd * math.sqrt(0.5)
            sched = compile_routing(
                RoutingRequest(order="explicit", permutation=perm,
                               displacements=disp),
                cfg, n_modes=n_modes,
            )
            assert np.array_equal(realized_permutation(sched), perm)
            res = simulate(sched, cfg, 4000)
            vals = readout_values(res.processed)
            port_index = {"b": 1, "d": 3}
            for mode in range(n_modes):
                info = sched.provenance["outputs"][mode]
                samples = vals[res.kept_index(info["macronode"])][port_index[info["port"]]]
                se = samples.std(ddof=1) / math.sqrt(res.n_trials)
                assert abs(samples.mean() - disp[mode]) <= 5 * se + 1e-9

    def test_capacity_bounds(self):
        cfg = LatticeConfig(n=3)
        with pytest.raises(CapacityError):
            compile_routing(
                RoutingRequest(order="explicit", permutation=np.arange(4)), cfg
            )
        with pytest.raises(ValueError):
            RoutingRequest(order="explicit", permutation=np.array([0, 0, 1])) \
                .target_permutation(3)


class TestSerialization:
    def test_schedule_round_trip_bits(self):
        cfg = LatticeConfig(n=4, seed=2)
        sched = compile_routing(
            RoutingRequest(order="explicit", permutation=np.array([2, 0, 1, 3]),
                           displacements=np.array([0.5, -1.0, 2.0, 0.25])),
            cfg,
        )
        text = serialize_schedule(sched)
        back = deserialize_schedule(text)
        assert serialize_schedule(back) == text
        assert np.array_equal(back.theta_array, sched.theta_array)
        assert np.array_equal(back.input_displacements, sched.input_displacements)
        assert realized_permutation(back).tolist() == realized_permutation(sched).tolist()

    def test_large_schedule_round_trip(self):
        from qrlsim.experiments import parallel_teleport_schedule

        sched = parallel_teleport_schedule(10, 8, math.pi / 2, (1.0, 2.0))
        text = serialize_schedule(sched)
        assert serialize_schedule(deserialize_schedule(text)) == text
        assert len(deserialize_schedule(text)) == 100

    def test_program_round_trip(self):
        prog = CircuitProgram(
            2,
            [
                Init(0, theta=0.1, x=1.0, p=-2.0),
                Init(1),
                Gate(Rotation(0.9), (0,)),
                Gate(GeneralizedCZ(1.0, 0.25), (0, 1)),
                Gate(ArbitrarySingleMode(0.2, 0.3, -0.4), (1,)),
                Measure(0, theta=0.0),
                Measure(1),
            ],
            name="demo",
        )
        text = serialize_program(prog)
        back = deserialize_program(text)
        assert serialize_program(back) == text
        assert back.n_modes == 2 and back.name == "demo"

    def test_hand_written_program(self):
        text = (
            "qrl-program v1\n"
            "modes 1\n"
            "init 0 x=2.0\n"
            "gate rotation 0 psi=0.5\n"
            "measure 0\n"
        )
        prog = deserialize_program(text)
        assert isinstance(prog.operations[1].spec, Rotation)
        assert prog.operations[1].spec.psi == 0.5

    def test_truncated_and_bad_inputs(self):
        with pytest.raises(ParseError):
            deserialize_schedule("qrl-schedule v2\nn 3\n")
        with pytest.raises(ParseError):
            deserialize_schedule("qrl-schedule v1\nn 3\nmacronodes 2\n0 readout 0.0\n")
        with pytest.raises(ParseError):
            deserialize_schedule(
                "qrl-schedule v1\nn 3\nmacronodes 1\n0 operate 0.0,1.0\n"
            )
        with pytest.raises(ParseError):
            deserialize_program("qrl-program v1\nmodes 1\ngate warp 0\n")
        with pytest.raises(ParseError):
            deserialize_program("not a program\n")

    def test_parse_error_carries_line(self):
        try:
            deserialize_program("qrl-program v1\nmodes 1\ninit 0 x=abc\n")
        except ParseError as exc:
            assert exc.line == 3
        else:
            raise AssertionError("expected ParseError")


class TestCompensatedBeamSplitter:
    def test_composite_is_bare_splitter(self):
        from qrlsim.program import compensated_beam_splitter
        from qrlsim.symplectic import quad_lift

        r = 0.6
        ops = [Init(0, x=1.0, p=0.5), Init(1, x=-0.7, p=0.2)]
        ops += compensated_beam_splitter(0, 1, r)
        ops += [Measure(0), Measure(1)]
        prog = CircuitProgram(2, ops)
        b2 = np.array(
            [[r, -math.sqrt(1 - r * r)], [math.sqrt(1 - r * r), r]]
        )
        expected_map = quad_lift(b2)
        assert np.allclose(composed_gate_matrix(prog), expected_map, atol=1e-12)

        disp = np.array([1.0, 0.5, -0.7, 0.2])
        got = program_mean_map(prog, CFG)
        assert np.max(np.abs(got - expected_map @ disp)) <= 1e-9
