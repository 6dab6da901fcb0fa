"""Circuit IR, the compiler to angle schedules, and permutation routing.

Two layouts are used on the lattice grid (row = macronode index within a
turn, column = turn):

* Circuit programs keep each logical mode on a fixed row, carried rightward
  by crossed identity teleports.  Single-mode gates use crossed variants on
  the mode's row; a two-mode gate picks the upper operand onto the
  descending rail (twisted identity), applies the gate where the operands
  meet, and returns the travelling output to its row on the next turn.

* Routing runs with an all-twisted baseline, under which every mode drifts
  down one row per turn and adjacent movers meet pairwise at every
  macronode, like a brick-wall circuit.  A crossed macronode exchanges the
  two logical positions that meet there, so any matching of adjacent
  transpositions fits in one turn and an odd-even transposition network
  realizes an arbitrary permutation in at most n turns.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AdjacencyError,
    CapacityError,
    MisuseError,
    ParseError,
)
from .gates import (
    CROSSED,
    TWISTED,
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
    angles_for,
)
from .lattice import AngleSchedule, Initialize, LatticeConfig, Operate, Readout

X_BASIS = math.pi / 2

CROSSED_ID = angles_for(Teleport(CROSSED))
TWISTED_ID = angles_for(Teleport(TWISTED))


# --- circuit IR --------------------------------------------------------------


@dataclass(frozen=True)
class Init:
    mode: int
    theta: float = 0.0
    x: float = 0.0
    p: float = 0.0


@dataclass(frozen=True)
class Gate:
    spec: object
    modes: tuple

    def __post_init__(self):
        modes = tuple(int(m) for m in self.modes)
        if len(set(modes)) != len(modes):
            raise ValueError(f"gate operands must be distinct, got {modes}")
        expected = 2 if isinstance(self.spec, (BeamSplitter, GeneralizedCZ)) else 1
        if len(modes) != expected:
            raise ValueError(
                f"{type(self.spec).__name__} takes {expected} mode(s), got {modes}"
            )
        object.__setattr__(self, "modes", modes)


@dataclass(frozen=True)
class Measure:
    mode: int
    theta: float = X_BASIS


@dataclass
class CircuitProgram:
    """Logical Gaussian circuit: initializations, gates, final measurements."""

    n_modes: int
    operations: list = field(default_factory=list)
    name: str = ""

    def validate(self):
        if self.n_modes < 1:
            raise ValueError("program needs at least one mode")
        initialized = set()
        measured = set()
        for i, op in enumerate(self.operations):
            modes = (op.mode,) if isinstance(op, (Init, Measure)) else op.modes
            for m in modes:
                if not 0 <= m < self.n_modes:
                    raise ValueError(f"op {i}: mode {m} outside 0..{self.n_modes - 1}")
                if m in measured:
                    raise ValueError(f"op {i}: mode {m} already measured")
            if isinstance(op, Init):
                if op.mode in initialized:
                    raise ValueError(f"op {i}: mode {op.mode} initialized twice")
                initialized.add(op.mode)
            elif isinstance(op, Gate):
                for m in op.modes:
                    if m not in initialized:
                        raise ValueError(f"op {i}: mode {m} used before initialization")
            elif isinstance(op, Measure):
                if op.mode not in initialized:
                    raise ValueError(f"op {i}: mode {op.mode} measured before initialization")
                measured.add(op.mode)
            else:
                raise TypeError(f"op {i}: unknown operation {op!r}")
        missing = initialized - measured
        if missing:
            raise ValueError(f"modes never measured: {sorted(missing)}")
        return self

    def gate_sequence(self):
        return [op for op in self.operations if isinstance(op, Gate)]


# --- compiler ----------------------------------------------------------------


def _check_capacity(n_macronodes, config):
    cap = config.total_macronodes
    if cap is not None and n_macronodes > cap:
        raise CapacityError(
            f"schedule needs {n_macronodes} macronodes, lattice capacity is {cap}"
        )


def compile_program(program: CircuitProgram, config: LatticeConfig) -> AngleSchedule:
    """Lower a circuit program to an angle schedule (mode m rides row m).

    Returns a schedule whose provenance maps each mode to its readout
    (macronode, port) and records every gate placement.
    """
    program.validate()
    n = config.n
    if program.n_modes > n - 1:
        raise CapacityError(
            f"{program.n_modes} modes exceed the {n - 1} usable inputs of an "
            f"{n}-macronode turn"
        )

    init_theta = {m: 0.0 for m in range(program.n_modes)}
    init_disp = {m: (0.0, 0.0) for m in range(program.n_modes)}
    measure_theta = {}
    for op in program.operations:
        if isinstance(op, Init):
            init_theta[op.mode] = op.theta
            init_disp[op.mode] = (op.x, op.p)
        elif isinstance(op, Measure):
            measure_theta[op.mode] = op.theta

    # turn index -> {row: MacronodeAngles}; turn 0 is the initialization turn.
    turns = {}
    exclusive = set()
    ready = {m: 1 for m in range(program.n_modes)}
    placements = []

    def place_single(row, angles_pair, turn):
        while True:
            if turn in exclusive or row in turns.get(turn, {}):
                turn += 1
                continue
            if isinstance(angles_pair, tuple):
                if turn + 1 in exclusive or row in turns.get(turn + 1, {}):
                    turn += 1
                    continue
                turns.setdefault(turn, {})[row] = angles_pair[0]
                turns.setdefault(turn + 1, {})[row] = angles_pair[1]
                return turn, turn + 1
            turns.setdefault(turn, {})[row] = angles_pair
            return turn, turn

    for i, op in enumerate(program.operations):
        if not isinstance(op, Gate):
            continue
        if isinstance(op.spec, (BeamSplitter, GeneralizedCZ)):
            m1, m2 = op.modes
            if m1 > m2:
                if isinstance(op.spec, GeneralizedCZ):
                    m1, m2 = m2, m1  # symmetric under operand exchange
                else:
                    raise AdjacencyError(
                        f"op {i}: first operand must ride the upper row; "
                        f"swap the operands of {op.spec!r} or reorder modes"
                    )
            t = max(
                [ready[m1], ready[m2], 1]
                + [turn + 1 for turn in turns]
                + [turn + 1 for turn in exclusive]
            )
            gate_turn = {row: CROSSED_ID for row in range(n)}
            gate_turn[m1] = TWISTED_ID  # pick the upper operand onto the rail
            gate_turn[m2] = angles_for(op.spec)
            return_turn = {row: CROSSED_ID for row in range(n)}
            return_turn[m1] = TWISTED_ID  # drop the travelling output back
            turns[t] = gate_turn
            turns[t + 1] = return_turn
            exclusive.update((t, t + 1))
            ready[m1] = ready[m2] = t + 2
            placements.append({"op": i, "turn": t, "rows": [m1, m2]})
        else:
            if op.spec.variant != CROSSED:
                raise AdjacencyError(
                    f"op {i}: twisted single-mode gates move the mode off its "
                    f"row; compile_program only places crossed variants"
                )
            mode = op.modes[0]
            angles = angles_for(op.spec)
            start, end = place_single(mode, angles, ready[mode])
            ready[mode] = end + 1
            placements.append({"op": i, "turn": start, "rows": [mode]})

    n_gate_turns = max([0] + list(turns))
    readout_turn = n_gate_turns + 1
    total_turns = readout_turn + 1
    _check_capacity(total_turns * n, config)

    roles = []
    for row in range(n):
        if row < program.n_modes:
            x, p = init_disp[row]
            roles.append(Initialize(init_theta[row], (0.0, 0.0, x, p)))
        else:
            roles.append(Initialize(0.0))
    for t in range(1, readout_turn):
        row_angles = turns.get(t, {})
        for row in range(n):
            roles.append(Operate(row_angles.get(row, CROSSED_ID)))
    for row in range(n):
        roles.append(Readout(measure_theta.get(row, X_BASIS)))

    outputs = {
        m: {"macronode": readout_turn * n + m, "port": "d"}
        for m in range(program.n_modes)
    }
    provenance = {
        "kind": "program",
        "name": program.name,
        "n_modes": program.n_modes,
        "placements": placements,
        "outputs": outputs,
        "readout_turn": readout_turn,
    }
    return AngleSchedule(n, roles, provenance=provenance)


def compensated_beam_splitter(mode_a: int, mode_b: int, r: float) -> list:
    """Beam splitter without the primitive's inherent phase rotations.

    The macronode primitive realizes the splitter sandwiched between a +pi/2
    pre-rotation and a -pi/2 post-rotation on the second mode; this composite
    cancels both with explicit rotation macronodes, so the three operations
    together apply the bare two-mode splitter B2(r) lifted to quadratures.
    """
    return [
        Gate(Rotation(-math.pi / 2), (mode_b,)),
        Gate(BeamSplitter(r, 0.0), (mode_a, mode_b)),
        Gate(Rotation(math.pi / 2), (mode_b,)),
    ]


def composed_gate_matrix(program: CircuitProgram) -> np.ndarray:
    """Analytic end-to-end mean map of the program on its 2 n_modes quadratures."""
    from .gates import analytic_gate_matrix

    dim = 2 * program.n_modes
    total = np.eye(dim)
    for op in program.gate_sequence():
        full = np.eye(dim)
        if len(op.modes) == 1:
            m = op.modes[0]
            full[2 * m:2 * m + 2, 2 * m:2 * m + 2] = op.spec.block()
        else:
            m1, m2 = op.modes
            if isinstance(op.spec, GeneralizedCZ) and m1 > m2:
                m1, m2 = m2, m1
            g = analytic_gate_matrix(op.spec)
            sl1 = slice(2 * m1, 2 * m1 + 2)
            sl2 = slice(2 * m2, 2 * m2 + 2)
            full[sl1, sl1] = g[:2, :2]
            full[sl1, sl2] = g[:2, 2:]
            full[sl2, sl1] = g[2:, :2]
            full[sl2, sl2] = g[2:, 2:]
        total = full @ total
    return total


# --- permutation routing ------------------------------------------------------


@dataclass
class RoutingRequest:
    """Route inputs to outputs by displacement order or explicit permutation."""

    order: str = "ascending"
    displacements: np.ndarray | None = None
    permutation: np.ndarray | None = None

    def target_permutation(self, n_modes: int) -> np.ndarray:
        if self.order == "explicit":
            perm = np.asarray(self.permutation, dtype=int)
            if sorted(perm.tolist()) != list(range(n_modes)):
                raise ValueError("permutation must be a bijection on the modes")
            return perm
        keys = np.asarray(self.displacements, dtype=float)
        if keys.shape != (n_modes,):
            raise ValueError("need one displacement key per mode")
        if self.order == "ascending":
            ranks = np.argsort(np.argsort(keys, kind="stable"), kind="stable")
        elif self.order == "descending":
            ranks = np.argsort(np.argsort(-keys, kind="stable"), kind="stable")
        else:
            raise ValueError(f"unknown order {self.order!r}")
        return ranks


def odd_even_layers(target: np.ndarray) -> list:
    """Comparator layers realizing ``target`` (item i ends at target[i]).

    Standard odd-even transposition: sort the destination keys; the recorded
    per-layer adjacent transpositions move every item to its destination in
    at most n layers.
    """
    keys = list(np.asarray(target, dtype=int))
    n = len(keys)
    layers = []
    for layer_index in range(max(n, 1)):
        swaps = []
        start = layer_index % 2
        for i in range(start, n - 1, 2):
            if keys[i] > keys[i + 1]:
                keys[i], keys[i + 1] = keys[i + 1], keys[i]
                swaps.append(i)
        layers.append(swaps)
        if keys == sorted(keys):
            break
    while len(layers) > 1 and not layers[-1]:
        layers.pop()
    return layers


class _Walker:
    """Symbolic state of the drifting frame: row residents plus the rail hand.

    With the all-twisted baseline, every mode is picked onto the descending
    rail once per turn and dropped one row lower, so the occupants drift and
    adjacent movers meet pairwise; the cyclic meeting order is
    hand, row 0, row 1, ..., row N-1.
    """

    def __init__(self, n_rows, n_modes):
        self.rows = [m if m < n_modes else None for m in range(n_rows)]
        self.hand = None

    def meeting(self, row):
        return self.hand, self.rows[row]

    def exchange(self, row):
        self.hand, self.rows[row] = self.rows[row], self.hand

    def linear_order(self, n_modes):
        """Modes in necklace order, starting after a junk bead.

        The occupied beads stay contiguous on the necklace, so this recovers
        the comparator-network position of every mode.
        """
        beads = [self.hand] + self.rows
        length = len(beads)
        start = None
        for i in range(length):
            if beads[i] is None and beads[(i + 1) % length] is not None:
                start = (i + 1) % length
                break
        if start is None:
            raise MisuseError("cannot locate the routed block on the lattice")
        order = []
        i = start
        while len(order) < n_modes:
            if beads[i] is None:
                raise MisuseError("routed modes are not contiguous; not a routing schedule")
            order.append(beads[i])
            i = (i + 1) % length
        return order


def compile_routing(request: RoutingRequest, config: LatticeConfig,
                    n_modes: int | None = None,
                    readout_basis: float = X_BASIS) -> AngleSchedule:
    """Schedule routing ``n_modes`` inputs to the requested output order.

    Inputs are initialized on rows 0..n_modes-1 of turn 0 with the requested
    displacements.  Each odd-even comparator layer occupies one cycle of
    pairwise meetings (a swap pair whose meeting falls on the turn boundary
    resolves at the top of the next turn), so an L-layer network costs at
    most L+1 operate turns.  The realized permutation is recoverable from the
    schedule with :func:`realized_permutation`.
    """
    if n_modes is None:
        if request.displacements is not None:
            n_modes = len(request.displacements)
        elif request.permutation is not None:
            n_modes = len(request.permutation)
        else:
            raise ValueError("n_modes required when the request carries no arrays")
    n = config.n
    if not 1 <= n_modes <= n:
        raise CapacityError(f"routing supports 1..{n} modes, got {n_modes}")
    target = request.target_permutation(n_modes)
    layers = odd_even_layers(target)

    arrangement = list(range(n_modes))
    mode_pair_layers = []
    for swaps in layers:
        pairs = {(arrangement[i], arrangement[i + 1]) for i in swaps}
        for i in swaps:
            arrangement[i], arrangement[i + 1] = arrangement[i + 1], arrangement[i]
        mode_pair_layers.append(pairs)
    for mode in range(n_modes):
        assert arrangement[target[mode]] == mode

    walker = _Walker(n, n_modes)
    pending: set = set()
    next_layer = 0
    turn_roles_all = []
    crossed_by_turn = []
    guard = 2 * len(layers) + 4
    while next_layer < len(mode_pair_layers) or pending:
        if len(turn_roles_all) >= guard:
            raise MisuseError("routing walker failed to place all comparator layers")
        turn_roles = []
        crossed_rows = []
        for row in range(n):
            if not pending:
                while next_layer < len(mode_pair_layers) and not pending:
                    pending = set(mode_pair_layers[next_layer])
                    next_layer += 1
            meeting = walker.meeting(row)
            if meeting in pending:
                pending.discard(meeting)
                turn_roles.append(Operate(CROSSED_ID))
                crossed_rows.append(row)
            else:
                turn_roles.append(Operate(TWISTED_ID))
                walker.exchange(row)
        turn_roles_all.append(turn_roles)
        crossed_by_turn.append(crossed_rows)
    if not turn_roles_all:
        # Identity request: one sanity turn of plain drift.
        turn_roles_all.append([Operate(TWISTED_ID) for _ in range(n)])
        for row in range(n):
            walker.exchange(row)
        crossed_by_turn.append([])

    final_order = walker.linear_order(n_modes)
    assert final_order == arrangement

    n_turns = len(turn_roles_all)
    _check_capacity((n_turns + 2) * n, config)

    roles = []
    for row in range(n):
        if row < n_modes and request.displacements is not None:
            disp = (0.0, 0.0, float(request.displacements[row]), 0.0)
        else:
            disp = (0.0, 0.0, 0.0, 0.0)
        roles.append(Initialize(0.0, disp))
    for turn_roles in turn_roles_all:
        roles.extend(turn_roles)
    roles.extend(Readout(readout_basis) for _ in range(n))

    readout_turn = n_turns + 1
    outputs = {}
    for mode in range(n_modes):
        if walker.hand == mode:
            outputs[mode] = {"macronode": readout_turn * n, "port": "b"}
        else:
            row = walker.rows.index(mode)
            outputs[mode] = {"macronode": readout_turn * n + row, "port": "d"}

    provenance = {
        "kind": "routing",
        "n_modes": n_modes,
        "order": request.order,
        "target": [int(v) for v in target],
        "layers": [[int(s) for s in swaps] for swaps in layers],
        "crossed_rows": crossed_by_turn,
        "outputs": outputs,
        "readout_turn": readout_turn,
    }
    if request.displacements is not None:
        provenance["displacements"] = [float(v) for v in request.displacements]
    return AngleSchedule(n, roles, provenance=provenance)


def _classify_identity(angles: MacronodeAngles) -> str:
    arr = angles.as_array()
    if np.allclose(arr, CROSSED_ID.as_array(), atol=1e-12):
        return "crossed"
    if np.allclose(arr, TWISTED_ID.as_array(), atol=1e-12):
        return "twisted"
    raise MisuseError(f"not an identity-teleport macronode: angles {arr}")


def realized_permutation(schedule: AngleSchedule) -> np.ndarray:
    """Trace the pass/swap decisions of a routing schedule symbolically.

    Independent of any Monte Carlo simulation: replays the drifting-frame
    walker over the operate turns and reports where each input ends up, as
    the permutation sigma with sigma[input] = output position.
    """
    prov = schedule.provenance
    if prov.get("kind") != "routing":
        raise MisuseError("not a schedule produced by compile_routing")
    n = schedule.n
    n_modes = prov["n_modes"]
    t_total = len(schedule) // n
    walker = _Walker(n, n_modes)
    for t in range(1, t_total - 1):
        for row in range(n):
            role = schedule.roles[t * n + row]
            if not isinstance(role, Operate):
                raise MisuseError(f"macronode ({row}, {t}) is not an operate role")
            if _classify_identity(role.angles) == "twisted":
                walker.exchange(row)
    order = walker.linear_order(n_modes)
    sigma = np.empty(n_modes, dtype=int)
    for position, mode in enumerate(order):
        sigma[mode] = position
    return sigma


# --- text serialization -------------------------------------------------------

_SCHEDULE_HEADER = "qrl-schedule v1"
_PROGRAM_HEADER = "qrl-program v1"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def serialize_schedule(schedule: AngleSchedule) -> str:
    lines = [_SCHEDULE_HEADER, f"n {schedule.n}", f"macronodes {len(schedule)}"]
    for k, role in enumerate(schedule.roles):
        if isinstance(role, Operate):
            angles = ",".join(_fmt(v) for v in role.angles.as_array())
            lines.append(f"{k} operate {angles}")
        elif isinstance(role, Readout):
            lines.append(f"{k} readout {_fmt(role.theta)}")
        elif isinstance(role, Initialize):
            disp = ",".join(_fmt(v) for v in role.displacement)
            lines.append(f"{k} initialize {_fmt(role.theta)} {disp}")
    for k in sorted(schedule.extra_displacements):
        disp = ",".join(_fmt(v) for v in schedule.extra_displacements[k])
        lines.append(f"displace {k} {disp}")
    if schedule.provenance:
        lines.append("provenance " + json.dumps(schedule.provenance, sort_keys=True))
    return "\n".join(lines) + "\n"


def _parse_floats(text, count, line_no):
    parts = text.split(",")
    if len(parts) != count:
        raise ParseError(f"expected {count} comma-separated values, got {text!r}", line_no)
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ParseError(str(exc), line_no) from None


def deserialize_schedule(text: str) -> AngleSchedule:
    lines = text.splitlines()
    if not lines or lines[0].strip() != _SCHEDULE_HEADER:
        raise ParseError(
            f"bad or missing header; expected {_SCHEDULE_HEADER!r}", 1
        )
    n = None
    total = None
    roles = {}
    extra = {}
    provenance = {}
    for line_no, raw_line in enumerate(lines[1:], start=2):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        key = parts[0]
        rest = parts[1] if len(parts) > 1 else ""
        if key == "n":
            n = int(rest)
        elif key == "macronodes":
            total = int(rest)
        elif key == "displace":
            sub = rest.split(None, 1)
            if len(sub) != 2:
                raise ParseError("displace needs an index and four values", line_no)
            extra[int(sub[0])] = _parse_floats(sub[1], 4, line_no)
        elif key == "provenance":
            try:
                provenance = json.loads(rest)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad provenance JSON: {exc}", line_no) from None
        elif key.isdigit():
            k = int(key)
            sub = rest.split()
            if not sub:
                raise ParseError("macronode line needs a role", line_no)
            role_name = sub[0]
            try:
                if role_name == "operate":
                    if len(sub) != 2:
                        raise ParseError("operate needs four angles", line_no)
                    roles[k] = Operate(MacronodeAngles(*_parse_floats(sub[1], 4, line_no)))
                elif role_name == "readout":
                    if len(sub) != 2:
                        raise ParseError("readout needs one angle", line_no)
                    roles[k] = Readout(float(sub[1]))
                elif role_name == "initialize":
                    if len(sub) != 3:
                        raise ParseError("initialize needs an angle and four values", line_no)
                    roles[k] = Initialize(float(sub[1]), tuple(_parse_floats(sub[2], 4, line_no)))
                else:
                    raise ParseError(f"unknown role {role_name!r}", line_no)
            except ParseError:
                raise
            except ValueError as exc:
                raise ParseError(str(exc), line_no) from None
        else:
            raise ParseError(f"unknown directive {key!r}", line_no)
    if n is None or total is None:
        raise ParseError("missing 'n' or 'macronodes' directive", len(lines))
    if sorted(roles) != list(range(total)):
        raise ParseError(
            f"expected one role line per macronode 0..{total - 1}", len(lines)
        )
    return AngleSchedule(
        n, [roles[k] for k in range(total)],
        extra_displacements=extra, provenance=provenance,
    )


_GATE_NAMES = {
    "rotation": (Rotation, ("psi",)),
    "teleport": (Teleport, ()),
    "xshear": (XShear, ("kappa",)),
    "pshear": (PShear, ("eta",)),
    "squeeze90": (SqueezeNeg90, ("t",)),
    "squeeze45": (Squeeze45, ("t",)),
    "arb": (ArbitrarySingleMode, ("alpha", "lam", "beta")),
    "bs": (BeamSplitter, ("r", "psi")),
    "cz": (GeneralizedCZ, ("g", "h")),
}
_GATE_LOOKUP = {cls: name for name, (cls, _) in _GATE_NAMES.items()}


def serialize_program(program: CircuitProgram) -> str:
    lines = [_PROGRAM_HEADER, f"modes {program.n_modes}"]
    if program.name:
        lines.append(f"name {program.name}")
    for op in program.operations:
        if isinstance(op, Init):
            lines.append(
                f"init {op.mode} theta={_fmt(op.theta)} x={_fmt(op.x)} p={_fmt(op.p)}"
            )
        elif isinstance(op, Measure):
            lines.append(f"measure {op.mode} theta={_fmt(op.theta)}")
        elif isinstance(op, Gate):
            name = _GATE_LOOKUP[type(op.spec)]
            _, params = _GATE_NAMES[name]
            modes = " ".join(str(m) for m in op.modes)
            kv = " ".join(f"{p}={_fmt(getattr(op.spec, p))}" for p in params)
            parts = [f"gate {name} {modes}"]
            if kv:
                parts.append(kv)
            if hasattr(op.spec, "variant"):
                parts.append(f"variant={op.spec.variant}")
            lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def deserialize_program(text: str) -> CircuitProgram:
    lines = text.splitlines()
    if not lines or lines[0].strip() != _PROGRAM_HEADER:
        raise ParseError(f"bad or missing header; expected {_PROGRAM_HEADER!r}", 1)
    n_modes = None
    name = ""
    ops = []
    for line_no, raw_line in enumerate(lines[1:], start=2):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        key = parts[0]
        try:
            if key == "modes":
                n_modes = int(parts[1])
            elif key == "name":
                name = line.split(None, 1)[1]
            elif key == "init":
                kv = dict(p.split("=", 1) for p in parts[2:])
                ops.append(
                    Init(
                        int(parts[1]),
                        theta=float(kv.get("theta", 0.0)),
                        x=float(kv.get("x", 0.0)),
                        p=float(kv.get("p", 0.0)),
                    )
                )
            elif key == "measure":
                kv = dict(p.split("=", 1) for p in parts[2:])
                ops.append(Measure(int(parts[1]), theta=float(kv.get("theta", X_BASIS))))
            elif key == "gate":
                gate_name = parts[1]
                if gate_name not in _GATE_NAMES:
                    raise ParseError(f"unknown gate {gate_name!r}", line_no)
                cls, params = _GATE_NAMES[gate_name]
                modes = []
                kv = {}
                for p in parts[2:]:
                    if "=" in p:
                        k, v = p.split("=", 1)
                        kv[k] = v
                    else:
                        modes.append(int(p))
                kwargs = {p: float(kv[p]) for p in params if p in kv}
                if "variant" in kv:
                    kwargs["variant"] = kv["variant"]
                ops.append(Gate(cls(**kwargs), tuple(modes)))
            else:
                raise ParseError(f"unknown directive {key!r}", line_no)
        except ParseError:
            raise
        except (ValueError, IndexError, TypeError) as exc:
            raise ParseError(str(exc), line_no) from None
    if n_modes is None:
        raise ParseError("missing 'modes' directive", len(lines))
    return CircuitProgram(n_modes, ops, name=name).validate()
