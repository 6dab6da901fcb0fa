"""Desk-scale simulator and compiler for time-domain macronode-lattice
measurement-based Gaussian quantum computation."""

__version__ = "0.1.0"

from .errors import (
    AdjacencyError,
    CapacityError,
    DegenerateTeleportError,
    EstimationSingularityError,
    IllConditionedGainError,
    MisuseError,
    ParseError,
    QrlError,
    ScheduleOrderError,
)
from .gates import (
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
    s_of_theta,
    t_of_theta,
    v_matrix,
)
from .lattice import (
    AngleSchedule,
    Initialize,
    LatticeConfig,
    Operate,
    Readout,
    SimResult,
    apply_numerical_feedforward,
    build_outcome_map,
    readout_values,
    simulate,
)
from .program import (
    CircuitProgram,
    Gate,
    Init,
    Measure,
    RoutingRequest,
    compile_program,
    compile_routing,
    deserialize_program,
    deserialize_schedule,
    realized_permutation,
    serialize_program,
    serialize_schedule,
)

__all__ = [name for name in dir() if not name.startswith("_")]
