"""Event-driven simulation and dynamical analysis of leaky integrate-and-fire
pulse-coupled networks: closed-form return map, contraction/expansion
diagnostics, certified limit-cycle detection and synchronization tests."""

from ._kernels import NUMBA_ENABLED
from .config import RunConfig, load_config
from .contraction import (
    absorption_check,
    adapted_distance,
    check_O_conditions,
    estimate_lipschitz_c,
    expansion_witness,
    in_zone,
    jvac_check,
    lambda_for_zone,
    repeller,
    verify_contraction,
)
from .cycles import (
    FateReport,
    LimitCycle,
    PieceId,
    certify_cycle,
    classify_fate,
    classify_piece,
    cycle_census,
    detect_cycle,
    margin,
    sync_test,
)
from .dynamics import (
    OrbitStep,
    ReturnStep,
    antiphase_state,
    avalanche,
    flow,
    orbit,
    return_map,
    sample_trajectory,
    spontaneous_time,
    state_at_threshold,
)
from .errors import (
    HypothesisViolated,
    IfnetError,
    InsufficientSamples,
    NoFixedPoint,
    NumericalStall,
    ParseError,
    PreconditionFailed,
    RejectConfig,
)
from .params import (
    DerivedConstants,
    NetworkParams,
    NeuronKind,
    check_hypotheses,
    classify_neurons,
    derived_constants,
    network,
    validate,
)

__version__ = "0.1.0"
