"""Error-corrected quantum sensing toolbox.

Decides whether a Markovian noise model admits quadratic-in-probes precision
scaling, constructs the ancilla-assisted, small-ancilla, random ancilla-free
and linear-regime code families, computes logical signal strength and the
optimal logical dephasing rate, and verifies the closed forms against dense
brute-force simulation.
"""

from .codes import (
    DenseCode,
    QecConditionReport,
    SqlSingleProbe,
    StructuredCode,
    build_ancilla_assisted,
    build_random_ancilla_free,
    build_small_ancilla,
    build_sql_codes,
    check_L0_perp_L1,
    check_qec_condition,
    color_ancilla,
    materialize,
    multiset_size,
    multiset_strings,
    round_counts,
)
from .errors import (
    CholeskyFailure,
    ConstraintInfeasible,
    DimensionTooLarge,
    GaugeFailure,
    HnlsViolated,
    IllConditioned,
    NumericalFailure,
    OptimizerStalled,
    OrthogonalityViolated,
    PositivityLost,
    QecSenseError,
    ShapeError,
    WSetTooLarge,
)
from .hnls import HnlsSolution, SqlCoefficient, solve_hl_coefficient, solve_sql_coefficient
from .linalg import (
    DEFAULT_DIM_CAP,
    DEFAULT_TOL,
    eig_hermitian,
    operator_norm,
    partial_trace,
    tensor,
    trace_norm,
)
from .logical import (
    LogicalDynamics,
    RecoveryChannel,
    build_optimal_recovery,
    logical_rates,
    predicted_qfi,
    recovery_rate,
    trace_norm_lower_bound_check,
)
from .noise import GaugedModel, LindbladSpan, NoiseModel, apply_gauge, build_span, hnls_holds
from .simulate import (
    EvolutionSpec,
    QfiResult,
    embed_probe_operators,
    evolve_lindblad,
    evolve_with_qec,
    ghz_dephasing_qfi,
    ghz_state,
    lindblad_superoperator,
    logical_qec_supermap,
    qfi,
    qfi_finite_difference,
    qfi_from_fidelity,
)

__version__ = "0.1.0"
