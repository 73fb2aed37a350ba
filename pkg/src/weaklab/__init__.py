"""Numerical laboratory for weak quantum measurements.

Builds every quantity three ways -- closed-form weak-coupling limits,
exact finite-coupling expectations (dense linear algebra or grid
quadrature), and Monte Carlo trial simulation -- and demonstrates
quantitatively that postselected weak-measurement limits depend on the
protocol, not just on the state, observable and postselection.
"""

__version__ = "0.1.0"

from .errors import (
    DegeneratePostselectionError,
    DomainError,
    EmptyConditionalError,
    GridSupportError,
    LayoutError,
    ProtocolError,
    ResolutionError,
    ScenarioParseError,
    TagError,
    TrialCapError,
    UndefinedWeakValueError,
    WeaklabError,
)
from .qlin import (
    DensityMatrix,
    Operator,
    StateVector,
    TensorLayout,
    basis_state,
    hermitian_eigensystem,
    hermitian_expi,
    hermitian_operator,
    identity_operator,
    inner,
    partial_trace_meter,
    partial_trace_system,
    schmidt_rank,
    tensor_op,
    tensor_state,
    trace_distance,
    unitary_operator,
)
from .states import (
    MeasurementOutcome,
    ResolutionOfIdentity,
    born_probability,
    projective_measure,
    projector,
)
from .protocols import (
    DEFAULT_EPS_SCHEDULE,
    GeneralMeterProtocol,
    QubitMeterProtocol,
    complex_weak_value,
    conditional_meter_expectation,
    coupled_state,
    default_meter_observable,
    eta_phase_unitary,
    general_meter_conditional_expectation,
    general_meter_coupled_state,
    general_meter_protocol,
    general_meter_weak_value,
    normalized_meter_expectation,
    orthogonal_partner,
    postselection_probability,
    qubit_protocol,
    skewed_qubit_meter,
    strong_conditional_expectation,
    unitary_fixing_state,
    weak_value_finite,
)
from .meter_grid import (
    AAVScenario,
    CompactBumpMeter,
    GaussianMeter,
    Grid,
    MeterFunction,
    PhaseTwistedMeter,
    aav_conditional_expectation,
    aav_postselection_probability,
    aav_unconditional_expectation,
    aav_weak_value_analytic,
    default_grid,
    gaussian_meter,
    grid_inner,
    grid_norm_sq,
    hamiltonian_equivalence_check,
    phase_twist,
    position_moment,
    quad,
    scale_meter,
    translate,
)
from .weakness import (
    BinnedPosition,
    binned_position,
    deficit_curve,
    post_measurement_system_state,
    weakness_deficit,
)
from .montecarlo import (
    CostPoint,
    DiscreteExperiment,
    TrialBatchReport,
    binned_grid_experiment,
    composite_experiment,
    cost_slope,
    general_meter_experiment,
    qubit_experiment,
    sample_cost_curve,
    simulate_weak_experiment,
    trials_for_precision,
)
from .convergence import loglog_slope, richardson_limit
