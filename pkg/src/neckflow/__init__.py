"""Numerical laboratory for rotationally symmetric Ricci flow neckpinches.

Evolves warped-product metrics on a sphere through pinch singularities,
runs conjugate-heat diffusions on the surviving caps, and measures optimal
transport costs between them through the exact one-dimensional reduction.
"""

from .errors import (
    BadCollar,
    ConfigError,
    FormulaMismatch,
    InconclusiveResolution,
    NeckflowError,
    NotUniform,
    NumericalFailure,
    OverlappingSupports,
    SingularCurvature,
    StepRejected,
    TooLarge,
    UndefinedAtPole,
    UnsupportedTopology,
)
from .geometry import (
    CurvatureSample,
    RadialProfile,
    arclength,
    curvature,
    diameter,
    fiber_sphere_volume,
    load_profile,
    mirror_profile,
    radial_derivative,
    save_profile,
    total_volume,
    volume_element,
)
from .flow import (
    FlowConfig,
    FlowRunReport,
    FlowState,
    MetricHistory,
    SurgeryResult,
    flow_step,
    forward_evolve,
    neck_bump_count,
    run_to_singularity,
    run_window,
)
from .diffusion import (
    CdfProfile,
    ConcentrationParams,
    DiffusionState,
    TauClock,
    advance,
    build_concentrated_measure,
    cdf_of,
    certify_rate,
    concentration_lower_bound,
    conjugate_heat_step,
    density_from_cdf,
    df_dtau_rhs,
    f_functional,
    find_concentration_params,
    uniform_state,
)
from .transport import (
    ConvexCost,
    Measure1D,
    WarpedUniformMeasure,
    discrete_oracle,
    load_measure,
    product_grid_cost,
    quantile,
    save_measure,
    total_cost_1d,
    w1,
    warped_reduction,
)
from .spacetime import (
    GluedSpace,
    LengthSchedule,
    PinchVerdict,
    WsrfReport,
    XPoint,
    coupled_cost,
    cross_cost,
    cross_cost_detail,
    dx_distance,
    pinch_classifier,
    wsrf_monitor,
)
from .scenarios import (
    Scenario,
    dumbbell_profile,
    pinched_interval_profile,
    round_sphere_profile,
    validate_scenario,
)
from .pipeline import RunResult, emit_artifacts, run_scenario

__version__ = "0.1.0"
