"""Numerical laboratory for Harnack-type bounds along curvature flows.

The package couples three rotationally symmetric backgrounds (a conformal
2-sphere evolving by an eps-weighted curvature flow, the shrinking round
n-sphere, and the static flat n-torus) to forward and backward nonlinear
heat equations integrated in the log variable, then monitors pointwise
differential Harnack quantities against their bounds, measures residuals
of the exact evolution identities behind them, and evaluates integrated
path inequalities.  The ``harnacklab`` command drives bundled scenarios and
writes reports, CSV time series, and figures.
"""

from .geometry import (
    CONFORMAL,
    FLAT,
    SCALED,
    Grid,
    GridMismatchError,
    MetricState,
    ScalarField,
    conformal_state,
    field_from_function,
    flat_state,
    grad_norm_sq,
    hessian_norm_sq,
    integrate,
    laplacian,
    meridian_path_energy,
    ricci_norm_sq,
    round_sphere_state,
    scalar_curvature,
    sphere_grid,
    torus_grid,
)
from .flow import (
    FlowTrajectory,
    SingularTimeError,
    StabilityError,
    TypeIBound,
    build_trajectory,
    estimate_singular_time,
    shrinking_sphere_state,
    step_surface_flow,
    type_one_constant,
)
from .heat import (
    FORWARD_T,
    FORWARD_TAU,
    HeatProblem,
    HeatTrajectory,
    PositivityReport,
    positivity_report,
    solve,
    u_rhs,
)
from .harnack import (
    IDENTITY_IDS,
    QUANTITY_KINDS,
    HarnackQuantity,
    HarnackReport,
    IdentityResidual,
    PathHarnackCheck,
    Violation,
    choose_type_one_d,
    curvature_floor_slack,
    default_tolerance,
    evaluate,
    identity_residual,
    li_yau_form,
    monitor,
    path_harnack_check,
    quantity_bound,
    trace_harnack_slack,
)
from .config import (
    ConfigError,
    ScenarioConfig,
    load_scenario,
    parse_scenario,
)
from .scenarios import load_bundled, registry_table, resolve_config, scenario_names
from .runner import RunReport, execute_scenario
from .reporting import write_outputs
from .study import StudyReport, run_study, write_study_outputs

__version__ = "0.1.0"
