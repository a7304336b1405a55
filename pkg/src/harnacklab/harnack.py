"""Differential Harnack quantities, their bounds, and exactness checks.

Three layers live here:

* pointwise quantity assembly (``evaluate``) and sup-versus-bound
  monitoring over a run (``monitor``);
* residuals of the exact evolution identities each bound rests on
  (``identity_residual``): the analytic right-hand side is assembled with
  the discrete operators and compared against a centered time difference
  of the quantity, so the residual measures pure discretization error and
  must shrink at second order under grid refinement;
* integrated, path-based inequalities (``path_harnack_check``) comparing a
  weighted difference of log values at two spacetime points against a
  quadrature along the constant-speed coordinate path.

Backward quantities use the run's own tau clock (zero at the end of the
flow, where the terminal data lives).  Every ``1/tau`` term below refers to
that clock, including the type-I variant, whose strengthened coefficient
``d`` is searched empirically rather than asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import geometry
from .flow import FlowTrajectory, TypeIBound, type_one_constant
from .geometry import (
    CONFORMAL,
    FLAT,
    SCALED,
    MetricState,
    ScalarField,
)
from .heat import FORWARD_T, FORWARD_TAU, HeatTrajectory

HEPS = "Heps"
H2R = "H2R"
H2R_TYPE_I = "H2R_typeI"
HR = "HR"
P_SHIFTED = "P_shifted"
GRAD_FORWARD = "GradForward"
GRAD_BACKWARD = "GradBackward"

QUANTITY_KINDS = (HEPS, H2R, H2R_TYPE_I, HR, P_SHIFTED, GRAD_FORWARD,
                  GRAD_BACKWARD)

# Direction and curvature-coupling each quantity requires of its heat run.
_REQUIRED_DIRECTION = {
    HEPS: FORWARD_T,
    H2R: FORWARD_TAU,
    H2R_TYPE_I: FORWARD_TAU,
    HR: FORWARD_TAU,
    P_SHIFTED: FORWARD_TAU,
    GRAD_FORWARD: FORWARD_T,
    GRAD_BACKWARD: FORWARD_TAU,
}
_REQUIRED_Q = {H2R: 2.0, H2R_TYPE_I: 2.0, HR: 1.0, P_SHIFTED: 1.0,
               GRAD_FORWARD: 0.0, GRAD_BACKWARD: 0.0}

# Calibrated once per background family and frozen; enters the default
# monitor tolerance 1e-6 + coeff * h^2.
MONITOR_TOL_COEFF = {CONFORMAL: 5.0, SCALED: 1.0, FLAT: 1.0}


@dataclass(frozen=True)
class HarnackQuantity:
    """A monitored quantity: kind plus its numeric parameters.

    ``eps`` is required for the surface kind ``Heps``; ``type_one_d`` is
    the strengthened ``1/tau`` coefficient of ``H2R_typeI``.
    """

    kind: str
    eps: float | None = None
    type_one_d: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in QUANTITY_KINDS:
            raise ValueError(f"unknown quantity kind {self.kind!r}")
        if self.kind == HEPS and self.eps is None:
            raise ValueError("Heps needs an eps value")
        if self.kind == H2R_TYPE_I:
            if self.type_one_d is None or self.type_one_d < 2:
                raise ValueError("H2R_typeI needs an integer d >= 2")

    def label(self) -> str:
        return self.kind


def default_tolerance(flow: FlowTrajectory) -> float:
    h = flow.grid.spacing
    return 1e-6 + MONITOR_TOL_COEFF[flow.kind] * h * h


def quantity_bound(quantity: HarnackQuantity, dim: int, s: float) -> float:
    """Upper bound the quantity must stay below at clock value ``s``."""
    if quantity.kind == HEPS:
        return 1.0 / s
    if quantity.kind in (H2R, H2R_TYPE_I):
        return dim / 2.0
    if quantity.kind in (HR, P_SHIFTED):
        return dim / 4.0
    return 0.0


def _ricci_flow_like(flow: FlowTrajectory) -> bool:
    # Families along which the metric evolves by exactly -2 Ric: the
    # shrinking sphere, the static flat torus, and the surface flow at
    # eps = 1 (where -eps R g = -2 Ric).
    if flow.kind in (SCALED, FLAT):
        return True
    return flow.kind == CONFORMAL and flow.eps == 1.0


def _validate_pairing(quantity: HarnackQuantity, heat: HeatTrajectory) -> None:
    problem = heat.problem
    flow = problem.flow
    kind = quantity.kind
    if problem.direction != _REQUIRED_DIRECTION[kind]:
        raise ValueError(f"{kind} needs a {_REQUIRED_DIRECTION[kind]} run")
    if problem.decay_coeff != 1.0:
        raise ValueError(f"{kind} assumes decay coefficient 1")
    if kind == HEPS:
        if problem.potential_coeff != quantity.eps:
            raise ValueError("Heps needs the run's curvature coupling q to "
                             "equal its eps")
        if flow.kind == CONFORMAL:
            if flow.eps != quantity.eps:
                raise ValueError("Heps eps must match the flow's eps")
        elif flow.kind == SCALED and flow.dim == 2:
            if quantity.eps != 1.0:
                raise ValueError("the shrinking 2-sphere is the eps=1 flow")
        else:
            raise ValueError("Heps needs a positively curved surface flow")
    else:
        if problem.potential_coeff != _REQUIRED_Q[kind]:
            raise ValueError(
                f"{kind} needs curvature coupling q={_REQUIRED_Q[kind]:g}"
            )
    if kind in (GRAD_FORWARD, GRAD_BACKWARD) and not _ricci_flow_like(flow):
        raise ValueError(f"{kind} needs an exact Ricci-flow background")
    if kind == HR and flow.kind == CONFORMAL:
        raise ValueError("HR needs a background with closed-form nonnegative "
                         "curvature")


def evaluate(quantity: HarnackQuantity, flow: FlowTrajectory,
             heat: HeatTrajectory, time: float) -> ScalarField:
    """Pointwise quantity at a schedule point of the run's clock."""
    if heat.problem.flow is not flow:
        raise ValueError("flow is not the one the heat run was solved on")
    _validate_pairing(quantity, heat)
    k = heat.index_of(time)
    s = float(heat.schedule[k])
    if s <= 0.0:
        raise ValueError(f"{quantity.kind} is defined for positive clock "
                         f"values, got {s!r}")
    if quantity.kind == P_SHIFTED and s > flow.t_end / 2.0 + 1e-12:
        raise ValueError("the shifted quantity lives on the late half of "
                         "the run, tau <= T/2")
    return ScalarField(flow.grid, _assemble(quantity, heat, k, s))


def _assemble(quantity: HarnackQuantity, heat: HeatTrajectory, k: int,
              s: float) -> np.ndarray:
    state = heat.metric(k)
    u = heat.u(k)
    n = state.dim
    kind = quantity.kind
    if kind in (GRAD_FORWARD, GRAD_BACKWARD):
        return geometry.grad_norm_sq(state, u).values - u.values / s
    lap = geometry.laplacian(state, u).values
    if kind == HEPS:
        return lap - quantity.eps * state.curvature
    grad2 = geometry.grad_norm_sq(state, u).values
    if kind == H2R:
        return 2.0 * lap - grad2 + 2.0 * state.curvature - 2.0 * n / s
    if kind == H2R_TYPE_I:
        return (2.0 * lap - grad2 + 2.0 * state.curvature
                - quantity.type_one_d * n / s)
    if kind == HR:
        return 2.0 * lap - grad2 + state.curvature - 2.0 * n / s
    # shifted quantity: same spatial part as HR with a 3n/tau drop
    return 2.0 * lap - grad2 + state.curvature - 3.0 * n / s


@dataclass(frozen=True)
class Violation:
    time: float
    location: float
    magnitude: float


@dataclass(frozen=True)
class HarnackReport:
    """Sup-versus-bound record of one quantity over a monitoring window."""

    quantity: HarnackQuantity
    clock: str
    times: np.ndarray
    sup_values: np.ndarray
    bounds: np.ndarray
    tolerance: float
    holds: bool
    violation: Violation | None

    @property
    def margins(self) -> np.ndarray:
        return self.bounds - self.sup_values

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins))


def _window_indices(quantity: HarnackQuantity, heat: HeatTrajectory,
                    window: tuple[float, float] | None) -> np.ndarray:
    schedule = heat.schedule
    t_end = heat.problem.flow.t_end
    lo, hi = 0.0, float(schedule[-1])
    if quantity.kind == P_SHIFTED:
        # valid on the late half of the run: tau in (0, T/2]
        hi = t_end / 2.0
    if window is not None:
        lo = max(lo, window[0])
        hi = min(hi, window[1])
    eps_fp = 1e-12 * max(1.0, t_end)
    mask = ((schedule >= lo - eps_fp) & (schedule <= hi + eps_fp)
            & (schedule > eps_fp))
    idx = np.nonzero(mask)[0]
    if len(idx) == 0:
        raise ValueError("monitoring window contains no schedule points")
    return idx


def monitor(quantity: HarnackQuantity, flow: FlowTrajectory,
            heat: HeatTrajectory, window: tuple[float, float] | None = None,
            tolerance: float | None = None,
            bound_shift: float = 0.0) -> HarnackReport:
    """Monitor sup(quantity) against its bound over the schedule.

    The verdict holds when every margin ``bound - sup`` stays above
    ``-tolerance``; the first offending time, grid location and overshoot
    are recorded otherwise.  ``bound_shift`` lowers every bound by a fixed
    amount (a hook for violation-injection tests).
    """
    if heat.problem.flow is not flow:
        raise ValueError("flow is not the one the heat run was solved on")
    _validate_pairing(quantity, heat)
    if tolerance is None:
        tolerance = default_tolerance(flow)
    idx = _window_indices(quantity, heat, window)
    n = flow.dim
    times = np.empty(len(idx))
    sups = np.empty(len(idx))
    bounds = np.empty(len(idx))
    violation = None
    for row, k in enumerate(idx):
        s = float(heat.schedule[k])
        vals = _assemble(quantity, heat, int(k), s)
        j = int(np.argmax(vals))
        times[row] = s
        sups[row] = vals[j]
        bounds[row] = quantity_bound(quantity, n, s) - bound_shift
        if violation is None and sups[row] > bounds[row] + tolerance:
            violation = Violation(s, float(flow.grid.nodes[j]),
                                  float(sups[row] - bounds[row]))
    return HarnackReport(quantity, heat.clock, times, sups, bounds,
                         float(tolerance), violation is None, violation)


def choose_type_one_d(flow: FlowTrajectory, heat: HeatTrajectory,
                      variant: str = H2R_TYPE_I, probe_index: int = 5,
                      limit: int = 64) -> int:
    """Smallest integer coefficient ``d`` making the type-I quantity
    negative at the probe time.

    The probe is the fifth schedule point after the start of the tau clock.
    ``variant`` selects the curvature weight: ``"H2R_typeI"`` searches from
    ``d = 2`` with the ``2R`` quantity, ``"HR"`` from ``d = 1`` with the
    single-``R`` one.  Raises when no ``d`` up to ``limit`` works.
    """
    type_one_constant(flow)  # validates the flow family
    if heat.problem.direction != FORWARD_TAU:
        raise ValueError("the d-search needs a backward run")
    if probe_index < 1 or probe_index > heat.num_steps:
        raise ValueError("probe index is off the schedule")
    tau = float(heat.schedule[probe_index])
    state = heat.metric(probe_index)
    u = heat.u(probe_index)
    n = state.dim
    lap = geometry.laplacian(state, u).values
    grad2 = geometry.grad_norm_sq(state, u).values
    if variant == H2R_TYPE_I:
        base = 2.0 * lap - grad2 + 2.0 * state.curvature
        start = 2
    elif variant == HR:
        base = 2.0 * lap - grad2 + state.curvature
        start = 1
    else:
        raise ValueError(f"unknown d-search variant {variant!r}")
    top = float(np.max(base))
    for d in range(start, limit + 1):
        if top - d * n / tau < 0.0:
            return d
    raise ValueError(f"no d <= {limit} makes the quantity negative at the "
                     f"probe time {tau:.6g}")


# -- evolution identities ----------------------------------------------------

HEPS_EVOLUTION = "Heps_evolution"
H2R_EVOLUTION = "H2R_evolution"
HR_EVOLUTION = "HR_evolution"
P_EVOLUTION = "P_evolution"
GRAD_FORWARD_EVOLUTION = "Grad_forward_evolution"
GRAD_BACKWARD_EVOLUTION = "Grad_backward_evolution"

IDENTITY_IDS = (HEPS_EVOLUTION, H2R_EVOLUTION, HR_EVOLUTION, P_EVOLUTION,
                GRAD_FORWARD_EVOLUTION, GRAD_BACKWARD_EVOLUTION)

_IDENTITY_QUANTITY = {
    H2R_EVOLUTION: H2R,
    HR_EVOLUTION: HR,
    P_EVOLUTION: P_SHIFTED,
    GRAD_FORWARD_EVOLUTION: GRAD_FORWARD,
    GRAD_BACKWARD_EVOLUTION: GRAD_BACKWARD,
}


@dataclass(frozen=True)
class IdentityResidual:
    """Max-norm residual of one identity at one time, with the refinement
    order when a study has computed it."""

    identity: str
    time: float
    max_norm: float
    order: float | None = None


def _quantity_for_identity(identity: str, heat: HeatTrajectory,
                           eps: float | None) -> HarnackQuantity:
    if identity == HEPS_EVOLUTION:
        return HarnackQuantity(HEPS, eps=eps)
    return HarnackQuantity(_IDENTITY_QUANTITY[identity])


def identity_residual(identity: str, flow: FlowTrajectory,
                      heat: HeatTrajectory, time: float) -> ScalarField:
    """Pointwise identity residual at a schedule time.

    Computes (centered time difference of the quantity) minus (analytic
    right-hand side assembled with the discrete operators) at the given
    clock value, which must have stored neighbors strictly inside the
    quantity's validity window.
    """
    if identity not in IDENTITY_IDS:
        raise ValueError(f"unknown identity {identity!r}")
    if heat.problem.flow is not flow:
        raise ValueError("flow is not the one the heat run was solved on")
    _validate_identity_background(identity, flow)
    eps = flow.eps if flow.kind == CONFORMAL else 1.0
    quantity = _quantity_for_identity(identity, heat, eps)
    _validate_pairing(quantity, heat)

    k = heat.index_of(time)
    if k < 2 or k > heat.num_steps - 1:
        raise ValueError("residual needs both neighbors stored strictly "
                         "inside the validity window")
    s = float(heat.schedule[k])
    dt = heat.problem.flow.dt
    ahead = _assemble(quantity, heat, k + 1, s + dt)
    behind = _assemble(quantity, heat, k - 1, s - dt)
    lhs = (ahead - behind) / (2.0 * dt)
    rhs = _identity_rhs(identity, quantity, heat, k, s)
    return ScalarField(flow.grid, lhs - rhs)


def _validate_identity_background(identity: str, flow: FlowTrajectory) -> None:
    if identity == HEPS_EVOLUTION:
        if flow.kind != CONFORMAL:
            raise ValueError("the surface identity needs a conformal flow")
        return
    if identity == GRAD_FORWARD_EVOLUTION:
        if not _ricci_flow_like(flow):
            raise ValueError("this identity holds along exact Ricci flows")
        return
    if flow.kind not in (FLAT, SCALED):
        raise ValueError(f"{identity} needs a background with closed-form "
                         f"Ricci tensor")


def _identity_rhs(identity: str, quantity: HarnackQuantity,
                  heat: HeatTrajectory, k: int, s: float) -> np.ndarray:
    state = heat.metric(k)
    u = heat.u(k)
    n = state.dim
    grid = state.grid
    H = ScalarField(grid, _assemble(quantity, heat, k, s))
    lap_H = geometry.laplacian(state, H).values
    gradH_gradu = geometry.grad_inner(state, H, u).values
    grad2 = geometry.grad_norm_sq(state, u).values
    lap_u = geometry.laplacian(state, u).values
    R = state.curvature

    if identity == HEPS_EVOLUTION:
        eps = quantity.eps
        Rf = ScalarField(grid, R)
        lap_R = geometry.laplacian(state, Rf).values
        gradR_gradu = geometry.grad_inner(state, Rf, u).values
        tensor = geometry.shifted_hessian_norm_sq(state, u,
                                                  -0.5 * eps * R).values
        R_dot = eps * (lap_R + R * R)
        return (lap_H - 2.0 * tensor - eps * R * H.values
                - 2.0 * gradH_gradu - 2.0 * eps * gradR_gradu
                - R * grad2 - eps * R_dot - lap_u)

    if identity == GRAD_FORWARD_EVOLUTION:
        hess2 = geometry.hessian_norm_sq(state, u).values
        return (lap_H - 2.0 * gradH_gradu - (1.0 / s + 1.0) * H.values
                - 2.0 * hess2 - grad2)

    if identity == GRAD_BACKWARD_EVOLUTION:
        hess2 = geometry.hessian_norm_sq(state, u).values
        ric_quad = geometry.ricci_eigenvalue(state) * grad2
        return (lap_H - 2.0 * gradH_gradu - (1.0 / s + 1.0) * H.values
                - 2.0 * hess2 - 4.0 * ric_quad - grad2)

    # backward family: H2R / HR / shifted
    shift = geometry.ricci_eigenvalue(state) - 1.0 / s
    tensor = geometry.shifted_hessian_norm_sq(state, u, shift).values
    common = (lap_H - 2.0 * gradH_gradu - (2.0 / s) * H.values
              - (2.0 / s) * grad2 - 2.0 * tensor
              - 2.0 * (lap_u - grad2))
    if identity == H2R_EVOLUTION:
        ric2 = geometry.ricci_norm_sq(state).values
        return common - 2.0 * ric2
    if identity == HR_EVOLUTION:
        return common - 2.0 * R / s
    # shifted variant: extra -n / s^2 beyond the single-R terms
    return common - 2.0 * R / s - n / (s * s)


# -- integrated path inequalities --------------------------------------------

PATH_2R = "thm34"
PATH_R = "thm37"


@dataclass(frozen=True)
class PathHarnackCheck:
    """Integrated two-point comparison along a coordinate path."""

    theorem: str
    x_start: float
    t_start: float
    x_end: float
    t_end: float
    lhs: float
    rhs: float
    tolerance: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.slack >= -self.tolerance


def _grid_index(grid, x: float) -> int:
    j = int(np.argmin(np.abs(grid.nodes - x)))
    if abs(float(grid.nodes[j]) - x) > 1e-9 + 1e-12 * abs(x):
        raise ValueError(f"{x!r} is not a grid coordinate")
    return j


def path_harnack_check(flow: FlowTrajectory, heat: HeatTrajectory,
                       theorem: str, x_start: float, t_start: float,
                       x_end: float, t_end: float,
                       tolerance: float | None = None) -> PathHarnackCheck:
    """Integrated inequality between two on-grid spacetime points.

    The left side is ``exp(t2) ln f(x2, t2) - exp(t1) ln f(x1, t1)``.  The
    right side is half the Simpson quadrature, over schedule points, of

        exp(T - t) (|path speed|^2_g + w R + const + 2 n / (T - t))

    along the constant-speed coordinate path, with ``(w, const)`` equal to
    ``(2, n/2)`` for the double-curvature variant (``"thm34"``, on q=2
    runs) and ``(1, n/4)`` for the single-curvature one (``"thm37"``, on
    q=1 runs, which needs nonnegative curvature).
    """
    if theorem == PATH_2R:
        weight, const, needed_q = 2.0, flow.dim / 2.0, 2.0
    elif theorem == PATH_R:
        weight, const, needed_q = 1.0, flow.dim / 4.0, 1.0
    else:
        raise ValueError(f"unknown path variant {theorem!r}")
    problem = heat.problem
    if problem.direction != FORWARD_TAU or problem.potential_coeff != needed_q \
            or problem.decay_coeff != 1.0:
        raise ValueError(f"{theorem} needs a backward run with q={needed_q:g}")
    if theorem == PATH_R and flow.kind == CONFORMAL:
        raise ValueError("the single-curvature variant needs closed-form "
                         "nonnegative curvature")
    if heat.problem.flow is not flow:
        raise ValueError("flow is not the one the heat run was solved on")
    if not t_start < t_end:
        raise ValueError("need t_start < t_end")
    T = flow.t_end
    if t_end >= T - 1e-12:
        raise ValueError("t_end must lie strictly before the end of the run")
    if tolerance is None:
        tolerance = default_tolerance(flow)

    grid = flow.grid
    i1 = flow.index_of(t_start)
    i2 = flow.index_of(t_end)
    if i2 - i1 < 2:
        raise ValueError("path needs at least two schedule intervals")
    j1 = _grid_index(grid, x_start)
    j2 = _grid_index(grid, x_end)
    K = flow.num_steps
    # u at physical time t lives at tau index K - k
    u1 = float(heat.log_values[K - i1, j1])
    u2 = float(heat.log_values[K - i2, j2])
    lhs = -math.exp(t_end) * u2 + math.exp(t_start) * u1

    times = flow.schedule[i1:i2 + 1]
    speed = (x_end - x_start) / (t_end - t_start)
    n = flow.dim
    vals = np.empty(len(times))
    for row, t in enumerate(times):
        t = float(t)
        x = x_start + speed * (t - t_start)
        state = flow.state(i1 + row)
        scale = geometry._pointwise_scale_at(state, x)
        curv = geometry.sample_field(grid, state.curvature, x)
        vals[row] = math.exp(T - t) * (scale * speed * speed + weight * curv
                                       + const + 2.0 * n / (T - t))
    rhs = 0.5 * float(simpson(vals, x=times))
    return PathHarnackCheck(theorem, x_start, t_start, x_end, t_end, lhs,
                            rhs, float(tolerance))


# -- auxiliary checks ---------------------------------------------------------

def li_yau_form(flow: FlowTrajectory, heat: HeatTrajectory,
                time: float) -> ScalarField:
    """The double-curvature quantity assembled from the ``f``-side instead.

    Builds ``|grad f|^2 / f^2 - 2 (f_tau / f + ln f + R) - (2 n / tau + n/2)``
    with the discrete ``f_tau / f`` taken from the log equation.  Up to
    rounding this equals ``evaluate(H2R, ...) - n/2``; the monitor uses the
    log-side assembly, this form exists to cross-check it.
    """
    problem = heat.problem
    if problem.direction != FORWARD_TAU or problem.potential_coeff != 2.0:
        raise ValueError("the cross-check form needs a backward q=2 run")
    k = heat.index_of(time)
    tau = float(heat.schedule[k])
    if tau <= 0.0:
        raise ValueError("needs a positive tau")
    state = heat.metric(k)
    u = heat.u(k)
    n = state.dim
    grad2 = geometry.grad_norm_sq(state, u).values
    from .heat import u_rhs  # late import to avoid a cycle at module load
    du_dtau = u_rhs(state, u, problem.potential_coeff, problem.decay_coeff,
                    problem.direction).values
    f_tau_over_f = -du_dtau
    log_f = -u.values
    vals = (grad2 - 2.0 * (f_tau_over_f + log_f + state.curvature)
            - (2.0 * n / tau + n / 2.0))
    return ScalarField(flow.grid, vals)


def trace_harnack_slack(flow: FlowTrajectory, k: int) -> ScalarField:
    """Pointwise slack ``eps (Lap ln R + R) + 1/t`` of the curvature trace
    bound along a positively curved surface flow."""
    if flow.kind == CONFORMAL:
        eps = flow.eps
    elif flow.kind == SCALED and flow.dim == 2:
        eps = 1.0
    else:
        raise ValueError("the trace bound applies to surface flows")
    state = flow.state(k)
    t = state.t
    if t <= 0.0:
        raise ValueError("the trace bound applies at positive times")
    R = state.curvature
    if np.min(R) <= 0.0:
        raise ValueError("the trace bound needs positive curvature")
    log_R = ScalarField(flow.grid, np.log(R))
    lap_log_R = geometry.laplacian(state, log_R).values
    return ScalarField(flow.grid, eps * (lap_log_R + R) + 1.0 / t)


def curvature_floor_slack(flow: FlowTrajectory, k: int) -> float:
    """Min over the grid of ``R + n / (2 t)`` at schedule index ``k``; the
    shifted quantity's hypothesis asks this to be nonnegative."""
    state = flow.state(k)
    t = state.t
    if t <= 0.0:
        raise ValueError("the curvature floor applies at positive times")
    return float(np.min(state.curvature) + flow.dim / (2.0 * t))
