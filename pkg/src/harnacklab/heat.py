"""Forward and backward nonlinear heat equations in the log variable.

Every equation here is posed for a positive solution ``f`` and integrated
for ``u = -ln f``, which turns the ``f ln f`` nonlinearity into linear decay
and keeps positivity built in; ``f`` itself is only reconstructed for
reporting.  In the log variable all families share one right-hand side,

    du/ds = Lap u - |grad u|^2 + sign * q * R - a * u,

where ``s`` is the problem's own clock: physical time ``t`` with
``sign = -1`` for forward problems, or ``tau = T - t`` with ``sign = +1``
for backward problems run off the end of a flow.  Backward runs replay the
stored flow in reverse, so the metric at clock ``tau`` is the flow state at
``t = T - tau``; no metric interpolation happens anywhere, closed-form
families are evaluated exactly at Runge-Kutta stage times, and the one
evolving family (the conformal surface) is advanced inside the same RK4
stages as the field, reproducing the stored trajectory bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flow import FlowTrajectory, StabilityError, _phi_advance, _phi_stages
from .geometry import (
    CONFORMAL,
    FLAT,
    SCALED,
    MetricState,
    ScalarField,
    _d12,
    coordinate_laplacian,
    metric_scale_floor,
)

FORWARD_T = "forward_in_t"
FORWARD_TAU = "forward_in_tau"

POSITIVITY_TOL_COEFF = 1.0


@dataclass(frozen=True)
class HeatProblem:
    """One heat run attached to a flow trajectory.

    ``potential_coeff`` (q) multiplies the scalar curvature in the
    f-equation; ``decay_coeff`` (a) is the coefficient of ``-u`` in the log
    equation.  ``data`` is ``f`` at ``t = 0`` for forward problems and the
    terminal value ``f`` at ``t = T`` (where the tau clock starts at zero)
    for backward ones.
    """

    flow: FlowTrajectory
    direction: str
    potential_coeff: float
    decay_coeff: float
    data: ScalarField

    def __post_init__(self) -> None:
        if self.direction not in (FORWARD_T, FORWARD_TAU):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.data.grid.num_points != self.flow.grid.num_points or \
                self.data.grid.kind != self.flow.grid.kind:
            raise ValueError("data grid does not match the flow grid")
        f = self.data.values
        if not np.all(f > 0.0):
            raise ValueError("data must be strictly positive")
        if self.potential_coeff == 0.0 and not np.all(f < 1.0):
            raise ValueError("no-potential (q=0) runs need data strictly "
                             "below 1")
        if self.direction == FORWARD_TAU and self.flow.kind == CONFORMAL:
            raise ValueError(
                "backward runs on a conformal trajectory would need metric "
                "values between stored steps; use an exact flow family"
            )


@dataclass(frozen=True)
class HeatTrajectory:
    """Dense log-variable solution on the problem's clock."""

    problem: HeatProblem
    schedule: np.ndarray
    log_values: np.ndarray

    @property
    def clock(self) -> str:
        return "t" if self.problem.direction == FORWARD_T else "tau"

    @property
    def num_steps(self) -> int:
        return len(self.schedule) - 1

    def index_of(self, s: float) -> int:
        flow = self.problem.flow
        k = int(round(s / flow.dt))
        if k < 0 or k > self.num_steps or abs(self.schedule[k] - s) > 1e-9:
            raise ValueError(f"clock value {s!r} is not on the schedule")
        return k

    def u(self, k: int) -> ScalarField:
        return ScalarField(self.problem.flow.grid, self.log_values[k])

    def f(self, k: int) -> ScalarField:
        return ScalarField(self.problem.flow.grid,
                           np.exp(-self.log_values[k]))

    def metric(self, k: int) -> MetricState:
        """Metric state aligned with clock index ``k`` (stored flow state;
        reversed order for backward runs)."""
        flow = self.problem.flow
        if self.problem.direction == FORWARD_T:
            return flow.state(k)
        return flow.state(flow.num_steps - k)


def u_rhs(state: MetricState, u: ScalarField, potential_coeff: float,
          decay_coeff: float, direction: str) -> ScalarField:
    """Log-variable right-hand side on a fixed metric state."""
    if direction == FORWARD_T:
        sign = -1.0
    elif direction == FORWARD_TAU:
        sign = 1.0
    else:
        raise ValueError(f"unknown direction {direction!r}")
    vals = _rhs_on_state(state, u.values, sign * potential_coeff, decay_coeff)
    return ScalarField(state.grid, vals)


def _rhs_on_state(state: MetricState, u: np.ndarray, signed_q: float,
                  a: float) -> np.ndarray:
    grid = state.grid
    d1, d2 = _d12(grid, u)
    if state.kind == CONFORMAL:
        w = np.exp(-2.0 * state.phi)
        lap = w * (d2 + grid.cot * d1)
        grad2 = w * d1 * d1
    elif state.kind == SCALED:
        inv = 1.0 / state.scale
        lap = inv * (d2 + (state.dim - 1) * grid.cot * d1)
        grad2 = inv * d1 * d1
    else:
        lap = d2
        grad2 = d1 * d1
    return lap - grad2 + signed_q * state.curvature - a * u


def solve(problem: HeatProblem) -> HeatTrajectory:
    """Integrate the problem over the flow schedule with classical RK4.

    The step equals the flow step; the parabolic bound
    ``dt <= sigma h^2 * scale floor`` is re-checked against the metric at
    every step and the run aborts on the first violation or loss of
    finiteness.
    """
    flow = problem.flow
    grid = flow.grid
    steps = flow.num_steps
    dt = flow.dt
    schedule = np.linspace(0.0, flow.t_end, steps + 1)
    out = np.empty((steps + 1, grid.num_points))
    out[0] = -np.log(problem.data.values)

    if flow.kind == CONFORMAL:
        _integrate_conformal(problem, out)
    else:
        _integrate_closed_form(problem, out)

    for k in range(1, steps + 1):
        if not np.all(np.isfinite(out[k])):
            raise StabilityError(
                f"log solution lost finiteness at clock {float(schedule[k]):.6g}"
            )
    return HeatTrajectory(problem, schedule, out)


def _integrate_closed_form(problem: HeatProblem, out: np.ndarray) -> None:
    # Flat or shrinking-sphere flows: the metric is known in closed form at
    # any time, so RK4 stages use exact mid-step values.
    flow = problem.flow
    grid = flow.grid
    dt = flow.dt
    steps = flow.num_steps
    sign = -1.0 if problem.direction == FORWARD_T else 1.0
    signed_q = sign * problem.potential_coeff
    a = problem.decay_coeff
    n = flow.dim
    t_end = flow.t_end
    h2 = grid.spacing * grid.spacing
    sigma = flow.sigma

    if flow.kind == FLAT:
        def rhs(_s: float, u: np.ndarray) -> np.ndarray:
            d1, d2 = _d12(grid, u)
            return d2 - d1 * d1 - a * u

        def floor_at(_s: float) -> float:
            return 1.0
    else:
        cot = grid.cot
        rate = 2.0 * (n - 1)
        curv_coef = n * (n - 1)

        def scale_at(s: float) -> float:
            t = s if problem.direction == FORWARD_T else t_end - s
            return 1.0 - rate * t

        def rhs(s: float, u: np.ndarray) -> np.ndarray:
            inv = 1.0 / scale_at(s)
            d1, d2 = _d12(grid, u)
            return (inv * (d2 + (n - 1) * cot * d1) - inv * d1 * d1
                    + signed_q * curv_coef * inv - a * u)

        floor_at = scale_at

    u = out[0]
    for k in range(steps):
        s = k * dt
        bound = sigma * h2 * min(floor_at(s), floor_at(s + dt))
        if dt > bound * (1.0 + 1e-9):
            raise StabilityError(
                f"step {dt:.3e} exceeds parabolic bound {bound:.3e} "
                f"at clock {s:.6g}"
            )
        k1 = rhs(s, u)
        k2 = rhs(s + 0.5 * dt, u + (0.5 * dt) * k1)
        k3 = rhs(s + 0.5 * dt, u + (0.5 * dt) * k2)
        k4 = rhs(s + dt, u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = u


def _integrate_conformal(problem: HeatProblem, out: np.ndarray) -> None:
    # Forward run coupled to the eps-flow: recompute the flow's own RK4
    # stages from each stored step and advance the field inside them, so the
    # metric seen at stage times is the flow's exact stage value.
    flow = problem.flow
    grid = flow.grid
    dt = flow.dt
    eps = flow.eps
    signed_q = -problem.potential_coeff
    a = problem.decay_coeff
    cot = grid.cot
    sigma = flow.sigma
    h2 = grid.spacing * grid.spacing

    def u_slope(phi: np.ndarray, u: np.ndarray) -> np.ndarray:
        w = np.exp(-2.0 * phi)
        d1, d2 = _d12(grid, u)
        curv = w * (2.0 - 2.0 * coordinate_laplacian(grid, phi, 2))
        return w * (d2 + cot * d1) - w * d1 * d1 + signed_q * curv - a * u

    u = out[0]
    for k in range(flow.num_steps):
        phi = flow.phi_states[k]
        floor = float(np.exp(2.0 * phi.min()))
        if dt > sigma * h2 * floor * (1.0 + 1e-9):
            raise StabilityError(
                f"step {dt:.3e} exceeds parabolic bound "
                f"{sigma * h2 * floor:.3e} at t={float(flow.schedule[k]):.6g}"
            )
        stage_phis, slopes = _phi_stages(grid, phi, dt, eps)
        l1 = u_slope(stage_phis[0], u)
        l2 = u_slope(stage_phis[1], u + (0.5 * dt) * l1)
        l3 = u_slope(stage_phis[2], u + (0.5 * dt) * l2)
        l4 = u_slope(stage_phis[3], u + dt * l3)
        u = u + (dt / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
        out[k + 1] = u
        if not np.array_equal(_phi_advance(phi, dt, slopes),
                              flow.phi_states[k + 1]):
            raise StabilityError(
                "replayed flow stages diverged from the stored trajectory at "
                f"t={float(flow.schedule[k + 1]):.6g}"
            )


@dataclass(frozen=True)
class PositivityReport:
    """Preservation summary for no-potential runs with data in (0, 1)."""

    times: np.ndarray
    f_min: np.ndarray
    f_max: np.ndarray
    tolerance: float
    bounds_hold: bool
    min_nondecreasing: bool
    below_one: bool

    @property
    def verdict(self) -> bool:
        return self.bounds_hold and self.min_nondecreasing and self.below_one


def positivity_report(ht: HeatTrajectory) -> PositivityReport:
    """Check that ``0 < f < 1`` persists and the log variable stays inside
    the exponentially decayed envelope of its initial range."""
    problem = ht.problem
    if problem.potential_coeff != 0.0:
        raise ValueError("positivity report applies to q=0 runs only")
    h = problem.flow.grid.spacing
    tol = 1e-8 + POSITIVITY_TOL_COEFF * h * h

    u = ht.log_values
    u_min = u.min(axis=1)
    u_max = u.max(axis=1)
    decay = np.exp(-ht.schedule)
    upper = u_max[0] * decay
    lower = u_min[0] * decay
    bounds_hold = bool(np.all(u_max <= upper + tol)
                       and np.all(u_min >= lower - tol))

    f_min = np.exp(-u_max)
    f_max = np.exp(-u_min)
    min_nondecreasing = bool(np.all(np.diff(f_min) >= -tol))
    below_one = bool(np.all(f_max < 1.0 + tol))
    return PositivityReport(ht.schedule, f_min, f_max, tol, bounds_hold,
                            min_nondecreasing, below_one)
