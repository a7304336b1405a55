"""Curvature flows on the model backgrounds.

The conformal 2-sphere metric ``exp(2 phi) g_round`` evolves by
``d g / dt = -eps R g``, which reduces to a scalar equation for the
conformal factor:

    d phi / dt = -(eps / 2) R(phi),   R(phi) = exp(-2 phi) (2 - 2 Lap0 phi),

with ``Lap0`` the round-sphere Laplacian.  Classical RK4 with a fixed step
integrates this; the step must satisfy the parabolic bound
``dt <= sigma * h^2 * min(exp(2 phi))`` at every step, and the builder
aborts (never silently shrinks the step) when the bound fails mid-run.

Two exact families need no integration: the shrinking round n-sphere with
``c(t) = 1 - 2 (n - 1) t`` and the static flat n-torus.  Their states are
produced in closed form at any requested time, which also gives the heat
solvers exact metric values at Runge-Kutta stage times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    CONFORMAL,
    FLAT,
    SCALED,
    Grid,
    MetricState,
    ScalarField,
    conformal_curvature,
    conformal_state,
    flat_state,
    integrate,
    metric_scale_floor,
    round_sphere_state,
    sphere_grid,
    torus_grid,
)

DEFAULT_SIGMA = 0.2


class StabilityError(RuntimeError):
    """The fixed time step left the parabolic stability region."""


class SingularTimeError(ValueError):
    """A run was requested up to or past the (estimated) singular time."""


def epsilon_flow_rhs(grid: Grid, phi: np.ndarray, eps: float) -> np.ndarray:
    """Right-hand side of the conformal-factor equation."""
    return -0.5 * eps * conformal_curvature(grid, phi)


def _phi_stages(grid: Grid, phi: np.ndarray, dt: float, eps: float):
    """RK4 stage values and slopes for one conformal-factor step.

    Returns ``(stage_phis, slopes)`` where ``stage_phis`` are the four
    states the slopes are evaluated at.  The heat solver reuses these exact
    stage values when it advances a field on the same evolving metric, so
    the two integrations see bit-identical conformal factors.
    """
    k1 = epsilon_flow_rhs(grid, phi, eps)
    p2 = phi + (0.5 * dt) * k1
    k2 = epsilon_flow_rhs(grid, p2, eps)
    p3 = phi + (0.5 * dt) * k2
    k3 = epsilon_flow_rhs(grid, p3, eps)
    p4 = phi + dt * k3
    k4 = epsilon_flow_rhs(grid, p4, eps)
    return (phi, p2, p3, p4), (k1, k2, k3, k4)


def _phi_advance(phi: np.ndarray, dt: float, slopes) -> np.ndarray:
    k1, k2, k3, k4 = slopes
    return phi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_step_bound(dt: float, spacing: float, scale_floor: float,
                      sigma: float, t: float) -> None:
    bound = sigma * spacing * spacing * scale_floor
    if dt > bound * (1.0 + 1e-9):
        raise StabilityError(
            f"step {dt:.3e} exceeds parabolic bound {bound:.3e} at t={t:.6g}"
        )


def step_surface_flow(state: MetricState, dt: float, eps: float,
                      sigma: float = DEFAULT_SIGMA) -> MetricState:
    """Advance a conformal metric state by one RK4 step of the eps-flow."""
    if state.kind != CONFORMAL:
        raise ValueError("step_surface_flow needs a conformal state")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    _check_step_bound(dt, state.grid.spacing, metric_scale_floor(state),
                      sigma, state.t)
    _, slopes = _phi_stages(state.grid, state.phi, dt, eps)
    return conformal_state(state.grid, _phi_advance(state.phi, dt, slopes),
                           state.t + dt)


def shrinking_sphere_state(dim: int, t: float, grid: Grid) -> MetricState:
    """Shrinking round n-sphere at time ``t``: scale ``1 - 2 (n - 1) t``."""
    c = 1.0 - 2.0 * (dim - 1) * t
    if c <= 0.0:
        raise SingularTimeError(
            f"shrinking {dim}-sphere is singular at t={1.0 / (2.0 * (dim - 1)):.6g}, "
            f"requested t={t:.6g}"
        )
    return round_sphere_state(grid, dim, c, t)


@dataclass(frozen=True)
class TypeIBound:
    """Type-I curvature bound data: ``sup |Rm| (T - t) <= bound`` with
    blow-up time ``T`` (infinite for the static flat torus)."""

    bound: float
    blow_up_time: float


@dataclass(frozen=True)
class FlowTrajectory:
    """Densely stored flow: uniform schedule plus per-step metric data.

    Conformal runs store the conformal factor and scalar curvature at every
    schedule point.  Scaled and flat runs are closed-form and store nothing
    per step; ``state_at`` works at arbitrary times for them, which the
    heat solvers use at Runge-Kutta stage times.
    """

    kind: str
    grid: Grid
    dim: int
    eps: float | None
    schedule: np.ndarray
    dt: float
    sigma: float
    singular_time: float
    phi_states: np.ndarray | None = None
    curv_states: np.ndarray | None = None

    @property
    def num_steps(self) -> int:
        return len(self.schedule) - 1

    @property
    def t_end(self) -> float:
        return float(self.schedule[-1])

    def index_of(self, t: float) -> int:
        k = int(round(t / self.dt))
        if k < 0 or k > self.num_steps or abs(self.schedule[k] - t) > 1e-9 * max(1.0, self.t_end):
            raise ValueError(f"t={t!r} is not on the schedule")
        return k

    def state(self, k: int) -> MetricState:
        if not 0 <= k <= self.num_steps:
            raise IndexError(f"schedule index {k} out of range")
        t = float(self.schedule[k])
        if self.kind == CONFORMAL:
            return MetricState(self.grid, CONFORMAL, 2, t,
                               phi=self.phi_states[k],
                               curvature=self.curv_states[k])
        return self._closed_form(t)

    def state_at(self, t: float) -> MetricState:
        """Metric at an arbitrary time.

        Closed-form families evaluate exactly; conformal trajectories only
        own their stored schedule points, so off-schedule times are refused
        rather than interpolated.
        """
        if self.kind == CONFORMAL:
            return self.state(self.index_of(t))
        if t < -1e-12 or t > self.t_end * (1.0 + 1e-12) + 1e-12:
            raise ValueError(f"t={t!r} outside the run interval")
        return self._closed_form(t)

    def _closed_form(self, t: float) -> MetricState:
        if self.kind == SCALED:
            return shrinking_sphere_state(self.dim, t, self.grid)
        return flat_state(self.grid, self.dim, t)

    def area(self, k: int) -> float:
        state = self.state(k)
        ones = ScalarField(self.grid, np.ones(self.grid.num_points))
        return integrate(state, ones)


def estimate_singular_time(state: MetricState, eps: float) -> float:
    """Area over ``8 pi eps``: exact for the round case, the natural
    estimate otherwise since the area decays at the constant rate
    ``8 pi eps`` along the flow.  Infinite when ``eps`` is zero."""
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    if eps == 0.0:
        return math.inf
    ones = ScalarField(state.grid, np.ones(state.grid.num_points))
    return integrate(state, ones) / (8.0 * math.pi * eps)


def _conformal_step_count(t_end: float, spacing: float, phi0: np.ndarray,
                          eps: float, sigma: float, singular: float,
                          dt_max: float | None) -> int:
    # Project the smallest metric scale over the whole run so the fixed step
    # honors the parabolic bound throughout, with a factor-2 safety margin.
    m0 = float(np.exp(2.0 * np.min(phi0)))
    if eps > 0.0:
        remaining = max(1.0 - t_end / singular, 0.0)
        m_proj = max(0.5 * m0 * remaining, 0.02 * m0)
    else:
        m_proj = m0
    dt = sigma * spacing * spacing * m_proj
    if dt_max is not None:
        dt = min(dt, dt_max)
    return max(int(math.ceil(t_end / dt)), 1)


def build_trajectory(kind: str, num_points: int, t_end: float,
                     dim: int = 2, eps: float = 1.0,
                     phi0=None,
                     sigma: float = DEFAULT_SIGMA,
                     dt_max: float | None = None,
                     max_steps: int | None = None) -> FlowTrajectory:
    """Build a flow trajectory on a uniform schedule ``0..t_end``.

    ``kind`` is ``"conformal"`` (eps-flow from ``phi0``, given as node
    values or a callable of the polar angle), ``"scaled"`` (shrinking round
    ``dim``-sphere) or ``"flat"`` (static torus).  The step
    is the largest value meeting the parabolic bound over the projected run
    (capped by ``dt_max``) that divides ``t_end`` evenly; conformal runs
    re-validate the bound and curvature positivity at every step and abort
    with ``StabilityError`` on the first failure.
    """
    if t_end <= 0.0:
        raise ValueError("t_end must be positive")
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")

    if kind == FLAT:
        grid = torus_grid(num_points)
        dt_bound = sigma * grid.spacing ** 2
        singular = math.inf
    elif kind == SCALED:
        grid = sphere_grid(num_points)
        singular = 1.0 / (2.0 * (dim - 1))
        if t_end >= singular:
            raise SingularTimeError(
                f"t_end={t_end:.6g} reaches the singular time {singular:.6g}"
            )
        dt_bound = sigma * grid.spacing ** 2 * (1.0 - 2.0 * (dim - 1) * t_end)
    elif kind == CONFORMAL:
        grid = sphere_grid(num_points)
        if eps < 0.0:
            raise ValueError("eps must be nonnegative")
        if phi0 is None:
            phi0 = np.zeros(num_points)
        elif callable(phi0):
            phi0 = phi0(grid.nodes)
        phi0 = np.asarray(phi0, dtype=float)
        if phi0.shape != (num_points,):
            raise ValueError("phi0 shape does not match the grid")
        singular = estimate_singular_time(conformal_state(grid, phi0), eps)
        if t_end >= singular:
            raise SingularTimeError(
                f"t_end={t_end:.6g} reaches the estimated singular "
                f"time {singular:.6g}"
            )
        dt_bound = None  # chosen below from the projected scale floor
    else:
        raise ValueError(f"unknown flow kind {kind!r}")

    if kind == CONFORMAL:
        steps = _conformal_step_count(t_end, grid.spacing, phi0, eps, sigma,
                                      singular, dt_max)
    else:
        dt = dt_bound if dt_max is None else min(dt_bound, dt_max)
        steps = max(int(math.ceil(t_end / dt)), 1)
    if max_steps is not None and steps > max_steps:
        raise ValueError(
            f"run needs {steps} steps, above the cap {max_steps}; raise the "
            f"cap or shorten the run"
        )
    dt = t_end / steps
    schedule = np.linspace(0.0, t_end, steps + 1)

    if kind != CONFORMAL:
        return FlowTrajectory(kind, grid, dim, None, schedule, dt, sigma,
                              singular)

    phi_states = np.empty((steps + 1, num_points))
    curv_states = np.empty((steps + 1, num_points))
    phi_states[0] = phi0
    curv_states[0] = conformal_curvature(grid, phi0)
    keep_positive = bool(curv_states[0].min() > 0.0)
    phi = phi0
    for k in range(steps):
        t = float(schedule[k])
        floor = float(np.exp(2.0 * phi.min()))
        _check_step_bound(dt, grid.spacing, floor, sigma, t)
        _, slopes = _phi_stages(grid, phi, dt, eps)
        phi = _phi_advance(phi, dt, slopes)
        curv = conformal_curvature(grid, phi)
        if not np.all(np.isfinite(phi)):
            raise StabilityError(f"conformal factor lost finiteness at "
                                 f"t={float(schedule[k + 1]):.6g}")
        if keep_positive and curv.min() <= 0.0:
            raise StabilityError(
                f"scalar curvature lost positivity at t={float(schedule[k + 1]):.6g}"
            )
        phi_states[k + 1] = phi
        curv_states[k + 1] = curv
    return FlowTrajectory(CONFORMAL, grid, 2, eps, schedule, dt, sigma,
                          singular, phi_states, curv_states)


def type_one_constant(traj: FlowTrajectory) -> TypeIBound:
    """Sampled type-I constant ``sup_t |Rm|(t) (T - t)`` over the run.

    Exact for the shrinking sphere, where ``|Rm| = sqrt(2 n (n-1)) / c(t)``
    and the product is constant in time; degenerate (zero bound, infinite
    blow-up time) on the flat torus.  Conformal runs have no certified
    blow-up time, so they are refused.
    """
    if traj.kind == FLAT:
        return TypeIBound(0.0, math.inf)
    if traj.kind != SCALED:
        raise ValueError("type-I constant is only defined for exact flows")
    n = traj.dim
    blow_up = 1.0 / (2.0 * (n - 1))
    c = 1.0 - 2.0 * (n - 1) * traj.schedule
    samples = math.sqrt(2.0 * n * (n - 1)) / c * (blow_up - traj.schedule)
    return TypeIBound(float(np.max(samples)), blow_up)
