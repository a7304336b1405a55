"""Scenario execution: config -> flows -> heat runs -> checks.

Pure compute layer: builds every flow variant a scenario asks for (one per
eps for sweeps), solves the attached heat problems, runs monitors,
identity residuals, path checks, and positivity reports, and returns an
in-memory RunReport.  Serialization lives in the reporting module.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass

import numpy as np

from .config import MATCH_EPS, HeatConfig, ScenarioConfig, default_t_end
from .flow import FlowTrajectory, build_trajectory, type_one_constant
from .geometry import CONFORMAL, ScalarField, integrate
from .harnack import (
    H2R_TYPE_I,
    HEPS,
    HarnackQuantity,
    HarnackReport,
    PathHarnackCheck,
    choose_type_one_d,
    identity_residual,
    monitor,
    path_harnack_check,
    trace_harnack_slack,
)
from .heat import HeatProblem, HeatTrajectory, PositivityReport, positivity_report, solve

TRACE_SAMPLE_CAP = 512


@dataclass(frozen=True)
class MonitorResult:
    label: str
    kind: str
    problem: str
    report: HarnackReport
    eps: float | None = None
    type_one_d: int | None = None
    type_one_bound: float | None = None
    blow_up_time: float | None = None


@dataclass(frozen=True)
class IdentityResult:
    identity: str
    problem: str
    time: float
    max_norm: float


@dataclass(frozen=True)
class PathResult:
    problem: str
    check: PathHarnackCheck


@dataclass(frozen=True)
class PositivityResult:
    problem: str
    report: PositivityReport


@dataclass(frozen=True)
class FlowSection:
    """Results attached to one flow variant of the scenario."""

    label: str
    kind: str
    dim: int
    num_points: int
    eps: float | None
    t_end: float
    dt: float
    num_steps: int
    singular_time: float
    monitors: tuple[MonitorResult, ...]
    identities: tuple[IdentityResult, ...]
    paths: tuple[PathResult, ...]
    positivity: tuple[PositivityResult, ...]
    trace_slack_min: float | None
    area_drift_max: float | None


@dataclass(frozen=True)
class RunReport:
    scenario: ScenarioConfig
    sections: tuple[FlowSection, ...]
    tolerance: float | None
    bound_shift: float
    wall_clock: float

    @property
    def verdict(self) -> bool:
        for section in self.sections:
            for mr in section.monitors:
                if not mr.report.holds:
                    return False
            for pr in section.paths:
                if not pr.check.holds:
                    return False
            for pv in section.positivity:
                if not pv.report.verdict:
                    return False
        return True


def _build_flow(cfg: ScenarioConfig, eps: float,
                max_steps: int | None) -> FlowTrajectory:
    fc = cfg.flow
    kwargs = {}
    if fc.sigma is not None:
        kwargs["sigma"] = fc.sigma
    if fc.dt_max is not None:
        kwargs["dt_max"] = fc.dt_max
    if max_steps is not None:
        kwargs["max_steps"] = max_steps
    if fc.kind == CONFORMAL:
        t_end = fc.t_end if fc.t_end is not None else default_t_end(fc)
        phi0 = None if fc.phi0 is None else fc.phi0
        return build_trajectory(CONFORMAL, fc.num_points, t_end, eps=eps,
                                phi0=phi0, **kwargs)
    return build_trajectory(fc.kind, fc.num_points, fc.t_end, dim=fc.dim,
                            **kwargs)


def _solve_heat(flow: FlowTrajectory, hc: HeatConfig,
                eps: float) -> HeatTrajectory:
    q = eps if hc.q == MATCH_EPS else hc.q
    data = ScalarField(flow.grid, hc.data(flow.grid.nodes))
    return solve(HeatProblem(flow, hc.direction, q, hc.a, data))


def _snap_to_schedule(flow: FlowTrajectory, t: float) -> float:
    k = int(round(t / flow.dt))
    k = min(max(k, 0), flow.num_steps)
    return float(flow.schedule[k])


def _snap_to_grid(flow: FlowTrajectory, x: float) -> float:
    j = int(np.argmin(np.abs(flow.grid.nodes - x)))
    return float(flow.grid.nodes[j])


def _trace_slack_min(flow: FlowTrajectory) -> float:
    stride = max(1, flow.num_steps // TRACE_SAMPLE_CAP)
    worst = math.inf
    ks = list(range(1, flow.num_steps + 1, stride))
    if ks[-1] != flow.num_steps:
        ks.append(flow.num_steps)
    for k in ks:
        worst = min(worst, float(np.min(trace_harnack_slack(flow, k).values)))
    return worst


def _area_drift_max(flow: FlowTrajectory) -> float:
    stride = max(1, flow.num_steps // TRACE_SAMPLE_CAP)
    ones = ScalarField(flow.grid, np.ones(flow.grid.num_points))
    a0 = integrate(flow.state(0), ones)
    worst = 0.0
    ks = list(range(0, flow.num_steps + 1, stride))
    if ks[-1] != flow.num_steps:
        ks.append(flow.num_steps)
    for k in ks:
        expected = a0 - 8.0 * math.pi * flow.eps * float(flow.schedule[k])
        got = integrate(flow.state(k), ones)
        worst = max(worst, abs(got - expected))
    return worst


def _run_monitors(cfg: ScenarioConfig, flow: FlowTrajectory,
                  runs: dict[str, HeatTrajectory], eps: float,
                  label_suffix: str, tolerance: float | None,
                  bound_shift: float) -> tuple[MonitorResult, ...]:
    out = []
    for mc in cfg.monitors:
        heat = runs[mc.problem]
        d = None
        type_one_bound = None
        blow_up = None
        mon_eps = None
        if mc.kind == HEPS:
            mon_eps = eps if mc.eps == MATCH_EPS else mc.eps
            quantity = HarnackQuantity(HEPS, eps=mon_eps)
        elif mc.kind == H2R_TYPE_I:
            d = mc.type_one_d
            if d == "auto":
                d = choose_type_one_d(flow, heat)
            bound = type_one_constant(flow)
            type_one_bound = bound.bound
            blow_up = bound.blow_up_time
            quantity = HarnackQuantity(H2R_TYPE_I, type_one_d=d)
        else:
            quantity = HarnackQuantity(mc.kind)
        report = monitor(quantity, flow, heat, window=mc.window,
                         tolerance=tolerance, bound_shift=bound_shift)
        label = f"{mc.kind}_{mc.problem}{label_suffix}"
        out.append(MonitorResult(label, mc.kind, mc.problem, report,
                                 eps=mon_eps, type_one_d=d,
                                 type_one_bound=type_one_bound,
                                 blow_up_time=blow_up))
    return tuple(out)


def _run_identities(cfg: ScenarioConfig, flow: FlowTrajectory,
                    runs: dict[str, HeatTrajectory]
                    ) -> tuple[IdentityResult, ...]:
    out = []
    for ic in cfg.identities:
        heat = runs[ic.problem]
        k = int(round(ic.frac * heat.num_steps))
        k = min(max(k, 2), heat.num_steps - 1)
        t = float(heat.schedule[k])
        field = identity_residual(ic.identity, flow, heat, t)
        out.append(IdentityResult(ic.identity, ic.problem, t,
                                  float(np.max(np.abs(field.values)))))
    return tuple(out)


def _run_paths(cfg: ScenarioConfig, flow: FlowTrajectory,
               runs: dict[str, HeatTrajectory],
               tolerance: float | None) -> tuple[PathResult, ...]:
    out = []
    for pc in cfg.paths:
        heat = runs[pc.problem]
        check = path_harnack_check(
            flow, heat, pc.theorem,
            _snap_to_grid(flow, pc.x_start), _snap_to_schedule(flow, pc.t_start),
            _snap_to_grid(flow, pc.x_end), _snap_to_schedule(flow, pc.t_end),
            tolerance=tolerance)
        out.append(PathResult(pc.problem, check))
    return tuple(out)


def execute_scenario(cfg: ScenarioConfig, tolerance: float | None = None,
                     max_steps: int | None = None,
                     bound_shift: float = 0.0) -> RunReport:
    """Run every flow variant of the scenario and collect all checks.

    ``tolerance`` overrides the config tolerance, which overrides the
    resolution-scaled default.  ``bound_shift`` lowers every monitored
    bound (violation-injection hook).
    """
    started = _time.perf_counter()
    eff_tol = tolerance if tolerance is not None else cfg.tolerance
    sections = []
    for eps in cfg.flow.eps_values:
        flow = _build_flow(cfg, eps, max_steps)
        label_suffix = f"_eps{eps:g}" if cfg.flow.is_sweep else ""
        runs = {hc.name: _solve_heat(flow, hc, eps) for hc in cfg.heat}
        monitors = _run_monitors(cfg, flow, runs, eps, label_suffix,
                                 eff_tol, bound_shift)
        identities = _run_identities(cfg, flow, runs)
        paths = _run_paths(cfg, flow, runs, eff_tol)
        positivity = tuple(PositivityResult(name, positivity_report(runs[name]))
                           for name in cfg.positivity)
        trace_min = None
        drift = None
        if flow.kind == CONFORMAL:
            if float(np.min(flow.state(0).curvature)) > 0.0:
                trace_min = _trace_slack_min(flow)
            drift = _area_drift_max(flow)
        sections.append(FlowSection(
            label=label_suffix.lstrip("_") or "base",
            kind=flow.kind, dim=flow.dim, num_points=flow.grid.num_points,
            eps=flow.eps if flow.kind == CONFORMAL else None,
            t_end=flow.t_end, dt=flow.dt, num_steps=flow.num_steps,
            singular_time=flow.singular_time,
            monitors=monitors, identities=identities, paths=paths,
            positivity=positivity, trace_slack_min=trace_min,
            area_drift_max=drift))
    wall = _time.perf_counter() - started
    return RunReport(cfg, tuple(sections), eff_tol, bound_shift, wall)
