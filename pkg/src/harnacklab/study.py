"""Refinement studies: rerun a scenario at doubled resolutions and fit
observed convergence orders.

Each level doubles the node count; the step size follows the parabolic
schedule automatically, so time and space errors shrink together.  Rows
whose values sit at rounding level are reported as exact instead of
getting a meaningless fitted order.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time as _time

import numpy as np

from .config import ConfigError, ScenarioConfig
from .geometry import FLAT
from .harnack import identity_residual
from .heat import HeatTrajectory
from .runner import _build_flow, _solve_heat

MIN_LEVELS = 3
PASSING_ORDER = 1.5
EXACT_LEVEL = 1e-10

SCHEMA_VERSION = 1


@dataclasses.dataclass(frozen=True)
class StudyRow:
    """One measured quantity across levels: residual norms or errors."""

    label: str
    values: tuple[float, ...]
    order: float | None  # None means exact (rounding-level values)

    @property
    def exact(self) -> bool:
        return self.order is None

    @property
    def passes(self) -> bool:
        return self.exact or self.order >= PASSING_ORDER


@dataclasses.dataclass(frozen=True)
class StudyReport:
    scenario: ScenarioConfig
    num_points: tuple[int, ...]
    dts: tuple[float, ...]
    identity_rows: tuple[StudyRow, ...]
    solution_rows: tuple[StudyRow, ...]
    wall_clock: float

    @property
    def rows(self) -> tuple[StudyRow, ...]:
        return self.identity_rows + self.solution_rows

    @property
    def verdict(self) -> bool:
        return all(row.passes for row in self.rows)


def _fit_order(values: tuple[float, ...], h_list: tuple[float, ...]) -> float:
    """Least-squares slope of log(value) against log(h)."""
    v = np.maximum(np.asarray(values, dtype=float), 1e-16)
    x = np.log(np.asarray(h_list, dtype=float))
    slope = np.polyfit(x, np.log(v), 1)[0]
    return float(slope)


def _make_row(label: str, values: list[float],
              h_list: list[float]) -> StudyRow:
    vals = tuple(float(v) for v in values)
    if max(vals) < EXACT_LEVEL:
        return StudyRow(label, vals, None)
    return StudyRow(label, vals, _fit_order(vals, tuple(h_list)))


def _restrict(fine: np.ndarray, kind: str) -> np.ndarray:
    # flat/torus nodes nest exactly; staggered meridian nodes of the
    # coarse grid sit midway between fine pairs, so average them
    if kind == FLAT:
        return fine[::2]
    return 0.5 * (fine[0::2] + fine[1::2])


def run_study(cfg: ScenarioConfig, levels: int = MIN_LEVELS,
              max_steps: int | None = None) -> StudyReport:
    """Run the scenario at ``levels`` doubled resolutions and fit orders.

    Identity rows report the residual max-norm per level at the
    configured clock fraction; solution rows report the sup difference
    of consecutive-level heat solutions at the final time, restricted to
    the coarser grid.
    """
    started = _time.perf_counter()
    if levels < MIN_LEVELS:
        raise ConfigError(f"a refinement study needs at least {MIN_LEVELS} "
                          f"levels, got {levels}")
    if cfg.flow.is_sweep:
        raise ConfigError("refinement studies need a single flow; "
                          "pick one eps value")
    eps = cfg.flow.eps_values[0]

    num_points: list[int] = []
    dts: list[float] = []
    h_list: list[float] = []
    level_runs: list[dict[str, HeatTrajectory]] = []
    level_flows = []
    for level in range(levels):
        n = cfg.flow.num_points * (2 ** level)
        level_cfg = dataclasses.replace(
            cfg, flow=dataclasses.replace(cfg.flow, num_points=n))
        flow = _build_flow(level_cfg, eps, max_steps)
        runs = {hc.name: _solve_heat(flow, hc, eps) for hc in cfg.heat}
        num_points.append(n)
        dts.append(flow.dt)
        h_list.append(flow.grid.spacing)
        level_flows.append(flow)
        level_runs.append(runs)

    identity_rows = []
    for ic in cfg.identities:
        values = []
        t_coarse = None
        for flow, runs in zip(level_flows, level_runs):
            heat = runs[ic.problem]
            k = int(round(ic.frac * heat.num_steps))
            k = min(max(k, 2), heat.num_steps - 1)
            t = float(heat.schedule[k])
            if t_coarse is None:
                t_coarse = t
            field = identity_residual(ic.identity, flow, heat, t)
            values.append(float(np.max(np.abs(field.values))))
        label = f"{ic.identity} [{ic.problem}] near {t_coarse:.6g}"
        identity_rows.append(_make_row(label, values, h_list))

    solution_rows = []
    pair_h = h_list[:-1]
    for hc in cfg.heat:
        errors = []
        for lo in range(levels - 1):
            coarse = level_runs[lo][hc.name]
            fine = level_runs[lo + 1][hc.name]
            uc = coarse.u(coarse.num_steps).values
            uf = _restrict(fine.u(fine.num_steps).values, cfg.flow.kind)
            errors.append(float(np.max(np.abs(uf - uc))))
        solution_rows.append(_make_row(f"solution [{hc.name}] at t_end",
                                       errors, pair_h))

    wall = _time.perf_counter() - started
    return StudyReport(cfg, tuple(num_points), tuple(dts),
                       tuple(identity_rows), tuple(solution_rows), wall)


def _fmt_value(v: float) -> str:
    return f"{v:.6e}"


def _fmt_order(row: StudyRow) -> str:
    return "exact" if row.exact else f"{row.order:.3f}"


def render_study_text(report: StudyReport) -> str:
    cfg = report.scenario
    lines = [
        f"harnacklab convergence study (schema {SCHEMA_VERSION})",
        f"scenario: {cfg.name} - {cfg.title}",
        f"levels (N): {', '.join(str(n) for n in report.num_points)}",
        f"dt per level: {', '.join(f'{dt:.6e}' for dt in report.dts)}",
        "",
    ]
    if report.identity_rows:
        lines.append("identity residual max-norms per level:")
        for row in report.identity_rows:
            vals = ", ".join(_fmt_value(v) for v in row.values)
            lines.append(f"  {row.label}: {vals}  order {_fmt_order(row)}")
        lines.append("")
    lines.append("solution errors between consecutive levels at the final "
                 "time:")
    for row in report.solution_rows:
        vals = ", ".join(_fmt_value(v) for v in row.values)
        lines.append(f"  {row.label}: {vals}  order {_fmt_order(row)}")
    lines.append("")
    verdict = ("ORDERS OK" if report.verdict
               else f"ORDER BELOW {PASSING_ORDER}")
    lines.append(f"verdict: {verdict}")
    return "\n".join(lines) + "\n"


def render_study_json(report: StudyReport) -> str:
    cfg = report.scenario
    doc = {
        "schema_version": SCHEMA_VERSION,
        "scenario": cfg.raw,
        "num_points": list(report.num_points),
        "dts": list(report.dts),
        "identity_rows": [
            {"label": r.label, "values": list(r.values),
             "order": r.order, "exact": r.exact}
            for r in report.identity_rows
        ],
        "solution_rows": [
            {"label": r.label, "values": list(r.values),
             "order": r.order, "exact": r.exact}
            for r in report.solution_rows
        ],
        "verdict": "holds" if report.verdict else "order_too_low",
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_study_outputs(report: StudyReport, out_dir: str) -> list[str]:
    target = os.path.join(out_dir, report.scenario.name)
    os.makedirs(target, exist_ok=True)
    written = []
    path = os.path.join(target, "study.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_study_text(report))
    written.append(path)
    path = os.path.join(target, "study.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_study_json(report))
    written.append(path)
    return written
