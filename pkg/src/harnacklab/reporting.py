"""Report serialization: text report, JSON report, CSV series, figures.

All structured outputs are deterministic for a fixed config: iteration
order follows the config, floats are serialized with full precision via
``repr``, and nothing time- or host-dependent is written to any file (the
wall clock only goes to stdout).
"""

from __future__ import annotations

import json
import os

from .runner import FlowSection, MonitorResult, RunReport

SCHEMA_VERSION = 1

# Note pinned into every report header: the shifted-quantity evolution
# identity contains a decay term whose coefficient the write-ups leave
# ambiguous; everything here fixes it to a = 1, consistent with the
# surrounding algebra.
A_CONVENTION_NOTE = ("convention: heat runs use decay coefficient a = 1 in "
                     "the log equation; the shifted-quantity evolution "
                     "identity is implemented under the same convention.")


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def _monitor_lines(mr: MonitorResult) -> list[str]:
    rep = mr.report
    lines = []
    head = (f"monitor {mr.label} [{rep.clock} "
            f"{_fmt(float(rep.times[0]))}..{_fmt(float(rep.times[-1]))}]: "
            f"{'HOLDS' if rep.holds else 'VIOLATED'}  "
            f"min margin {_fmt(rep.min_margin)}  "
            f"tolerance {_fmt(rep.tolerance)}")
    lines.append(head)
    extras = []
    if mr.eps is not None:
        extras.append(f"eps={_fmt(mr.eps)}")
    if mr.type_one_d is not None:
        extras.append(f"d={mr.type_one_d}")
    if mr.type_one_bound is not None:
        extras.append(f"type-I constant={_fmt(mr.type_one_bound)}")
    if mr.blow_up_time is not None:
        extras.append(f"blow-up time={_fmt(mr.blow_up_time)}")
    if extras:
        lines.append("  " + "  ".join(extras))
    if rep.violation is not None:
        v = rep.violation
        lines.append(f"  first violation: {rep.clock}={_fmt(v.time)} "
                     f"x={_fmt(v.location)} overshoot={_fmt(v.magnitude)}")
    return lines


def _section_lines(section: FlowSection) -> list[str]:
    lines = []
    flow_desc = (f"[flow {section.label}] kind={section.kind} "
                 f"dim={section.dim} N={section.num_points} "
                 f"t_end={_fmt(section.t_end)} dt={_fmt(section.dt)} "
                 f"steps={section.num_steps}")
    if section.eps is not None:
        flow_desc += f" eps={_fmt(section.eps)}"
    if section.singular_time != float("inf"):
        flow_desc += f" singular_time={_fmt(section.singular_time)}"
    lines.append(flow_desc)
    for mr in section.monitors:
        lines.extend(_monitor_lines(mr))
    for ir in section.identities:
        lines.append(f"identity {ir.identity} on {ir.problem} at "
                     f"{_fmt(ir.time)}: max residual {_fmt(ir.max_norm)}")
    for pr in section.paths:
        c = pr.check
        lines.append(
            f"path {c.theorem} on {pr.problem} "
            f"({_fmt(c.x_start)},{_fmt(c.t_start)})->"
            f"({_fmt(c.x_end)},{_fmt(c.t_end)}): "
            f"lhs={_fmt(c.lhs)} rhs={_fmt(c.rhs)} slack={_fmt(c.slack)} "
            f"{'HOLDS' if c.holds else 'VIOLATED'}")
    for pv in section.positivity:
        r = pv.report
        lines.append(
            f"positivity {pv.problem}: "
            f"{'OK' if r.verdict else 'VIOLATED'} "
            f"(envelope={_fmt(r.bounds_hold)} "
            f"min-nondecreasing={_fmt(r.min_nondecreasing)} "
            f"below-one={_fmt(r.below_one)} tolerance={_fmt(r.tolerance)})")
    if section.trace_slack_min is not None:
        lines.append(f"trace bound slack (min over sampled times): "
                     f"{_fmt(section.trace_slack_min)}")
    if section.area_drift_max is not None:
        lines.append(f"area drift from the linear decay law (max over "
                     f"sampled times): {_fmt(section.area_drift_max)}")
    return lines


def render_text(report: RunReport) -> str:
    cfg = report.scenario
    lines = [
        f"harnacklab run report (schema {SCHEMA_VERSION})",
        f"scenario: {cfg.name} - {cfg.title}",
        f"theorems: {', '.join(cfg.theorems)}",
        A_CONVENTION_NOTE,
    ]
    if report.tolerance is not None:
        lines.append(f"tolerance override: {_fmt(report.tolerance)}")
    if report.bound_shift:
        lines.append(f"bound shift (injection): {_fmt(report.bound_shift)}")
    lines.append("")
    for section in report.sections:
        lines.extend(_section_lines(section))
        lines.append("")
    lines.append(f"verdict: {'ALL BOUNDS HOLD' if report.verdict else 'VIOLATED'}")
    return "\n".join(lines) + "\n"


def _monitor_json(mr: MonitorResult) -> dict:
    rep = mr.report
    out = {
        "label": mr.label,
        "kind": mr.kind,
        "problem": mr.problem,
        "clock": rep.clock,
        "holds": rep.holds,
        "min_margin": rep.min_margin,
        "tolerance": rep.tolerance,
        "window": [float(rep.times[0]), float(rep.times[-1])],
        "points": int(len(rep.times)),
    }
    if mr.eps is not None:
        out["eps"] = mr.eps
    if mr.type_one_d is not None:
        out["type_one_d"] = mr.type_one_d
        out["type_one_bound"] = mr.type_one_bound
        out["blow_up_time"] = mr.blow_up_time
    if rep.violation is not None:
        v = rep.violation
        out["violation"] = {"time": v.time, "location": v.location,
                            "magnitude": v.magnitude}
    else:
        out["violation"] = None
    return out


def render_json(report: RunReport) -> str:
    cfg = report.scenario
    doc = {
        "schema_version": SCHEMA_VERSION,
        "note": A_CONVENTION_NOTE,
        "scenario": cfg.raw,
        "tolerance_override": report.tolerance,
        "bound_shift": report.bound_shift,
        "verdict": "holds" if report.verdict else "violated",
        "sections": [],
    }
    for section in report.sections:
        sec = {
            "label": section.label,
            "flow": {
                "kind": section.kind,
                "dim": section.dim,
                "num_points": section.num_points,
                "eps": section.eps,
                "t_end": section.t_end,
                "dt": section.dt,
                "num_steps": section.num_steps,
                "singular_time": (None if section.singular_time == float("inf")
                                  else section.singular_time),
            },
            "monitors": [_monitor_json(mr) for mr in section.monitors],
            "identities": [
                {"id": ir.identity, "problem": ir.problem, "time": ir.time,
                 "max_residual": ir.max_norm}
                for ir in section.identities
            ],
            "paths": [
                {"theorem": pr.check.theorem, "problem": pr.problem,
                 "x_start": pr.check.x_start, "t_start": pr.check.t_start,
                 "x_end": pr.check.x_end, "t_end": pr.check.t_end,
                 "lhs": pr.check.lhs, "rhs": pr.check.rhs,
                 "slack": pr.check.slack, "holds": pr.check.holds,
                 "tolerance": pr.check.tolerance}
                for pr in section.paths
            ],
            "positivity": [
                {"problem": pv.problem, "verdict": pv.report.verdict,
                 "envelope_bounds_hold": pv.report.bounds_hold,
                 "min_nondecreasing": pv.report.min_nondecreasing,
                 "below_one": pv.report.below_one,
                 "tolerance": pv.report.tolerance}
                for pv in section.positivity
            ],
            "trace_slack_min": section.trace_slack_min,
            "area_drift_max": section.area_drift_max,
        }
        doc["sections"].append(sec)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def render_series_csv(mr: MonitorResult) -> str:
    rep = mr.report
    rows = ["time,sup_quantity,bound,margin"]
    for t, s, b in zip(rep.times, rep.sup_values, rep.bounds):
        rows.append(f"{t!r},{s!r},{b!r},{(b - s)!r}")
    return "\n".join(rows) + "\n"


def _render_figure(mr: MonitorResult, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rep = mr.report
    fig, (ax_top, ax_bot) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_top.plot(rep.times, rep.sup_values, label="sup quantity", lw=1.2)
    ax_top.plot(rep.times, rep.bounds, label="bound", lw=1.2, ls="--")
    ax_top.set_ylabel(mr.label)
    ax_top.legend(loc="best")
    ax_top.set_title(f"{mr.label}: {'holds' if rep.holds else 'VIOLATED'}")
    ax_bot.plot(rep.times, rep.margins, lw=1.2, color="tab:green")
    ax_bot.axhline(0.0, color="k", lw=0.8)
    ax_bot.set_ylabel("margin")
    ax_bot.set_xlabel(rep.clock)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_outputs(report: RunReport, out_dir: str,
                  figures: bool = True) -> list[str]:
    """Write report.txt, report.json, per-monitor CSV series and figures
    into a scenario-private directory; returns the paths written."""
    target = os.path.join(out_dir, report.scenario.name)
    os.makedirs(target, exist_ok=True)
    written = []

    path = os.path.join(target, "report.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_text(report))
    written.append(path)

    path = os.path.join(target, "report.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_json(report))
    written.append(path)

    for section in report.sections:
        for mr in section.monitors:
            path = os.path.join(target, f"series_{mr.label}.csv")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(render_series_csv(mr))
            written.append(path)
            if figures:
                fig_path = os.path.join(target, f"figure_{mr.label}.png")
                _render_figure(mr, fig_path)
                written.append(fig_path)
    return written
