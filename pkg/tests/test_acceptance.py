"""Package-level acceptance gate: seven criteria, one test (and one
printed verdict line) each.

The resolution-256 bound matrix runs once in a module fixture and is
shared by the criteria that inspect margins, trace slack, area drift and
positivity, so the whole module stays inside the five-minute budget.
"""

import copy
import math

import numpy as np
import pytest
from scipy.special import expi

import harnacklab as hl
from harnacklab import runner
from harnacklab.cli import main
from harnacklab.config import parse_scenario
from harnacklab.scenarios import load_bundled

BOUND_MATRIX = (
    "sphere-eps-family",
    "thm1.5-shrinking-sphere",
    "thm1.5-torus-n2",
    "thm1.5-torus-n3",
    "thm1.6-typeI-sphere",
    "thm1.7-torus",
    "thm1.7-shrinking-sphere",
    "thm1.8-torus-halfwindow",
    "thm5.1-flat-K0",
    "thm5.2-flat-K0",
)

EPS_FAMILY = (0.0, 0.25, 0.5, 1.0)


@pytest.fixture(scope="module")
def matrix_reports():
    return {name: hl.execute_scenario(load_bundled(name))
            for name in BOUND_MATRIX}


def _verdict_line(num, label, ok):
    print(f"acceptance criterion {num} ({label}): "
          f"{'PASS' if ok else 'FAIL'}")
    assert ok


def _spacing(kind, num_points):
    # sphere-backed kinds grid the meridian (0, pi); the torus covers 2 pi
    width = 2.0 * math.pi if kind == "flat" else math.pi
    return width / num_points


def test_criterion_1_bound_matrix(matrix_reports):
    ok = True
    for name in BOUND_MATRIX:
        report = matrix_reports[name]
        for section in report.sections:
            assert section.num_points == 256
            for mr in section.monitors:
                h = _spacing(section.kind, section.num_points)
                tol = 1e-6 + hl.harnack.MONITOR_TOL_COEFF[section.kind] * h * h
                assert mr.report.tolerance == pytest.approx(tol)
                ok = ok and mr.report.holds
                ok = ok and mr.report.min_margin >= -mr.report.tolerance
        assert not report.scenario.flow.is_sweep or \
            tuple(s.label for s in report.sections) == \
            tuple(f"eps{e:g}" for e in EPS_FAMILY)
    total = sum(r.wall_clock for r in matrix_reports.values())
    ok = ok and total <= 300.0
    _verdict_line(1, f"bound matrix at N=256, {total:.0f}s", ok)


def test_criterion_2_closed_form_oracles():
    ok = True
    for name in ("torus-constant", "thm3.4-torus-path"):
        raw = copy.deepcopy(load_bundled(name).raw)
        raw["flow"]["dt_max"] = 1.0e-3
        cfg = parse_scenario(raw)
        flow = runner._build_flow(cfg, cfg.flow.eps_values[0], None)
        assert flow.dt <= 1.0e-3 + 1e-15
        solved = {}
        for hc in cfg.heat:
            ht = runner._solve_heat(flow, hc, 1.0)
            solved[hc.name] = ht
            u0 = float(ht.u(0).values[0])
            for k in (1, ht.num_steps // 2, ht.num_steps):
                s = float(ht.schedule[k])
                exact = u0 * math.exp(-s)
                rel = np.max(np.abs(ht.u(k).values - exact)) / abs(exact)
                ok = ok and rel <= 1e-8

        for pc in cfg.paths:
            check = hl.path_harnack_check(flow, solved[pc.problem],
                                          pc.theorem, pc.x_start, pc.t_start,
                                          pc.x_end, pc.t_end)
            T, n = flow.t_end, flow.dim
            u0 = -math.log(0.36787944117144233)
            lhs = -u0 * (math.exp(2 * pc.t_end - T)
                         - math.exp(2 * pc.t_start - T))
            rhs = (n / 4.0) * (math.exp(T - pc.t_start)
                               - math.exp(T - pc.t_end)) \
                + n * (expi(T - pc.t_start) - expi(T - pc.t_end))
            ok = ok and abs(check.lhs - lhs) <= 1e-6
            ok = ok and abs(check.rhs - rhs) <= 1e-6
            ok = ok and abs(check.slack - (rhs - lhs)) <= 1e-6
    _verdict_line(2, "constant scenarios vs exact ODE and path forms", ok)


def test_criterion_3_identity_orders():
    ok = True
    orders = []
    for name in ("study-torus-identities", "study-sphere-heps"):
        report = hl.run_study(load_bundled(name), levels=3)
        assert report.num_points == (64, 128, 256)
        for lo, hi in zip(report.dts[1:], report.dts[:-1]):
            ok = ok and 3.5 <= hi / lo <= 4.5  # dt follows h^2
        for row in report.identity_rows:
            assert not row.exact
            orders.append(row.order)
            ok = ok and row.order >= 1.9
    assert len(orders) == 6
    _verdict_line(3, f"identity orders {min(orders):.2f}..{max(orders):.2f}",
                  ok)


def test_criterion_4_geometric_invariants(matrix_reports):
    grid = hl.sphere_grid(256)
    ok = True
    factors = (0.1 * np.cos(grid.nodes),
               0.3 * np.cos(grid.nodes),
               0.2 * np.cos(2.0 * grid.nodes))
    for phi in factors:
        state = hl.conformal_state(grid, phi)
        total = hl.integrate(state, hl.scalar_curvature(state))
        ok = ok and abs(total - 8.0 * math.pi) <= 1e-3

    family = matrix_reports["sphere-eps-family"]
    drift = {s.eps: s.area_drift_max for s in family.sections}
    assert set(drift) == set(EPS_FAMILY)
    ok = ok and drift[1.0] is not None and drift[1.0] <= 1e-4
    ok = ok and family.sections[0].t_end == 0.3
    _verdict_line(4, "Gauss-Bonnet and area decay", ok)


def test_criterion_5_trace_bound(matrix_reports):
    slacks = []
    for report in matrix_reports.values():
        for section in report.sections:
            if section.kind == "conformal":
                assert section.trace_slack_min is not None
                slacks.append(section.trace_slack_min)
    ok = len(slacks) >= len(EPS_FAMILY) and \
        all(s >= -1e-4 for s in slacks)
    _verdict_line(5, f"trace slack min {min(slacks):.3g} over "
                     f"{len(slacks)} surface runs", ok)


def test_criterion_6_positivity_preservation(matrix_reports):
    reports = [matrix_reports["thm5.1-flat-K0"],
               hl.execute_scenario(load_bundled("torus-constant")),
               hl.execute_scenario(load_bundled("sphere-positivity"))]
    kinds = set()
    ok = True
    checked = 0
    for report in reports:
        for section in report.sections:
            kinds.add(section.kind)
            for pv in section.positivity:
                checked += 1
                ok = ok and pv.report.verdict
                ok = ok and pv.report.min_nondecreasing
                ok = ok and pv.report.below_one
                h = _spacing(section.kind, section.num_points)
                assert pv.report.tolerance == pytest.approx(
                    1e-8 + hl.harnack.MONITOR_TOL_COEFF[section.kind] * h * h)
    # both a static background and an exact Ricci flow must be exercised
    ok = ok and checked >= 3 and "flat" in kinds and "scaled" in kinds
    _verdict_line(6, "positivity on static and Ricci-flow backgrounds", ok)


def test_criterion_7_violation_injection(matrix_reports, tmp_path, capsys):
    ok = True
    kinds_flipped = set()

    def flip(clean):
        nonlocal ok
        for idx, mr in enumerate(clean.sections[0].monitors):
            shift = 2.0 * mr.report.min_margin
            shifted = hl.execute_scenario(clean.scenario, bound_shift=shift)
            flipped = shifted.sections[0].monitors[idx]
            ok = ok and not flipped.report.holds
            ok = ok and not shifted.verdict
            kinds_flipped.add(mr.kind)

    constant = hl.execute_scenario(load_bundled("torus-constant"))
    flip(constant)
    flip(hl.execute_scenario(load_bundled("study-sphere-heps")))
    flip(matrix_reports["thm1.6-typeI-sphere"])

    assert kinds_flipped == set(hl.QUANTITY_KINDS)

    margin = constant.sections[0].monitors[0].report.min_margin
    code = main(["run", "torus-constant", "--out", str(tmp_path), "--quiet",
                 "--no-figures", "--bound-shift", repr(2.0 * margin)])
    capsys.readouterr()
    ok = ok and code == 2
    _verdict_line(7, "bound tightening flips verdict and exit code", ok)
