import math

import numpy as np
import pytest
from scipy.integrate import quad

import harnacklab as hl
from harnacklab import heat


def _constant_data(grid, f0):
    return hl.ScalarField(grid, np.full(grid.num_points, f0))


def test_problem_validation():
    flow = hl.build_trajectory("flat", 32, 0.5, dim=2)
    grid = flow.grid
    with pytest.raises(ValueError):
        hl.HeatProblem(flow, "sideways", 0.0, 1.0, _constant_data(grid, 0.5))
    with pytest.raises(ValueError):
        hl.HeatProblem(flow, hl.FORWARD_T, 0.0, 1.0, _constant_data(grid, -0.5))
    # no-potential runs track sub-1 solutions only
    with pytest.raises(ValueError):
        hl.HeatProblem(flow, hl.FORWARD_T, 0.0, 1.0, _constant_data(grid, 1.5))
    other = hl.sphere_grid(32)
    with pytest.raises(ValueError):
        hl.HeatProblem(flow, hl.FORWARD_T, 0.0, 1.0, _constant_data(other, 0.5))
    conf = hl.build_trajectory("conformal", 32, 0.1, eps=1.0)
    with pytest.raises(ValueError):
        hl.HeatProblem(conf, hl.FORWARD_TAU, 2.0, 1.0,
                       _constant_data(conf.grid, 0.5))


def test_u_rhs_closed_form_values():
    grid_t = hl.torus_grid(64)
    flat = hl.flat_state(grid_t, 2)
    u0 = 0.7
    u = hl.ScalarField(grid_t, np.full(64, u0))
    vals = hl.u_rhs(flat, u, 0.0, 1.0, hl.FORWARD_T).values
    assert np.allclose(vals, -u0, rtol=0, atol=1e-15)

    grid_s = hl.sphere_grid(64)
    unit = hl.round_sphere_state(grid_s, 2, 1.0)
    u = hl.ScalarField(grid_s, np.full(64, u0))
    vals = hl.u_rhs(unit, u, 2.0, 1.0, hl.FORWARD_TAU).values
    assert np.allclose(vals, 4.0 - u0, rtol=1e-14)

    u = hl.ScalarField(grid_t, np.sin(grid_t.nodes))
    vals = hl.u_rhs(flat, u, 0.0, 1.0, hl.FORWARD_T).values
    # at x = 0: -sin - cos^2 - sin = -1 up to O(h^2)
    assert abs(vals[0] + 1.0) < grid_t.spacing ** 2


def test_flat_constant_decay_matches_exact_exponential():
    # constant data on the static torus: u' = -u, so
    # f(1) = exp(-exp(-1)) for f(0) = exp(-1)
    flow = hl.build_trajectory("flat", 32, 1.0, dim=2, dt_max=1e-3)
    problem = hl.HeatProblem(flow, hl.FORWARD_T, 0.0, 1.0,
                             _constant_data(flow.grid, math.exp(-1.0)))
    ht = hl.solve(problem)
    f_end = ht.f(ht.num_steps).values
    expected = math.exp(-math.exp(-1.0))
    assert expected == pytest.approx(0.6922006275553464, rel=1e-15)
    assert np.max(np.abs(f_end - expected)) / expected < 1e-8
    assert np.max(f_end) - np.min(f_end) == 0.0


def _ode_forward_oracle(u0, t, T_blow):
    # u' = -2 R(t) - u on the shrinking 2-sphere, R = 1 / (T - t)
    integrand = lambda s: math.exp(s) * 2.0 / (T_blow - s)
    val, _ = quad(integrand, 0.0, t, epsabs=1e-13, epsrel=1e-13)
    return math.exp(-t) * (u0 - val)


def _ode_backward_oracle(u0, tau, t_end, T_blow):
    # u' = +2 R(tau) - u with R = 1 / (T - t_end + tau)
    integrand = lambda s: math.exp(s) * 2.0 / (T_blow - t_end + s)
    val, _ = quad(integrand, 0.0, tau, epsabs=1e-13, epsrel=1e-13)
    return math.exp(-tau) * (u0 + val)


def test_shrinking_sphere_forward_constant_oracle():
    u0 = 1.2
    flow = hl.build_trajectory("scaled", 64, 0.25, dim=2)
    problem = hl.HeatProblem(flow, hl.FORWARD_T, 2.0, 1.0,
                             _constant_data(flow.grid, math.exp(-u0)))
    ht = hl.solve(problem)
    k = ht.index_of(flow.schedule[flow.num_steps])
    got = ht.u(k).values
    expected = _ode_forward_oracle(u0, 0.25, 0.5)
    assert expected == pytest.approx(-0.3096829034105912, abs=1e-12)
    assert np.max(np.abs(got - expected)) < 1e-10


def test_shrinking_sphere_backward_constant_oracle():
    u0 = 1.0
    flow = hl.build_trajectory("scaled", 64, 0.4, dim=2)
    problem = hl.HeatProblem(flow, hl.FORWARD_TAU, 2.0, 1.0,
                             _constant_data(flow.grid, math.exp(-u0)))
    ht = hl.solve(problem)
    tau = ht.schedule[ht.num_steps]
    got = ht.u(ht.num_steps).values
    expected = _ode_backward_oracle(u0, tau, 0.4, 0.5)
    assert np.max(np.abs(got - expected)) < 1e-10


def test_backward_clock_reverses_the_stored_flow():
    flow = hl.build_trajectory("scaled", 32, 0.4, dim=2)
    problem = hl.HeatProblem(flow, hl.FORWARD_TAU, 2.0, 1.0,
                             _constant_data(flow.grid, 0.5))
    ht = hl.solve(problem)
    for k in (0, ht.num_steps // 2, ht.num_steps):
        tau = float(ht.schedule[k])
        assert ht.metric(k).t == pytest.approx(flow.t_end - tau, abs=1e-12)
    # tau = 0 sits at the end of the flow
    assert ht.metric(0).t == pytest.approx(flow.t_end, rel=1e-15)


def test_conformal_round_run_reproduces_exact_flow_oracle():
    # On the round sphere the eps = 1 conformal flow equals the shrinking
    # sphere, so the co-integrated constant-data run must match the same
    # closed-form ODE solution.
    u0 = 1.2
    flow = hl.build_trajectory("conformal", 64, 0.25, eps=1.0)
    problem = hl.HeatProblem(flow, hl.FORWARD_T, 2.0, 1.0,
                             _constant_data(flow.grid, math.exp(-u0)))
    ht = hl.solve(problem)
    got = ht.u(ht.num_steps).values
    expected = _ode_forward_oracle(u0, 0.25, 0.5)
    assert np.max(np.abs(got - expected)) < 1e-8


def test_solution_self_convergence_on_the_torus():
    # nested torus grids: coarse nodes are the even fine nodes, so direct
    # injection compares levels; dt scales with h^2
    def run(num):
        flow = hl.build_trajectory("flat", num, 0.5, dim=2)
        f0 = np.exp(-(1.5 + 0.3 * np.sin(flow.grid.nodes)))
        problem = hl.HeatProblem(flow, hl.FORWARD_T, 0.0, 1.0,
                                 hl.ScalarField(flow.grid, f0))
        ht = hl.solve(problem)
        return ht.u(ht.num_steps).values

    u32, u64, u128 = run(32), run(64), run(128)
    e1 = np.max(np.abs(u64[::2] - u32))
    e2 = np.max(np.abs(u128[::2] - u64))
    assert math.log2(e1 / e2) > 1.9


def test_positivity_report_flat_no_potential():
    flow = hl.build_trajectory("flat", 64, 1.0, dim=2)
    f0 = np.exp(-(1.5 + 0.3 * np.sin(flow.grid.nodes)))
    problem = hl.HeatProblem(flow, hl.FORWARD_T, 0.0, 1.0,
                             hl.ScalarField(flow.grid, f0))
    ht = hl.solve(problem)
    report = hl.positivity_report(ht)
    assert report.verdict
    assert report.bounds_hold and report.min_nondecreasing and report.below_one
    assert np.all(report.f_min > 0.0)
    assert np.all(np.diff(report.f_min) > -report.tolerance)
    assert np.all(report.f_max < 1.0)

    with_potential = hl.HeatProblem(flow, hl.FORWARD_T, 1.0, 1.0,
                                    hl.ScalarField(flow.grid, f0))
    with pytest.raises(ValueError):
        hl.positivity_report(hl.solve(with_potential))


def test_stored_solution_is_finite_and_positive():
    flow = hl.build_trajectory("scaled", 48, 0.2, dim=3)
    f0 = np.exp(-(1.2 + 0.2 * np.cos(flow.grid.nodes)))
    problem = hl.HeatProblem(flow, hl.FORWARD_TAU, 2.0, 1.0,
                             hl.ScalarField(flow.grid, f0))
    ht = hl.solve(problem)
    assert np.all(np.isfinite(ht.log_values))
    assert ht.log_values.shape == (ht.num_steps + 1, 48)
    for k in (0, ht.num_steps):
        assert np.all(ht.f(k).values > 0.0)
