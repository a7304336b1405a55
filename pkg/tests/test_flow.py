import math

import numpy as np
import pytest

import harnacklab as hl
from harnacklab import flow as fl


def test_round_profile_tracks_exact_conformal_factor():
    # On the round sphere with full-strength flow the factor is spatially
    # constant and solves phi' = -exp(-2 phi), so phi(t) = 0.5 ln(1 - 2t).
    traj = hl.build_trajectory("conformal", 64, 0.25, eps=1.0)
    k = traj.index_of(0.25)
    phi = traj.state(k).phi
    assert np.max(np.abs(phi - 0.5 * math.log(0.5))) < 1e-10
    assert np.max(phi) - np.min(phi) < 1e-12


def test_epsilon_zero_flow_is_static():
    grid = hl.sphere_grid(64)
    phi0 = 0.1 * np.cos(grid.nodes)
    traj = hl.build_trajectory("conformal", 64, 0.3, eps=0.0, phi0=lambda th: 0.1 * np.cos(th))
    assert np.array_equal(traj.state(traj.num_steps).phi, phi0)
    assert traj.singular_time == math.inf


def test_area_decay_rate_improves_under_refinement():
    # d(Area)/dt = -8 pi eps exactly; relative drift from the linear law
    # must shrink at second order as the mesh is refined.
    drifts = []
    for num in (64, 128):
        traj = hl.build_trajectory("conformal", num, 0.3, eps=1.0,
                                   phi0=lambda th: 0.1 * np.cos(th))
        a0 = traj.area(0)
        worst = 0.0
        for k in range(traj.num_steps + 1):
            expected = a0 - 8 * math.pi * traj.schedule[k]
            worst = max(worst, abs(traj.area(k) - expected) / a0)
        drifts.append(worst)
    assert math.log2(drifts[0] / drifts[1]) > 1.9


def test_curvature_stays_positive_from_positive_data():
    traj = hl.build_trajectory("conformal", 64, 0.3, eps=1.0,
                               phi0=lambda th: 0.2 * np.cos(th))
    for k in range(traj.num_steps + 1):
        assert np.min(traj.state(k).curvature) > 0.0


def test_estimated_singular_time_round_case():
    grid = hl.sphere_grid(128)
    state = hl.conformal_state(grid, np.zeros(128))
    assert hl.estimate_singular_time(state, 1.0) == pytest.approx(0.5, rel=1e-4)
    assert hl.estimate_singular_time(state, 0.0) == math.inf


def test_runs_must_stop_before_singular_time():
    with pytest.raises(hl.SingularTimeError):
        hl.build_trajectory("conformal", 64, 0.51, eps=1.0)
    with pytest.raises(hl.SingularTimeError):
        hl.build_trajectory("scaled", 64, 0.5, dim=2)
    with pytest.raises(hl.SingularTimeError):
        hl.shrinking_sphere_state(2, 0.5, hl.sphere_grid(16))


def test_oversized_step_is_rejected():
    grid = hl.sphere_grid(64)
    state = hl.conformal_state(grid, np.zeros(64))
    with pytest.raises(hl.StabilityError):
        fl.step_surface_flow(state, 0.1, 1.0)
    with pytest.raises(ValueError):
        hl.build_trajectory("conformal", 64, 0.3, eps=1.0, max_steps=10)


def test_shrinking_sphere_curvature_laws():
    grid = hl.sphere_grid(16)
    for dim in (2, 3):
        T = 1.0 / (2 * (dim - 1))
        for t in (0.0, 0.2 * T, 0.8 * T):
            state = hl.shrinking_sphere_state(dim, t, grid)
            c = 1.0 - 2 * (dim - 1) * t
            assert state.scale == pytest.approx(c, rel=1e-15)
            R = state.curvature[0]
            assert R == pytest.approx(dim * (dim - 1) / c, rel=1e-14)
            # R = n / (2 tau) with tau the time left to blow-up
            assert R == pytest.approx(dim / (2 * (T - t)), rel=1e-14)


def test_scaled_trajectory_state_at_arbitrary_time():
    traj = hl.build_trajectory("scaled", 32, 0.4, dim=2)
    state = traj.state_at(0.123456)
    assert state.scale == pytest.approx(1.0 - 2 * 0.123456, rel=1e-15)
    flat = hl.build_trajectory("flat", 32, 1.0, dim=3)
    assert flat.state_at(0.777).curvature[0] == 0.0


def test_schedule_is_uniform_and_indexable():
    traj = hl.build_trajectory("scaled", 32, 0.4, dim=2)
    steps = np.diff(traj.schedule)
    assert np.allclose(steps, traj.dt, rtol=1e-12)
    assert traj.index_of(traj.schedule[3]) == 3
    with pytest.raises(ValueError):
        traj.index_of(traj.dt * 2.5)


def test_type_one_bounds():
    # sup |Rm| (T - t) over the shrinking sphere: curvature operator norm
    # sqrt(2 n (n-1)) / c(t) times T - t, constant in t.
    traj2 = hl.build_trajectory("scaled", 32, 0.4, dim=2)
    b2 = hl.type_one_constant(traj2)
    assert b2.bound == pytest.approx(1.0, abs=1e-12)
    assert b2.blow_up_time == pytest.approx(0.5, rel=1e-15)

    traj3 = hl.build_trajectory("scaled", 32, 0.2, dim=3)
    b3 = hl.type_one_constant(traj3)
    assert b3.bound == pytest.approx(0.8660254037844386, abs=1e-12)
    assert b3.blow_up_time == pytest.approx(0.25, rel=1e-15)

    flat = hl.build_trajectory("flat", 32, 1.0, dim=2)
    bf = hl.type_one_constant(flat)
    assert bf.bound == 0.0
    assert bf.blow_up_time == math.inf

    conf = hl.build_trajectory("conformal", 32, 0.1, eps=1.0)
    with pytest.raises(ValueError):
        hl.type_one_constant(conf)


def test_curvature_evolution_residual_is_second_order_in_time():
    # dR/dt = eps (lap R + R^2) holds exactly for the spatial semidiscrete
    # system, so the centered-difference residual must scale like dt^2.
    def residual(dt_max):
        traj = hl.build_trajectory("conformal", 48, 0.2, eps=1.0,
                                   phi0=lambda th: 0.1 * np.cos(th),
                                   dt_max=dt_max)
        k = traj.num_steps // 2
        dR = (traj.state(k + 1).curvature - traj.state(k - 1).curvature) / (2 * traj.dt)
        state = traj.state(k)
        R = hl.ScalarField(traj.grid, state.curvature)
        rhs = hl.laplacian(state, R).values + state.curvature ** 2
        return np.max(np.abs(dR - rhs)), traj.dt

    r_coarse, dt_coarse = residual(4e-4)
    r_fine, dt_fine = residual(2e-4)
    order = math.log(r_coarse / r_fine) / math.log(dt_coarse / dt_fine)
    assert order > 1.9
