import math

import numpy as np
import pytest

import harnacklab as hl
from harnacklab import geometry as geo


def _perturbed_sphere(num_points, amp=0.1):
    grid = hl.sphere_grid(num_points)
    return grid, hl.conformal_state(grid, amp * np.cos(grid.nodes))


def test_sphere_grid_staggered_nodes_avoid_poles():
    grid = hl.sphere_grid(16)
    h = math.pi / 16
    assert grid.spacing == pytest.approx(h)
    assert grid.nodes[0] == pytest.approx(h / 2)
    assert grid.nodes[-1] == pytest.approx(math.pi - h / 2)
    assert np.all(grid.nodes > 0) and np.all(grid.nodes < math.pi)


def test_torus_grid_periodic_nodes():
    grid = hl.torus_grid(8)
    assert grid.nodes[0] == 0.0
    assert grid.nodes[-1] == pytest.approx(2 * math.pi - grid.spacing)


def test_grid_size_validation():
    with pytest.raises(ValueError):
        hl.sphere_grid(3)
    with pytest.raises(ValueError):
        hl.torus_grid(2)


def test_scalar_field_rejects_wrong_shape_and_nonfinite():
    grid = hl.torus_grid(8)
    with pytest.raises(hl.GridMismatchError):
        hl.ScalarField(grid, np.zeros(7))
    with pytest.raises(ValueError):
        hl.ScalarField(grid, np.full(8, np.nan))


def test_state_grid_pairing_is_enforced():
    grid_a = hl.sphere_grid(16)
    grid_b = hl.sphere_grid(32)
    state = hl.round_sphere_state(grid_a, 2, 1.0)
    u = hl.ScalarField(grid_b, np.cos(grid_b.nodes))
    with pytest.raises(hl.GridMismatchError):
        hl.laplacian(state, u)
    with pytest.raises(hl.GridMismatchError):
        hl.conformal_state(hl.torus_grid(16), np.zeros(16))
    with pytest.raises(ValueError):
        hl.round_sphere_state(grid_a, 2, -1.0)


def test_curvature_matches_symbolic_derivative():
    # Oracle: R = exp(-2 phi) (2 - 2 (phi'' + cot(theta) phi')) differentiated
    # symbolically for phi = a cos(theta), evaluated on the grid nodes.
    import sympy as sp

    th = sp.symbols("theta", positive=True)
    phi_expr = sp.Rational(1, 10) * sp.cos(th)
    lap0 = sp.diff(phi_expr, th, 2) + sp.cos(th) / sp.sin(th) * sp.diff(phi_expr, th)
    R_expr = sp.exp(-2 * phi_expr) * (2 - 2 * lap0)
    assert float(R_expr.subs(th, sp.pi / 3)) == pytest.approx(1.99064231968, abs=1e-10)
    R_fn = sp.lambdify(th, R_expr, "numpy")

    errs = []
    for num in (64, 128):
        grid, state = _perturbed_sphere(num)
        errs.append(np.max(np.abs(state.curvature - R_fn(grid.nodes))))
        assert errs[-1] < 0.2 * grid.spacing ** 2
    assert math.log2(errs[0] / errs[1]) > 1.9


def test_round_sphere_eigenfunction_order():
    # lap(cos theta) = -2 cos theta on the unit round 2-sphere
    errs = []
    for num in (64, 128, 256):
        grid = hl.sphere_grid(num)
        state = hl.round_sphere_state(grid, 2, 1.0)
        u = hl.ScalarField(grid, np.cos(grid.nodes))
        r = hl.laplacian(state, u).values + 2.0 * np.cos(grid.nodes)
        errs.append(np.max(np.abs(r)))
    assert math.log2(errs[0] / errs[1]) > 1.9
    assert math.log2(errs[1] / errs[2]) > 1.9


def test_conformal_laplacian_is_pointwise_rescaled_round_one():
    # The conformal operator must equal exp(-2 phi) times the round operator
    # applied to the same values, exactly in floating point.
    grid, state = _perturbed_sphere(64)
    u = hl.ScalarField(grid, np.sin(2 * grid.nodes))
    round_state = hl.round_sphere_state(grid, 2, 1.0)
    expected = np.exp(-2.0 * state.phi) * hl.laplacian(round_state, u).values
    assert np.array_equal(hl.laplacian(state, u).values, expected)


def test_scaled_laplacian_and_grad_rescale():
    grid = hl.sphere_grid(64)
    u = hl.ScalarField(grid, np.cos(grid.nodes))
    unit = hl.round_sphere_state(grid, 3, 1.0)
    half = hl.round_sphere_state(grid, 3, 0.5)
    assert np.allclose(hl.laplacian(half, u).values,
                       2.0 * hl.laplacian(unit, u).values, rtol=1e-14)
    assert np.allclose(hl.grad_norm_sq(half, u).values,
                       2.0 * hl.grad_norm_sq(unit, u).values, rtol=1e-14)


def test_hessian_norm_of_cos_on_round_sphere():
    # Hess(cos) = -cos(theta) g on the round 2-sphere, so the squared norm
    # is 2 cos^2(theta).
    grid = hl.sphere_grid(128)
    state = hl.round_sphere_state(grid, 2, 1.0)
    u = hl.ScalarField(grid, np.cos(grid.nodes))
    err = np.abs(hl.hessian_norm_sq(state, u).values - 2.0 * np.cos(grid.nodes) ** 2)
    assert np.max(err) < 0.6 * grid.spacing ** 2


def test_hessian_trace_equals_laplacian():
    for make in (
        lambda g: hl.conformal_state(g, 0.1 * np.cos(g.nodes)),
        lambda g: hl.round_sphere_state(g, 3, 0.7),
    ):
        grid = hl.sphere_grid(64)
        state = make(grid)
        u = hl.ScalarField(grid, np.exp(0.3 * np.cos(grid.nodes)))
        lam_r, lam_t = geo.hessian_eigenvalues(state, u)
        trace = lam_r + (state.dim - 1) * lam_t
        assert np.allclose(trace, hl.laplacian(state, u).values,
                           rtol=1e-12, atol=1e-12)
    grid = hl.torus_grid(64)
    state = hl.flat_state(grid, 3)
    u = hl.ScalarField(grid, np.sin(grid.nodes))
    lam_r, lam_t = geo.hessian_eigenvalues(state, u)
    assert np.array_equal(lam_r + 2 * lam_t, hl.laplacian(state, u).values)


def test_flat_operators():
    grid = hl.torus_grid(128)
    state = hl.flat_state(grid, 2)
    u = hl.ScalarField(grid, np.sin(grid.nodes))
    h2 = grid.spacing ** 2
    assert np.max(np.abs(hl.laplacian(state, u).values + np.sin(grid.nodes))) < h2
    assert np.max(np.abs(hl.grad_norm_sq(state, u).values - np.cos(grid.nodes) ** 2)) < h2
    assert np.max(np.abs(hl.hessian_norm_sq(state, u).values - np.sin(grid.nodes) ** 2)) < 1.1 * h2
    assert np.all(hl.scalar_curvature(state).values == 0.0)


def test_ricci_norm_closed_forms():
    grid = hl.sphere_grid(32)
    assert hl.ricci_norm_sq(hl.round_sphere_state(grid, 2, 1.0)).values[0] == pytest.approx(2.0)
    assert hl.ricci_norm_sq(hl.round_sphere_state(grid, 3, 0.5)).values[0] == pytest.approx(48.0)
    grid_t = hl.torus_grid(32)
    assert np.all(hl.ricci_norm_sq(hl.flat_state(grid_t, 3)).values == 0.0)
    _, state = _perturbed_sphere(64)
    assert np.allclose(hl.ricci_norm_sq(state).values,
                       0.5 * state.curvature ** 2, rtol=1e-14)


def test_integrate_closed_areas():
    grid = hl.sphere_grid(256)
    ones = hl.ScalarField(grid, np.ones(256))
    # conformal with constant phi: area = 4 pi exp(2 phi)
    state = hl.conformal_state(grid, np.full(256, 0.2))
    assert hl.integrate(state, ones) == pytest.approx(4 * math.pi * math.exp(0.4), rel=1e-4)
    # scaled n-sphere: area = c^(n/2) * vol(S^n)
    state = hl.round_sphere_state(grid, 3, 0.5)
    assert hl.integrate(state, ones) == pytest.approx(0.5 ** 1.5 * 2 * math.pi ** 2, rel=1e-4)
    grid_t = hl.torus_grid(64)
    ones_t = hl.ScalarField(grid_t, np.ones(64))
    assert hl.integrate(hl.flat_state(grid_t, 3), ones_t) == pytest.approx((2 * math.pi) ** 3, rel=1e-12)


def test_gauss_bonnet_total_curvature():
    for num in (128, 256):
        grid, state = _perturbed_sphere(num)
        total = hl.integrate(state, hl.scalar_curvature(state))
        assert abs(total - 8 * math.pi) < 1e-3
    grid, state = _perturbed_sphere(256, amp=0.3)
    total = hl.integrate(state, hl.scalar_curvature(state))
    assert abs(total - 8 * math.pi) < 1e-3


def test_grad_inner_matches_grad_norm():
    grid, state = _perturbed_sphere(64)
    u = hl.ScalarField(grid, np.cos(grid.nodes))
    inner = geo.grad_inner(state, u, u).values
    assert np.array_equal(inner, hl.grad_norm_sq(state, u).values)


def test_elementary_trace_inequality_on_surfaces():
    # |Hess u - (eps/2) R g|^2 >= (1/2) (lap u - eps R)^2 pointwise; exact
    # algebra for the eigenvalue form, so only rounding slack is allowed.
    rng = np.random.default_rng(7)
    grid = hl.sphere_grid(64)
    for eps in (0.0, 0.5, 1.0):
        coeffs = rng.normal(size=3) * 0.2
        phi = coeffs[0] * np.cos(grid.nodes)
        state = hl.conformal_state(grid, phi)
        u = hl.ScalarField(grid, coeffs[1] * np.cos(grid.nodes)
                           + coeffs[2] * np.cos(2 * grid.nodes))
        lhs = geo.shifted_hessian_norm_sq(state, u, -0.5 * eps * state.curvature).values
        trace = hl.laplacian(state, u).values - eps * state.curvature
        assert np.all(lhs >= 0.5 * trace ** 2 - 1e-10)


def test_surface_bochner_formula_converges():
    # lap |grad u|^2 = 2 |Hess u|^2 + 2 <grad lap u, grad u> + R |grad u|^2
    errs = []
    for num in (64, 128):
        grid, state = _perturbed_sphere(num)
        u = hl.ScalarField(grid, np.exp(0.3 * np.cos(grid.nodes)))
        g2 = hl.grad_norm_sq(state, u)
        lap_u = hl.laplacian(state, u)
        lhs = hl.laplacian(state, g2).values
        rhs = (2.0 * hl.hessian_norm_sq(state, u).values
               + 2.0 * geo.grad_inner(state, lap_u, u).values
               + state.curvature * g2.values)
        errs.append(np.max(np.abs(lhs - rhs)))
    assert math.log2(errs[0] / errs[1]) > 1.9


def test_sample_field_endpoints_and_wrap():
    grid = hl.torus_grid(8)
    vals = np.sin(grid.nodes)
    assert geo.sample_field(grid, vals, 0.0) == pytest.approx(0.0)
    assert geo.sample_field(grid, vals, 2 * math.pi) == pytest.approx(0.0)
    grid_s = hl.sphere_grid(8)
    vals_s = np.cos(grid_s.nodes)
    # even reflection: flat near the poles
    assert geo.sample_field(grid_s, vals_s, 0.0) == pytest.approx(vals_s[0])


def test_meridian_path_energy_shrinking_sphere_closed_form():
    grid = hl.sphere_grid(32)

    def metric_at(t):
        return hl.shrinking_sphere_state(2, t, grid)

    # speed 2 in coordinate, scale c(t) = 1 - 2t:
    # int_0^{1/4} 4 (1 - 2t) dt = 3/4, and Simpson is exact on it
    energy = hl.meridian_path_energy(metric_at, 0.5, 0.0, 1.0, 0.25)
    assert energy == pytest.approx(0.75, abs=1e-14)
    # stationary path on the flat torus has zero energy
    grid_t = hl.torus_grid(32)
    energy = hl.meridian_path_energy(lambda t: hl.flat_state(grid_t, 2),
                                     1.0, 0.0, 1.0, 1.0)
    assert energy == 0.0
    with pytest.raises(ValueError):
        hl.meridian_path_energy(metric_at, 0.5, 0.25, 1.0, 0.25)
