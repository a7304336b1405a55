"""Finite-difference geometry on rotationally symmetric model spaces.

Three metric families share one code path:

* ``conformal``: a metric ``exp(2 phi) g_round`` on the 2-sphere, with the
  conformal factor ``phi`` a function of the polar angle only;
* ``scaled``: a round n-sphere metric ``c * g_round`` with constant ``c > 0``;
* ``flat``: a flat n-torus with fields depending on one coordinate.

Spheres are sampled on a staggered meridian grid ``theta_j = (j - 1/2) h``
with ``h = pi / N``.  The stagger keeps every node away from the poles, so
``cot(theta)`` stays finite, and smooth axisymmetric data extends across a
pole by even reflection; together these make plain second-order central
differences valid on the whole grid.  The torus grid is uniform on
``[0, 2 pi)`` with periodic wraparound.  Every operator here is
second-order accurate in the grid spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

SPHERE = "sphere"
TORUS = "torus"

CONFORMAL = "conformal"
SCALED = "scaled"
FLAT = "flat"


class GridMismatchError(ValueError):
    """A field or state was combined with an object on a different grid."""


@dataclass(frozen=True)
class Grid:
    """One-dimensional sample nodes for a background family.

    ``kind`` is ``"sphere"`` (staggered meridian nodes in (0, pi)) or
    ``"torus"`` (periodic nodes in [0, 2 pi)).  ``cot`` caches
    ``cos(nodes) / sin(nodes)`` on sphere grids and is ``None`` on the torus.
    """

    kind: str
    num_points: int
    nodes: np.ndarray
    spacing: float
    cot: np.ndarray | None = None


def sphere_grid(num_points: int) -> Grid:
    """Staggered meridian grid with nodes ``(j - 1/2) pi / N``, ``j = 1..N``."""
    if num_points < 4:
        raise ValueError("sphere grid needs num_points >= 4")
    h = math.pi / num_points
    nodes = (np.arange(num_points) + 0.5) * h
    return Grid(SPHERE, num_points, nodes, h, np.cos(nodes) / np.sin(nodes))


def torus_grid(num_points: int) -> Grid:
    """Uniform periodic grid with nodes ``j * 2 pi / N``, ``j = 0..N-1``."""
    if num_points < 4:
        raise ValueError("torus grid needs num_points >= 4")
    h = 2.0 * math.pi / num_points
    nodes = np.arange(num_points) * h
    return Grid(TORUS, num_points, nodes, h)


@dataclass(frozen=True)
class ScalarField:
    """Grid function: real values attached to the grid they live on."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.num_points,):
            raise GridMismatchError(
                f"field has shape {values.shape}, grid has "
                f"{self.grid.num_points} points"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", values)


def field_from_function(grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> ScalarField:
    return ScalarField(grid, np.asarray(fn(grid.nodes), dtype=float))


@dataclass(frozen=True)
class MetricState:
    """Snapshot of one background metric at a fixed time.

    ``kind`` selects the family.  ``phi`` is the conformal factor on the
    staggered sphere grid (``conformal`` only), ``scale`` the constant
    metric factor (``scaled`` only).  ``curvature`` caches the scalar
    curvature as a grid array; factories fill it on construction.
    """

    grid: Grid
    kind: str
    dim: int
    t: float
    phi: np.ndarray | None = None
    scale: float | None = None
    curvature: np.ndarray | None = None


def conformal_state(grid: Grid, phi: np.ndarray, t: float = 0.0) -> MetricState:
    """Conformal 2-sphere metric ``exp(2 phi) g_round`` at time ``t``."""
    if grid.kind != SPHERE:
        raise GridMismatchError("conformal states live on a sphere grid")
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (grid.num_points,):
        raise GridMismatchError("phi shape does not match the grid")
    return MetricState(grid, CONFORMAL, 2, t, phi=phi,
                       curvature=conformal_curvature(grid, phi))


def round_sphere_state(grid: Grid, dim: int, scale: float, t: float = 0.0) -> MetricState:
    """Round n-sphere metric ``scale * g_round`` at time ``t``."""
    if grid.kind != SPHERE:
        raise GridMismatchError("round sphere states live on a sphere grid")
    if dim < 2:
        raise ValueError("round sphere needs dim >= 2")
    if scale <= 0.0:
        raise ValueError(f"metric scale must be positive, got {scale}")
    curv = np.full(grid.num_points, dim * (dim - 1) / scale)
    return MetricState(grid, SCALED, dim, t, scale=scale, curvature=curv)


def flat_state(grid: Grid, dim: int, t: float = 0.0) -> MetricState:
    """Flat n-torus at time ``t``; fields vary along one coordinate."""
    if grid.kind != TORUS:
        raise GridMismatchError("flat states live on a torus grid")
    if dim < 1:
        raise ValueError("flat torus needs dim >= 1")
    return MetricState(grid, FLAT, dim, t,
                       curvature=np.zeros(grid.num_points))


def _check_field(state: MetricState, u: ScalarField) -> np.ndarray:
    if u.grid is not state.grid and (
        u.grid.kind != state.grid.kind
        or u.grid.num_points != state.grid.num_points
    ):
        raise GridMismatchError("field and metric state use different grids")
    return u.values


# -- stencils ---------------------------------------------------------------

def _padded(grid: Grid, v: np.ndarray) -> np.ndarray:
    # Even reflection across the poles on the sphere, periodic on the torus.
    if grid.kind == SPHERE:
        return np.concatenate((v[:1], v, v[-1:]))
    return np.concatenate((v[-1:], v, v[:1]))


def first_derivative(grid: Grid, v: np.ndarray) -> np.ndarray:
    p = _padded(grid, v)
    return (p[2:] - p[:-2]) / (2.0 * grid.spacing)


def second_derivative(grid: Grid, v: np.ndarray) -> np.ndarray:
    p = _padded(grid, v)
    return (p[2:] - 2.0 * v + p[:-2]) / (grid.spacing * grid.spacing)


def _d12(grid: Grid, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = _padded(grid, v)
    d1 = (p[2:] - p[:-2]) / (2.0 * grid.spacing)
    d2 = (p[2:] - 2.0 * v + p[:-2]) / (grid.spacing * grid.spacing)
    return d1, d2


def coordinate_laplacian(grid: Grid, v: np.ndarray, dim: int) -> np.ndarray:
    """Round-metric Laplacian: ``v'' + (dim-1) cot(theta) v'`` on the sphere
    grid, ``v''`` on the torus."""
    d1, d2 = _d12(grid, v)
    if grid.kind == SPHERE:
        return d2 + (dim - 1) * grid.cot * d1
    return d2


def conformal_curvature(grid: Grid, phi: np.ndarray) -> np.ndarray:
    """Scalar curvature of ``exp(2 phi) g_round`` on the 2-sphere."""
    return np.exp(-2.0 * phi) * (2.0 - 2.0 * coordinate_laplacian(grid, phi, 2))


# -- first-order operators --------------------------------------------------

def _inv_scale(state: MetricState) -> np.ndarray | float:
    # Pointwise factor converting coordinate derivatives to metric ones.
    if state.kind == CONFORMAL:
        return np.exp(-2.0 * state.phi)
    if state.kind == SCALED:
        return 1.0 / state.scale
    return 1.0


def laplacian(state: MetricState, u: ScalarField) -> ScalarField:
    """Laplace-Beltrami operator of ``u`` in the metric of ``state``.

    Conformal: ``exp(-2 phi) (u'' + cot(theta) u')``; scaled sphere:
    ``(u'' + (dim-1) cot(theta) u') / scale``; flat torus: ``u''``.  The
    conformal case is, by construction, the round-sphere operator times the
    pointwise factor ``exp(-2 phi)``.
    """
    vals = _check_field(state, u)
    base = coordinate_laplacian(state.grid, vals, state.dim)
    return ScalarField(state.grid, _inv_scale(state) * base)


def scalar_curvature(state: MetricState) -> ScalarField:
    """Scalar curvature of the state, from the cache filled at construction."""
    return ScalarField(state.grid, state.curvature)


def grad_norm_sq(state: MetricState, u: ScalarField) -> ScalarField:
    """Squared gradient norm ``|grad u|^2`` in the state's metric."""
    vals = _check_field(state, u)
    d1 = first_derivative(state.grid, vals)
    return ScalarField(state.grid, _inv_scale(state) * d1 * d1)


def grad_inner(state: MetricState, a: ScalarField, b: ScalarField) -> ScalarField:
    """Metric inner product ``<grad a, grad b>``."""
    va = _check_field(state, a)
    vb = _check_field(state, b)
    da = first_derivative(state.grid, va)
    db = first_derivative(state.grid, vb)
    return ScalarField(state.grid, _inv_scale(state) * da * db)


def hessian_eigenvalues(state: MetricState, u: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of the Hessian of ``u`` in an orthonormal frame.

    Rotational symmetry diagonalises the Hessian: one radial eigenvalue
    along the coordinate direction and one transverse eigenvalue with
    multiplicity ``dim - 1``.  Returns ``(radial, transverse)`` arrays.
    Their weighted sum ``radial + (dim-1) * transverse`` is the Laplacian.
    """
    vals = _check_field(state, u)
    grid = state.grid
    d1, d2 = _d12(grid, vals)
    if state.kind == CONFORMAL:
        dphi = first_derivative(grid, state.phi)
        w = np.exp(-2.0 * state.phi)
        return w * (d2 - dphi * d1), w * (grid.cot + dphi) * d1
    if state.kind == SCALED:
        return d2 / state.scale, grid.cot * d1 / state.scale
    return d2, np.zeros_like(d2)


def hessian_norm_sq(state: MetricState, u: ScalarField) -> ScalarField:
    """Squared Hessian norm ``|Hess u|^2`` in the state's metric."""
    lam_r, lam_t = hessian_eigenvalues(state, u)
    out = lam_r * lam_r + (state.dim - 1) * lam_t * lam_t
    return ScalarField(state.grid, out)


def shifted_hessian_norm_sq(state: MetricState, u: ScalarField,
                            shift: np.ndarray | float) -> ScalarField:
    """Squared norm of ``Hess u + shift * g`` for a scalar ``shift`` field.

    Because the Hessian is diagonal in the orthonormal frame, the shift adds
    to each eigenvalue directly.
    """
    lam_r, lam_t = hessian_eigenvalues(state, u)
    a = lam_r + shift
    b = lam_t + shift
    return ScalarField(state.grid, a * a + (state.dim - 1) * b * b)


def ricci_eigenvalue(state: MetricState) -> np.ndarray:
    """Eigenvalue of the Ricci tensor (isotropic on all three families)."""
    if state.kind == CONFORMAL:
        return 0.5 * state.curvature
    if state.kind == SCALED:
        return np.full(state.grid.num_points, (state.dim - 1) / state.scale)
    return np.zeros(state.grid.num_points)


def ricci_norm_sq(state: MetricState) -> ScalarField:
    """Squared Ricci norm: ``R^2 / 2`` on surfaces, ``n (n-1)^2 / c^2`` on
    the scaled n-sphere, ``0`` on the flat torus."""
    lam = ricci_eigenvalue(state)
    return ScalarField(state.grid, state.dim * lam * lam)


# -- quadrature -------------------------------------------------------------

def unit_sphere_area(k: int) -> float:
    """Surface area of the unit k-sphere, ``2 pi^((k+1)/2) / Gamma((k+1)/2)``."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


def quadrature_weights(state: MetricState) -> np.ndarray:
    """Midpoint-rule volume weights so that ``sum(u * w)`` approximates
    the integral of ``u`` over the manifold."""
    grid = state.grid
    h = grid.spacing
    if state.kind == CONFORMAL:
        return 2.0 * math.pi * h * np.exp(2.0 * state.phi) * np.sin(grid.nodes)
    if state.kind == SCALED:
        area = unit_sphere_area(state.dim - 1)
        return (state.scale ** (state.dim / 2.0) * area * h
                * np.sin(grid.nodes) ** (state.dim - 1))
    return np.full(grid.num_points, (2.0 * math.pi) ** (state.dim - 1) * h)


def integrate(state: MetricState, u: ScalarField) -> float:
    """Integral of ``u`` against the state's volume form."""
    vals = _check_field(state, u)
    return float(np.sum(vals * quadrature_weights(state)))


def metric_scale_floor(state: MetricState) -> float:
    """Smallest pointwise metric factor; enters the parabolic step bound."""
    if state.kind == CONFORMAL:
        return float(np.exp(2.0 * np.min(state.phi)))
    if state.kind == SCALED:
        return float(state.scale)
    return 1.0


# -- off-grid sampling and path energy --------------------------------------

def sample_field(grid: Grid, values: np.ndarray, x: float) -> float:
    """Linear interpolation of a grid function at coordinate ``x``.

    Sphere fields use the reflection ghosts, torus fields wrap periodically.
    Second-order accurate, consistent with the stencils.
    """
    if grid.kind == SPHERE:
        xp = np.concatenate(([grid.nodes[0] - grid.spacing], grid.nodes,
                             [grid.nodes[-1] + grid.spacing]))
        fp = np.concatenate((values[:1], values, values[-1:]))
        x = min(max(x, 0.0), math.pi)
    else:
        xp = np.concatenate((grid.nodes, [2.0 * math.pi]))
        fp = np.concatenate((values, values[:1]))
        x = x % (2.0 * math.pi)
    return float(np.interp(x, xp, fp))


def _pointwise_scale_at(state: MetricState, x: float) -> float:
    if state.kind == CONFORMAL:
        return math.exp(2.0 * sample_field(state.grid, state.phi, x))
    if state.kind == SCALED:
        return float(state.scale)
    return 1.0


def meridian_path_energy(metric_at: Callable[[float], MetricState],
                         x_start: float, t_start: float,
                         x_end: float, t_end: float,
                         num_samples: int = 256) -> float:
    """Energy ``int |dgamma/dt|^2_{g(t)} dt`` of the constant-speed
    coordinate path from ``(x_start, t_start)`` to ``(x_end, t_end)``.

    ``metric_at`` maps a time to the metric state at that time.  The path
    moves linearly in the coordinate, so its squared speed is the pointwise
    metric factor times ``((x_end - x_start) / (t_end - t_start))^2``.
    Simpson quadrature in time on ``num_samples + 1`` uniform samples.
    """
    if not t_end > t_start:
        raise ValueError(f"need t_end > t_start, got [{t_start}, {t_end}]")
    if num_samples < 2:
        raise ValueError("num_samples must be at least 2")
    times = np.linspace(t_start, t_end, num_samples + 1)
    speed = (x_end - x_start) / (t_end - t_start)
    vals = np.empty_like(times)
    for i, t in enumerate(times):
        x = x_start + speed * (t - t_start)
        vals[i] = _pointwise_scale_at(metric_at(float(t)), x) * speed * speed
    return float(simpson(vals, x=times))
