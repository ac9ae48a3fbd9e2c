"""Coordinate charts, finite-difference curvature, volumes and integrals.

A :class:`MetricChart` is a single coordinate box covering the manifold up to a
measure-zero set.  Curvature comes either from an analytic supplier (built-in
metrics) or from fourth-order central differences of the metric components,
expressed in the orthonormal frame obtained by Gram-Schmidt on the coordinate
basis in coordinate order.

Scaling laws under ``rescale(chart, lam)`` (metric multiplied by ``lam``):

* frame curvature components, sectional and biorthogonal curvatures and the
  scalar curvature scale by ``1/lam``; ``|Rm|`` scales by ``1/lam``,
* the volume element scales by ``lam**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from . import expr as ex
from .frame_algebra import AlgCurvTensor, project_algebraic

__all__ = [
    "GeometryError",
    "StencilError",
    "NotPositiveDefiniteError",
    "QuadratureConvergenceError",
    "HomogeneityError",
    "MetricChart",
    "QuadratureGrid",
    "make_grid",
    "curvature_at",
    "curvature_batch",
    "frame_batch",
    "volume",
    "integrate",
    "rescale",
    "conformal_change",
    "interior_samples",
    "scalar_derivatives",
    "FD_REL_STEP",
]

FD_REL_STEP = 5e-4
HOMOGENEITY_SAMPLES = 32
_BATCH = 1024


class GeometryError(ValueError):
    pass


class StencilError(GeometryError):
    pass


class NotPositiveDefiniteError(GeometryError):
    pass


class QuadratureConvergenceError(ArithmeticError):
    pass


class HomogeneityError(ArithmeticError):
    pass


MetricFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MetricChart:
    """Metric ``g(x)`` on a coordinate box.

    ``metric`` maps points of shape ``(..., 4)`` to ``(..., 4, 4)``.
    ``active_axes`` lists the coordinates ``g`` actually depends on; the
    others are integrated exactly.  ``analytic_curvature`` (built-ins only)
    returns orthonormal-frame components of shape ``(..., 4, 4, 4, 4)`` in the
    Gram-Schmidt frame.
    """

    name: str
    coords: tuple[str, str, str, str]
    domain: tuple[tuple[float, float], ...]
    periodic: tuple[bool, bool, bool, bool]
    metric: MetricFn = field(repr=False, compare=False)
    active_axes: frozenset[int] = frozenset(range(4))
    analytic_curvature: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False, compare=False)
    sqrt_det: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False, compare=False)
    homogeneous: bool = False
    exact_volume: float | None = None
    chi: int | None = None
    tau: int | None = None
    simply_connected: bool | None = None
    params: tuple[tuple[str, float], ...] = ()
    scale: float = 1.0

    @property
    def spans(self) -> np.ndarray:
        return np.array([b - a for a, b in self.domain])

    @property
    def fd_steps(self) -> np.ndarray:
        return FD_REL_STEP * self.spans

    def g(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return self.metric(pts)

    def descriptor(self) -> dict:
        return {
            "name": self.name,
            "params": {k: v for k, v in self.params},
            "scale": self.scale,
            "coords": list(self.coords),
            "domain": [list(iv) for iv in self.domain],
            "periodic": list(self.periodic),
            "homogeneous": self.homogeneous,
        }


# -- finite differences ------------------------------------------------------

_D1 = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))
_D2 = ((-2, -1.0 / 12), (-1, 16.0 / 12), (0, -30.0 / 12), (1, 16.0 / 12), (2, -1.0 / 12))


def _stencil(active: Sequence[int]):
    """Offsets (in units of h) and the weights of every derivative."""
    offsets: list[tuple[int, int, int, int]] = [(0, 0, 0, 0)]
    index = {(0, 0, 0, 0): 0}

    def slot(off):
        if off not in index:
            index[off] = len(offsets)
            offsets.append(off)
        return index[off]

    first = {}
    second = {}
    for a in active:
        terms = []
        for k, c in _D1:
            off = [0, 0, 0, 0]
            off[a] = k
            terms.append((slot(tuple(off)), c))
        first[a] = terms
        terms = []
        for k, c in _D2:
            off = [0, 0, 0, 0]
            off[a] = k
            terms.append((slot(tuple(off)), c))
        second[(a, a)] = terms
    for ia, a in enumerate(active):
        for b in active[ia + 1 :]:
            terms = []
            for ka, ca in _D1:
                for kb, cb in _D1:
                    off = [0, 0, 0, 0]
                    off[a] = ka
                    off[b] = kb
                    terms.append((slot(tuple(off)), ca * cb))
            second[(a, b)] = terms
    return np.array(offsets, dtype=float), first, second


def _steps(chart: MetricChart, points: np.ndarray) -> np.ndarray:
    """Per-point finite-difference steps, shrunk so stencils stay inside the box."""
    h = np.broadcast_to(FD_REL_STEP * chart.spans, points.shape).copy()
    for k, ((a, b), per) in enumerate(zip(chart.domain, chart.periodic)):
        if per or k not in chart.active_axes:
            continue
        x = points[:, k]
        if np.any(x <= a) or np.any(x >= b):
            raise StencilError(
                f"point outside the open interval ({a}, {b}) of coordinate {chart.coords[k]!r}"
            )
        h[:, k] = np.minimum(h[:, k], np.minimum(x - a, b - x) / 3.0)
    return h


def _derivatives(func, points: np.ndarray, h: np.ndarray, active: Sequence[int], check_pd: bool = False):
    """Value, first and second derivatives of ``func`` at each point.

    ``func`` maps ``(..., 4)`` to ``(...,) + shape``.  Derivatives along
    inactive axes are exactly zero and are not sampled.
    """
    active = sorted(active)
    offsets, first, second = _stencil(active)
    pts = points[:, None, :] + offsets[None, :, :] * h[:, None, :]
    vals = func(pts)
    if check_pd:
        try:
            np.linalg.cholesky(vals)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError("metric is not positive definite on the stencil") from None
    shape = vals.shape[2:]
    n = points.shape[0]
    d1 = np.zeros((n, 4) + shape)
    d2 = np.zeros((n, 4, 4) + shape)
    extra = (slice(None),) + (None,) * len(shape)
    for a, terms in first.items():
        d1[:, a] = sum(c * vals[:, s] for s, c in terms) / h[:, a][extra]
    for (a, b), terms in second.items():
        v = sum(c * vals[:, s] for s, c in terms) / (h[:, a] * h[:, b])[extra]
        d2[:, a, b] = v
        d2[:, b, a] = v
    return vals[:, 0], d1, d2


def frame_batch(chart: MetricChart, points) -> np.ndarray:
    """Gram-Schmidt orthonormal frames; column ``a`` of each matrix is ``e_a``."""
    g = chart.g(np.asarray(points, dtype=float))
    try:
        low = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("metric is not positive definite") from None
    return np.swapaxes(np.linalg.inv(low), -1, -2)


def _fd_curvature(chart: MetricChart, points: np.ndarray) -> np.ndarray:
    h = _steps(chart, points)
    g, dg, ddg = _derivatives(chart.metric, points, h, sorted(chart.active_axes), check_pd=True)
    ginv = np.linalg.inv(g)
    # Gamma_{k,ij} = (d_i g_jk + d_j g_ik - d_k g_ij) / 2
    gam_low = 0.5 * (
        np.einsum("nijk->nkij", dg) + np.einsum("njik->nkij", dg) - dg
    )
    gam_up = np.einsum("nmk,nkij->nmij", ginv, gam_low)
    # R_abcd = (g_ad,bc + g_bc,ad - g_ac,bd - g_bd,ac)/2
    #          + Gamma_{f,bc} Gamma^f_ad - Gamma_{f,bd} Gamma^f_ac
    second = 0.5 * (
        np.einsum("nbcad->nabcd", ddg)
        + np.einsum("nadbc->nabcd", ddg)
        - np.einsum("nbdac->nabcd", ddg)
        - np.einsum("nacbd->nabcd", ddg)
    )
    quad = np.einsum("nfbc,nfad->nabcd", gam_low, gam_up) - np.einsum("nfbd,nfac->nabcd", gam_low, gam_up)
    r_coord = second + quad
    low = np.linalg.cholesky(g)
    e = np.swapaxes(np.linalg.inv(low), -1, -2)
    r_frame = np.einsum("nia,njb,nkc,nld,nijkl->nabcd", e, e, e, e, r_coord, optimize=True)
    return project_algebraic(r_frame)


def curvature_batch(chart: MetricChart, points, use_analytic: bool = True) -> np.ndarray:
    """Frame curvature components at each of ``points`` (shape ``(N, 4)``)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if use_analytic and chart.analytic_curvature is not None:
        return np.asarray(chart.analytic_curvature(pts))
    out = [_fd_curvature(chart, pts[i : i + _BATCH]) for i in range(0, len(pts), _BATCH)]
    return np.concatenate(out, axis=0) if out else np.zeros((0, 4, 4, 4, 4))


def curvature_at(chart: MetricChart, point, use_analytic: bool = True) -> AlgCurvTensor:
    """Curvature tensor at one point in the Gram-Schmidt orthonormal frame."""
    return AlgCurvTensor(curvature_batch(chart, np.asarray(point, dtype=float)[None, :], use_analytic)[0])


def scalar_derivatives(chart: MetricChart, func, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Laplacian, squared gradient norm and value of a scalar field.

    ``func`` maps ``(..., 4)`` to ``(...)``.  Uses the same central-difference
    stencil as the curvature; ``lap = g^ij (d_i d_j f - Gamma^k_ij d_k f)``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    h = _steps(chart, pts)
    axes = sorted(chart.active_axes)
    f, df, ddf = _derivatives(func, pts, h, axes)
    g, dg, _ = _derivatives(chart.metric, pts, h, axes)
    ginv = np.linalg.inv(g)
    gam_low = 0.5 * (np.einsum("nijk->nkij", dg) + np.einsum("njik->nkij", dg) - dg)
    gam_up = np.einsum("nmk,nkij->nmij", ginv, gam_low)
    hess = ddf - np.einsum("nkij,nk->nij", gam_up, df)
    lap = np.einsum("nij,nij->n", ginv, hess)
    grad2 = np.einsum("nij,ni,nj->n", ginv, df, df)
    return lap, grad2, f


# -- quadrature --------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product rule: Gauss-Legendre on open axes, midpoint-trapezoid on periodic ones."""

    nodes_per_axis: tuple[int, int, int, int]
    rules: tuple[str, str, str, str]
    axis_nodes: tuple[np.ndarray, ...] = field(repr=False, compare=False)
    axis_weights: tuple[np.ndarray, ...] = field(repr=False, compare=False)

    @property
    def size(self) -> int:
        return int(np.prod(self.nodes_per_axis))

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axis_nodes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def base_weights(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axis_weights, indexing="ij")
        return (mesh[0] * mesh[1] * mesh[2] * mesh[3]).ravel()

    def weights(self, chart: MetricChart) -> np.ndarray:
        """Quadrature weights including the volume density."""
        pts = self.points()
        if chart.sqrt_det is not None:
            dens = chart.sqrt_det(pts)
        else:
            dens = np.concatenate(
                [np.sqrt(np.linalg.det(chart.g(pts[i : i + 65536]))) for i in range(0, len(pts), 65536)]
            )
        return self.base_weights() * dens

    def spec(self) -> dict:
        return {"nodes_per_axis": list(self.nodes_per_axis), "rules": list(self.rules)}


def make_grid(chart: MetricChart, n: int) -> QuadratureGrid:
    """Grid with ``n`` nodes on every axis the metric depends on, one elsewhere."""
    if n < 1:
        raise ValueError("grid resolution must be positive")
    nodes, weights, counts, rules = [], [], [], []
    for k, ((a, b), per) in enumerate(zip(chart.domain, chart.periodic)):
        span = b - a
        if k not in chart.active_axes:
            nodes.append(np.array([a + 0.5 * span]))
            weights.append(np.array([span]))
            counts.append(1)
            rules.append("constant")
        elif per:
            nodes.append(a + (np.arange(n) + 0.5) * span / n)
            weights.append(np.full(n, span / n))
            counts.append(n)
            rules.append("trapezoid")
        else:
            x, w = np.polynomial.legendre.leggauss(n)
            nodes.append(a + 0.5 * span * (x + 1.0))
            weights.append(0.5 * span * w)
            counts.append(n)
            rules.append("gauss-legendre")
    return QuadratureGrid(tuple(counts), tuple(rules), tuple(nodes), tuple(weights))


def _as_grid(chart: MetricChart, grid) -> QuadratureGrid:
    return grid if isinstance(grid, QuadratureGrid) else make_grid(chart, int(grid))


def _quad_volume(chart: MetricChart, n: int) -> float:
    return float(np.sum(make_grid(chart, n).weights(chart)))


def volume(chart: MetricChart, grid=16, rtol: float = 1e-6) -> float:
    """Riemannian volume; closed form for homogeneous built-ins.

    Otherwise tensor-product quadrature at ``n`` and ``2n`` nodes per active
    axis, raising :class:`QuadratureConvergenceError` if they disagree by more
    than ``rtol`` relative.
    """
    if chart.homogeneous and chart.exact_volume is not None:
        return float(chart.exact_volume)
    n = max(grid.nodes_per_axis) if isinstance(grid, QuadratureGrid) else int(grid)
    if n < 8 and chart.active_axes:
        raise ValueError("volume quadrature needs at least 8 nodes per axis")
    coarse = _quad_volume(chart, n)
    if not chart.active_axes:
        return coarse
    fine = _quad_volume(chart, 2 * n)
    if abs(fine - coarse) > rtol * abs(fine):
        raise QuadratureConvergenceError(
            f"volume quadrature not converged: n={n} gives {coarse!r}, n={2 * n} gives {fine!r}"
        )
    return fine


def interior_samples(chart: MetricChart, count: int, seed: int = 0, margin: float = 0.05) -> np.ndarray:
    """Deterministic scrambled-Sobol points away from non-periodic ends."""
    sampler = qmc.Sobol(d=4, scramble=True, seed=seed)
    m = int(math.ceil(math.log2(max(count, 1))))
    u = sampler.random_base2(m)[:count]
    lo = np.array([a for a, _ in chart.domain], dtype=float)
    span = chart.spans
    pad = np.array([0.0 if per else margin for per in chart.periodic])
    return lo + span * (pad + (1.0 - 2.0 * pad) * u)


def integrate(
    chart: MetricChart,
    field_fn: Callable[[np.ndarray], np.ndarray],
    grid=16,
    fast_path: bool = True,
) -> float:
    """Integral of a scalar field ``field_fn(points) -> values`` against ``dV_g``.

    Homogeneous charts sample the field at 32 interior points, require it to
    be constant to ``1e-8 * (1 + |mean|)`` and return ``mean * volume``.
    """
    if fast_path and chart.homogeneous:
        pts = interior_samples(chart, HOMOGENEITY_SAMPLES, seed=1)
        vals = np.asarray(field_fn(pts), dtype=float)
        mean = float(np.mean(vals))
        dev = float(np.max(np.abs(vals - mean)))
        if dev >= 1e-8 * (1.0 + abs(mean)):
            raise HomogeneityError(f"field varies by {dev:.3e} on a chart flagged homogeneous")
        return mean * volume(chart, grid)
    g = _as_grid(chart, grid)
    pts = g.points()
    vals = np.asarray(field_fn(pts), dtype=float)
    return float(np.sum(vals * g.weights(chart)))


# -- transformations ---------------------------------------------------------


def rescale(chart: MetricChart, lam: float) -> MetricChart:
    """Metric multiplied by ``lam > 0``."""
    if not lam > 0:
        raise ValueError("scale factor must be positive")
    if lam == 1.0:
        return chart
    base_metric, base_curv, base_dens = chart.metric, chart.analytic_curvature, chart.sqrt_det
    return replace(
        chart,
        metric=lambda x: lam * base_metric(x),
        analytic_curvature=None if base_curv is None else (lambda x: base_curv(x) / lam),
        sqrt_det=None if base_dens is None else (lambda x: lam**2 * base_dens(x)),
        exact_volume=None if chart.exact_volume is None else lam**2 * chart.exact_volume,
        scale=chart.scale * lam,
    )


def conformal_change(chart: MetricChart, phi) -> MetricChart:
    """The chart of ``exp(2 phi) g``; curvature is recomputed by finite differences."""
    if isinstance(phi, str):
        phi = ex.parse(phi, chart.coords)
    deps = ex.free_variables(phi)
    base_metric, base_dens = chart.metric, chart.sqrt_det

    def metric(x):
        return np.exp(2.0 * ex.evaluate(phi, x))[..., None, None] * base_metric(x)

    dens = None
    if base_dens is not None:
        dens = lambda x: np.exp(4.0 * ex.evaluate(phi, x)) * base_dens(x)  # noqa: E731
    constant = not deps
    exact = None
    if constant and chart.exact_volume is not None:
        exact = math.exp(4.0 * ex.evaluate(phi, np.zeros(4))) * chart.exact_volume
    return replace(
        chart,
        name=f"{chart.name}*exp(2*({ex.pretty(phi)}))",
        metric=metric,
        active_axes=chart.active_axes | deps,
        analytic_curvature=None,
        sqrt_det=dens,
        homogeneous=chart.homogeneous and constant,
        exact_volume=exact,
    )
