"""Curvature sampled on quadrature nodes, with integration and a convergence check."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .frame_algebra import decompose_arrays
from .geometry import (
    HOMOGENEITY_SAMPLES,
    HomogeneityError,
    MetricChart,
    QuadratureConvergenceError,
    curvature_batch,
    interior_samples,
    make_grid,
    volume,
)

__all__ = ["CurvatureNodes", "curvature_nodes", "converged_integrals", "CONVERGENCE_RTOL"]

CONVERGENCE_RTOL = 1e-4


@dataclass(frozen=True)
class CurvatureNodes:
    """Frame curvature tensors at integration nodes.

    For homogeneous charts the nodes are a few interior samples, each
    weighted ``volume / count``; integrands must then be constant.
    """

    chart: MetricChart
    points: np.ndarray
    weights: np.ndarray
    tensors: np.ndarray
    dec: dict
    homogeneous: bool
    grid_n: int
    cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def volume(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, values) -> float:
        values = np.asarray(values, dtype=float)
        if self.homogeneous:
            mean = float(np.mean(values))
            dev = float(np.max(np.abs(values - mean)))
            if dev >= 1e-8 * (1.0 + abs(mean)):
                raise HomogeneityError(f"field varies by {dev:.3e} on a chart flagged homogeneous")
        return float(np.sum(values * self.weights))


def curvature_nodes(chart: MetricChart, grid: int = 16, fast_path: bool = True) -> CurvatureNodes:
    if fast_path and chart.homogeneous:
        pts = interior_samples(chart, HOMOGENEITY_SAMPLES, seed=1)
        w = np.full(len(pts), volume(chart, grid) / len(pts))
        homogeneous = True
    else:
        g = make_grid(chart, grid)
        pts = g.points()
        w = g.weights(chart)
        homogeneous = False
    tensors = curvature_batch(chart, pts)
    return CurvatureNodes(chart, pts, w, tensors, decompose_arrays(tensors), homogeneous, int(grid))


def converged_integrals(
    chart: MetricChart,
    grid: int,
    integrands: Callable[[CurvatureNodes], dict],
    rtol: float = CONVERGENCE_RTOL,
) -> tuple[dict, CurvatureNodes]:
    """Integrals of named node fields at ``grid``, checked against ``grid // 2``.

    Homogeneous charts are exact and skip the check.  A mismatch larger than
    ``rtol * (1 + integral of |f|)`` raises :class:`QuadratureConvergenceError`.
    """
    nodes = curvature_nodes(chart, grid)
    fields = integrands(nodes)
    out = {k: nodes.integrate(v) for k, v in fields.items()}
    if nodes.homogeneous or grid // 2 < 4:
        return out, nodes
    coarse = curvature_nodes(chart, grid // 2)
    cfields = integrands(coarse)
    for k, v in fields.items():
        scale = 1.0 + nodes.integrate(np.abs(v))
        diff = abs(out[k] - coarse.integrate(cfields[k]))
        if diff > rtol * scale:
            raise QuadratureConvergenceError(
                f"integral {k!r} changes by {diff:.3e} between grid {grid // 2} and {grid}; try a larger grid"
            )
    return out, nodes
