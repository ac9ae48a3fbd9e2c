"""Built-in metrics with closed-form curvature, volume and topology.

=============  =========================================  ===========  ====  ===
name           chart                                      volume       chi   tau
=============  =========================================  ===========  ====  ===
s4             hyperspherical angles (chi1, chi2, chi3,   8 pi^2 r^4/3   2     0
               phi)
s2xs2          (theta1, phi1, theta2, phi2)               16 pi^2 ...    4     0
cp2            (rho, theta, psi, phi), Fubini-Study with  pi^2/2 * k^2   3     1
               holomorphic sectional curvature 4/k
flat-t4        (x1, x2, x3, x4) on a box of periods       L1 L2 L3 L4    0     0
s1xs3          (t, chi, theta, phi)                       4 pi^3 ...     0     0
=============  =========================================  ===========  ====  ===

The ``cp2`` chart writes the metric as
``d rho^2 + sin^2 rho (s1^2 + s2^2)/4 + sin^2 rho cos^2 rho s3^2/4`` with
left-invariant forms ``s1^2 + s2^2 = d theta^2 + sin^2 theta d phi^2`` and
``s3 = d psi + cos theta d phi``.  The coordinate order is chosen so that the
chart orientation agrees with the complex orientation of the affine chart
``z1 = tan rho cos(theta/2) e^{i(psi+phi)/2}``,
``z2 = tan rho sin(theta/2) e^{i(psi-phi)/2}``; with it the Kahler form is
self-dual and the signature is +1.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Callable

import numpy as np

from . import frame_algebra as fa
from .geometry import MetricChart, frame_batch, rescale

__all__ = [
    "round_s4",
    "product_s2s2",
    "fubini_study_cp2",
    "flat_t4",
    "product_s1s3",
    "BUILTINS",
    "builtin",
    "UnknownMetricError",
    "FAMILIES",
    "family_member",
]

PI = math.pi


class UnknownMetricError(KeyError):
    pass


def _diag(*entries: Callable[[np.ndarray], np.ndarray]):
    def metric(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (4, 4))
        for k, f in enumerate(entries):
            out[..., k, k] = f(x)
        return out

    return metric


def _const_curv(comps: np.ndarray):
    comps = np.array(comps)

    def supplier(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(comps, x.shape[:-1] + (4, 4, 4, 4)).copy()

    return supplier


def round_s4(r: float = 1.0) -> MetricChart:
    r2 = r * r
    metric = _diag(
        lambda x: np.full(x.shape[:-1], r2),
        lambda x: r2 * np.sin(x[..., 0]) ** 2,
        lambda x: r2 * (np.sin(x[..., 0]) * np.sin(x[..., 1])) ** 2,
        lambda x: r2 * (np.sin(x[..., 0]) * np.sin(x[..., 1]) * np.sin(x[..., 2])) ** 2,
    )
    return MetricChart(
        name="s4",
        coords=("chi1", "chi2", "chi3", "phi"),
        domain=((0.0, PI), (0.0, PI), (0.0, PI), (0.0, 2 * PI)),
        periodic=(False, False, False, True),
        metric=metric,
        active_axes=frozenset({0, 1, 2}),
        analytic_curvature=_const_curv(fa.constant_curvature(1.0 / r2).comps),
        sqrt_det=lambda x: r2 * r2 * np.sin(x[..., 0]) ** 3 * np.sin(x[..., 1]) ** 2 * np.sin(x[..., 2]),
        homogeneous=True,
        exact_volume=8.0 * PI**2 * r2 * r2 / 3.0,
        chi=2,
        tau=0,
        simply_connected=True,
        params=(("r", float(r)),),
    )


def product_s2s2(r1: float = 1.0, r2: float = 1.0) -> MetricChart:
    a, b = r1 * r1, r2 * r2
    metric = _diag(
        lambda x: np.full(x.shape[:-1], a),
        lambda x: a * np.sin(x[..., 0]) ** 2,
        lambda x: np.full(x.shape[:-1], b),
        lambda x: b * np.sin(x[..., 2]) ** 2,
    )
    return MetricChart(
        name="s2xs2",
        coords=("theta1", "phi1", "theta2", "phi2"),
        domain=((0.0, PI), (0.0, 2 * PI), (0.0, PI), (0.0, 2 * PI)),
        periodic=(False, True, False, True),
        metric=metric,
        active_axes=frozenset({0, 2}),
        analytic_curvature=_const_curv(fa.product_s2s2(r1, r2).comps),
        sqrt_det=lambda x: a * b * np.abs(np.sin(x[..., 0]) * np.sin(x[..., 2])),
        homogeneous=True,
        exact_volume=16.0 * PI**2 * a * b,
        chi=4,
        tau=0,
        simply_connected=True,
        params=(("r1", float(r1)), ("r2", float(r2))),
    )


def _cp2_metric(x):
    x = np.asarray(x, dtype=float)
    rho, th = x[..., 0], x[..., 1]
    sr, cr = np.sin(rho), np.cos(rho)
    a = 0.25 * sr**2
    c = 0.25 * (sr * cr) ** 2
    ct, st = np.cos(th), np.sin(th)
    out = np.zeros(x.shape[:-1] + (4, 4))
    # order (rho, theta, psi, phi); s3 = d psi + cos(theta) d phi
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = a
    out[..., 2, 2] = c
    out[..., 2, 3] = out[..., 3, 2] = c * ct
    out[..., 3, 3] = a * st**2 + c * ct**2
    return out


def _cp2_affine_jacobian(x):
    """Real Jacobian of the chart -> affine C^2 map, columns (rho, theta, psi, phi)."""
    rho, th, psi, ph = (x[..., k] for k in range(4))
    al, be = 0.5 * (psi + ph), 0.5 * (psi - ph)
    t = np.tan(rho)
    sec2 = 1.0 / np.cos(rho) ** 2
    c, s = np.cos(0.5 * th), np.sin(0.5 * th)
    e1, e2 = np.exp(1j * al), np.exp(1j * be)
    z1, z2 = t * c * e1, t * s * e2
    d1 = [sec2 * c * e1, -0.5 * t * s * e1, 0.5j * z1, 0.5j * z1]
    d2 = [sec2 * s * e2, 0.5 * t * c * e2, 0.5j * z2, -0.5j * z2]
    rows = [[v.real for v in d1], [v.imag for v in d1], [v.real for v in d2], [v.imag for v in d2]]
    return np.moveaxis(np.array(rows), (0, 1), (-2, -1))


_J0 = np.array([[0.0, -1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, -1.0], [0.0, 0.0, 1.0, 0.0]])


def _cp2_curvature(chart_ref: list):
    def supplier(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        chart = chart_ref[0]
        e = frame_batch(chart, x)
        d = _cp2_affine_jacobian(x)
        # complex structure in chart coordinates, then j_ab = g(J e_a, e_b)
        jc = np.linalg.solve(d, _J0 @ d)
        g = chart.g(x)
        je = jc @ e
        j = np.einsum("nia,nij,njb->nab", je, g, e)
        return np.stack([fa.kahler_constant_holomorphic(jj, hol=4.0).comps for jj in j])

    return supplier


def fubini_study_cp2(scale: float = 1.0) -> MetricChart:
    """Fubini-Study metric times ``scale``; ``scale=1`` has ``s = 24``."""
    ref: list = []
    chart = MetricChart(
        name="cp2",
        coords=("rho", "theta", "psi", "phi"),
        domain=((0.0, PI / 2), (0.0, PI), (0.0, 4 * PI), (0.0, 2 * PI)),
        periodic=(False, False, True, True),
        metric=_cp2_metric,
        active_axes=frozenset({0, 1}),
        analytic_curvature=_cp2_curvature(ref),
        sqrt_det=lambda x: 0.125 * np.sin(x[..., 0]) ** 3 * np.cos(x[..., 0]) * np.abs(np.sin(x[..., 1])),
        homogeneous=True,
        exact_volume=PI**2 / 2.0,
        chi=3,
        tau=1,
        simply_connected=True,
        params=(("scale", float(scale)),),
    )
    ref.append(chart)
    return rescale(chart, scale) if scale != 1.0 else chart


def flat_t4(l1: float = 1.0, l2: float = 1.0, l3: float = 1.0, l4: float = 1.0) -> MetricChart:
    periods = (l1, l2, l3, l4)

    def metric(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(4), x.shape[:-1] + (4, 4)).copy()

    return MetricChart(
        name="flat-t4",
        coords=("x1", "x2", "x3", "x4"),
        domain=tuple((0.0, float(p)) for p in periods),
        periodic=(True, True, True, True),
        metric=metric,
        active_axes=frozenset(),
        analytic_curvature=_const_curv(np.zeros((4, 4, 4, 4))),
        sqrt_det=lambda x: np.ones(np.asarray(x).shape[:-1]),
        homogeneous=True,
        exact_volume=float(np.prod(periods)),
        chi=0,
        tau=0,
        simply_connected=False,
        params=tuple((f"l{k + 1}", float(p)) for k, p in enumerate(periods)),
    )


def product_s1s3(r1: float = 1.0, r2: float = 1.0) -> MetricChart:
    a, b = r1 * r1, r2 * r2
    metric = _diag(
        lambda x: np.full(x.shape[:-1], a),
        lambda x: np.full(x.shape[:-1], b),
        lambda x: b * np.sin(x[..., 1]) ** 2,
        lambda x: b * (np.sin(x[..., 1]) * np.sin(x[..., 2])) ** 2,
    )
    return MetricChart(
        name="s1xs3",
        coords=("t", "chi", "theta", "phi"),
        domain=((0.0, 2 * PI), (0.0, PI), (0.0, PI), (0.0, 2 * PI)),
        periodic=(True, False, False, True),
        metric=metric,
        active_axes=frozenset({1, 2}),
        analytic_curvature=_const_curv(fa.product_s1s3(r2).comps),
        sqrt_det=lambda x: r1 * b * r2 * np.sin(x[..., 1]) ** 2 * np.abs(np.sin(x[..., 2])),
        homogeneous=True,
        exact_volume=2 * PI * r1 * 2 * PI**2 * r2**3,
        chi=0,
        tau=0,
        simply_connected=False,
        params=(("r1", float(r1)), ("r2", float(r2))),
    )


BUILTINS: dict[str, Callable[..., MetricChart]] = {
    "s4": round_s4,
    "s2xs2": product_s2s2,
    "cp2": fubini_study_cp2,
    "flat-t4": flat_t4,
    "s1xs3": product_s1s3,
}

_ALIASES = {"t4": "flat-t4", "s1xs3-collapse": "s1xs3"}


def builtin(name: str, **params: float) -> MetricChart:
    key = _ALIASES.get(name, name)
    if key not in BUILTINS:
        raise UnknownMetricError(f"unknown metric {name!r}; known: {', '.join(sorted(BUILTINS))}")
    try:
        return BUILTINS[key](**params)
    except TypeError as exc:
        raise UnknownMetricError(f"bad parameters for {name!r}: {exc}") from None


FAMILIES: dict[str, Callable[[float], MetricChart]] = {
    "s1xs3-collapse": lambda t: replace(product_s1s3(t, 1.0), name="s1xs3-collapse"),
    "flat-t4": lambda t: flat_t4(t, 1.0, 1.0, 1.0),
}


def family_member(family: str, t: float) -> MetricChart:
    if family not in FAMILIES:
        raise UnknownMetricError(f"unknown family {family!r}; known: {', '.join(sorted(FAMILIES))}")
    return FAMILIES[family](t)
