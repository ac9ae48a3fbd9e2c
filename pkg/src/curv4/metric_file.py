"""TOML metric files.

Example::

    [chart]
    name = "warped"
    coords = ["x", "y", "z", "w"]
    domain = [[0, 1], [0, 1], [0, 1], [0, "2*pi"]]
    periodic = [true, true, true, true]

    [metric]
    g11 = "exp(0.2*sin(2*pi*x))"
    g22 = "1"
    g33 = "1"
    g44 = "1"
    g12 = "0.1*cos(2*pi*x)"

Off-diagonal entries may be given as ``gij`` or ``gji`` and default to 0;
all four diagonal entries are required.  Domain ends may be numbers or
constant expressions.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import expr as ex
from .geometry import GeometryError, MetricChart, interior_samples

__all__ = ["MetricFileError", "load_metric_toml", "chart_from_expressions"]


class MetricFileError(GeometryError):
    pass


def _const(value, where: str) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        try:
            ast = ex.parse(value, ())
        except ex.ExprSyntaxError as exc:
            raise MetricFileError(f"{where}: {exc}") from None
        if ex.free_variables(ast):
            raise MetricFileError(f"{where}: domain ends must be constant")
        return float(ex.evaluate(ast, np.zeros(4)))
    raise MetricFileError(f"{where}: expected a number or expression string, got {value!r}")


def chart_from_expressions(
    entries: dict[tuple[int, int], str],
    coords=("x1", "x2", "x3", "x4"),
    domain=((0.0, 1.0),) * 4,
    periodic=(True, True, True, True),
    name: str = "user",
    homogeneous: bool = False,
) -> MetricChart:
    """Chart whose components are expressions keyed by 0-based ``(i, j)``, ``i <= j``."""
    asts: dict[tuple[int, int], ex.Expr] = {}
    for (i, j), text in entries.items():
        key = (min(i, j), max(i, j))
        try:
            asts[key] = ex.parse(str(text), coords)
        except ex.ExprSyntaxError as exc:
            raise MetricFileError(f"g{key[0] + 1}{key[1] + 1}: {exc}") from None
    for k in range(4):
        if (k, k) not in asts:
            raise MetricFileError(f"missing diagonal entry g{k + 1}{k + 1}")
    deps = frozenset().union(*(ex.free_variables(a) for a in asts.values()))

    def metric(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (4, 4))
        for (i, j), ast in asts.items():
            try:
                v = ex.evaluate(ast, x)
            except ex.ExprDomainError as exc:
                raise GeometryError(f"g{i + 1}{j + 1}: {exc}") from None
            out[..., i, j] = v
            out[..., j, i] = v
        return out

    chart = MetricChart(
        name=name,
        coords=tuple(coords),
        domain=tuple((float(a), float(b)) for a, b in domain),
        periodic=tuple(bool(p) for p in periodic),
        metric=metric,
        active_axes=deps,
        homogeneous=homogeneous,
    )
    _check_chart(chart)
    return chart


def _check_chart(chart: MetricChart, samples: int = 256):
    for k, (a, b) in enumerate(chart.domain):
        if not b > a:
            raise MetricFileError(f"domain interval {k + 1} is empty: [{a}, {b}]")
    pts = interior_samples(chart, samples, seed=7, margin=0.01)
    g = chart.g(pts)
    if np.min(np.linalg.eigvalsh(g)) <= 0:
        raise MetricFileError("metric is not positive definite at a sampled domain point")
    for k, ((a, b), per) in enumerate(zip(chart.domain, chart.periodic)):
        if not per:
            continue
        lo, hi = pts.copy(), pts.copy()
        lo[:, k], hi[:, k] = a, b
        ga, gb = chart.g(lo), chart.g(hi)
        if np.max(np.abs(ga - gb)) > 1e-9 * (1.0 + np.max(np.abs(ga))):
            raise MetricFileError(
                f"coordinate {chart.coords[k]!r} is marked periodic but the metric differs at its ends"
            )


def load_metric_toml(path=None, text: str | None = None) -> MetricChart:
    """Load a chart from a TOML file (or from ``text``)."""
    if text is None:
        text = Path(path).read_text()
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise MetricFileError(f"invalid TOML: {exc}") from None
    chart_tbl = doc.get("chart")
    metric_tbl = doc.get("metric")
    if not isinstance(chart_tbl, dict) or not isinstance(metric_tbl, dict):
        raise MetricFileError("metric file needs [chart] and [metric] tables")
    coords = chart_tbl.get("coords", ["x1", "x2", "x3", "x4"])
    domain = chart_tbl.get("domain")
    periodic = chart_tbl.get("periodic", [False] * 4)
    if len(coords) != 4 or domain is None or len(domain) != 4 or len(periodic) != 4:
        raise MetricFileError("[chart] needs 4 coords, 4 domain intervals and 4 periodic flags")
    dom = []
    for k, iv in enumerate(domain):
        if len(iv) != 2:
            raise MetricFileError(f"domain[{k}] must be [a, b]")
        dom.append((_const(iv[0], f"domain[{k}][0]"), _const(iv[1], f"domain[{k}][1]")))
    entries: dict[tuple[int, int], str] = {}
    for key, value in metric_tbl.items():
        if len(key) != 3 or key[0] != "g" or key[1] not in "1234" or key[2] not in "1234":
            raise MetricFileError(f"unknown metric key {key!r} (expected g11 .. g44)")
        i, j = int(key[1]) - 1, int(key[2]) - 1
        slot = (min(i, j), max(i, j))
        if slot in entries:
            raise MetricFileError(f"metric entry g{slot[0] + 1}{slot[1] + 1} given twice")
        if isinstance(value, bool) or not isinstance(value, (str, int, float)):
            raise MetricFileError(f"{key}: expected an expression string or number")
        entries[slot] = str(value)
    name = str(chart_tbl.get("name", Path(path).stem if path is not None else "user"))
    return chart_from_expressions(
        entries,
        coords=tuple(str(c) for c in coords),
        domain=tuple(dom),
        periodic=tuple(bool(p) for p in periodic),
        name=name,
        homogeneous=bool(chart_tbl.get("homogeneous", False)),
    )
