"""Curvature functionals, normalizations and per-metric inequality reports.

Every suite returns a :class:`BoundReport`.  An entry states one inequality
``lhs <= rhs`` or ``lhs >= rhs`` evaluated at the given metric; ``slack`` is
positive when the inequality holds with room to spare.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import expr as ex
from .biorthogonal import seaman_check, sectional_extremes_batch
from .fields import CurvatureNodes, converged_integrals
from .frame_algebra import AlgCurvTensor, decompose_arrays
from .geometry import (
    MetricChart,
    conformal_change,
    curvature_batch,
    interior_samples,
    rescale,
    scalar_derivatives,
)
from .topology import BGSearchError, bg_node_tensors, recover_topology

__all__ = [
    "BoundEntry",
    "BoundReport",
    "FunctionalValues",
    "Survey",
    "Normalization",
    "NormalizationError",
    "survey",
    "kperp_extremes",
    "functional_values",
    "normalize_unit_volume",
    "normalize_sup_kperp",
    "volume_suite",
    "supnorm_suite",
    "lemma_suite",
    "conformal_suite",
    "family_sweep",
    "SUITES",
    "CLOSED_RTOL",
    "QUAD_RTOL",
]

CLOSED_RTOL = 1e-6
QUAD_RTOL = 1e-4
CONFORMAL_RTOL = 1e-4
LAW_TOL = 5e-4
RIGIDITY_TOL = 1e-8
SUP_SAMPLES = 1000
PI2 = math.pi**2


class NormalizationError(ValueError):
    pass


# -- reports -----------------------------------------------------------------


@dataclass(frozen=True)
class BoundEntry:
    name: str
    reference: str
    lhs: float
    rhs: float
    relation: str
    tolerance: float
    note: str = ""

    def __post_init__(self):
        if self.relation not in ("<=", ">="):
            raise ValueError(f"relation must be '<=' or '>=', got {self.relation!r}")

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs if self.relation == "<=" else self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return self.slack >= -self.tolerance

    @property
    def equality(self) -> bool:
        return abs(self.slack) <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "reference": self.reference,
            "lhs": self.lhs,
            "relation": self.relation,
            "rhs": self.rhs,
            "slack": self.slack,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "equality": self.equality,
            "note": self.note,
        }


@dataclass(frozen=True)
class Normalization:
    kind: str
    factor: float
    notice: str = ""

    def as_dict(self) -> dict:
        return {"kind": self.kind, "factor": self.factor, "notice": self.notice}


@dataclass
class BoundReport:
    suite: str
    metric: dict
    normalization: Normalization
    entries: list[BoundEntry] = field(default_factory=list)
    notices: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list[BoundEntry]:
        return [e for e in self.entries if not e.passed]

    def entry(self, name: str) -> BoundEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "metric": self.metric,
            "normalization": self.normalization.as_dict(),
            "pass": self.passed,
            "entries": [e.as_dict() for e in self.entries],
            "notices": list(self.notices),
        }


def _entry(name, reference, lhs, rhs, relation, rtol, note="", atol=1e-12) -> BoundEntry:
    lhs, rhs = float(lhs), float(rhs)
    tol = rtol * max(abs(lhs), abs(rhs)) + atol
    return BoundEntry(name, reference, lhs, rhs, relation, tol, note)


def _pointwise(name, reference, worst, scale, note="") -> BoundEntry:
    """``worst <= 0`` for the largest violation over nodes."""
    return BoundEntry(name, reference, float(worst), 0.0, "<=", 1e-9 * (1.0 + float(scale)), note)


# -- curvature survey --------------------------------------------------------


@dataclass(frozen=True)
class FunctionalValues:
    weyl_func: float
    e1perp: float
    yamabe_mod: float
    r_infinity: float
    sup_abs_kperp: float
    sup_abs_k: float
    vol: float

    def as_dict(self) -> dict:
        return {
            "weyl_func": self.weyl_func,
            "e1perp": self.e1perp,
            "yamabe_mod": self.yamabe_mod,
            "r_infinity": self.r_infinity,
            "sup_abs_kperp": self.sup_abs_kperp,
            "sup_abs_k": self.sup_abs_k,
            "vol": self.vol,
        }


@dataclass(frozen=True)
class Survey:
    """Integrals, node fields and sup-norms of one chart at one grid size."""

    chart: MetricChart
    grid: int
    nodes: CurvatureNodes
    integrals: dict
    node_fields: dict
    sups: dict
    values: FunctionalValues
    bg_ok: bool

    @property
    def homogeneous(self) -> bool:
        return self.nodes.homogeneous


def kperp_extremes(dec: dict) -> tuple[np.ndarray, np.ndarray]:
    k1 = 0.5 * (dec["eig_plus"][..., 0] + dec["eig_minus"][..., 0]) + dec["s"] / 12.0
    k3 = 0.5 * (dec["eig_plus"][..., 2] + dec["eig_minus"][..., 2]) + dec["s"] / 12.0
    return k1, k3


def _node_fields(nodes: CurvatureNodes, with_bg: bool) -> dict:
    d = nodes.dec
    k1, k3 = kperp_extremes(d)
    gap = k3 - k1
    out = {
        "vol": np.ones_like(d["s"]),
        "w2": d["w2"],
        "w_plus2": d["w_plus2"],
        "w_minus2": d["w_minus2"],
        "ric02": d["ric02"],
        "s2_24": d["s"] ** 2 / 24.0,
        "e1perp": (d["s"] - 12.0 * k1) ** 2,
        "k1": k1,
        "k1_sq": k1**2,
        "rm2": d["rm2"],
        "signature_chain": 4.0 * gap + 4.0 / 3.0 * gap**2,
    }
    if with_bg:
        try:
            bg = bg_node_tensors(nodes)
        except BGSearchError:
            return out

        def R(i, j, k, l):
            return bg[:, i - 1, j - 1, k - 1, l - 1]

        kp = [0.5 * (R(a, b, a, b) + R(c, e, c, e)) for a, b, c, e in ((1, 2, 3, 4), (1, 3, 2, 4), (1, 4, 2, 3))]
        out["euler_chain"] = kp[0] ** 2 + kp[1] ** 2 + kp[2] ** 2 + 4.0 / 3.0 * gap**2
        out["euler_lower"] = -0.25 * (
            (R(1, 2, 1, 2) - R(3, 4, 3, 4)) ** 2
            + (R(1, 3, 1, 3) - R(2, 4, 2, 4)) ** 2
            + (R(1, 4, 1, 4) - R(2, 3, 2, 3)) ** 2
        )
    return out


CORE_FIELDS = ("vol", "w2", "e1perp", "k1")


def survey(chart: MetricChart, grid: int = 16, with_bg: bool = False, extra: tuple[str, ...] = ()) -> Survey:
    """Integrate the curvature fields and estimate sup-norms.

    Only :data:`CORE_FIELDS` and the ``extra`` field names are integrated
    (and convergence-checked); all fields stay available per node.  Sups are
    maxima over the integration nodes plus, for non-homogeneous charts, 1000
    deterministic Sobol interior points.  Sectional extremes are exact per
    point.
    """
    keys = CORE_FIELDS + tuple(k for k in extra if k not in CORE_FIELDS)

    def integrands(n):
        f = _node_fields(n, with_bg)
        return {k: f[k] for k in keys if k in f}

    ints, nodes = converged_integrals(chart, grid, integrands)
    fields = _node_fields(nodes, with_bg)
    tensors = nodes.tensors
    dec = nodes.dec
    if not nodes.homogeneous:
        extra = curvature_batch(chart, interior_samples(chart, SUP_SAMPLES, seed=2, margin=0.01))
        tensors = np.concatenate([tensors, extra])
        dec = decompose_arrays(tensors)
    k1, k3 = kperp_extremes(dec)
    kmin, kmax = sectional_extremes_batch(tensors)
    sups = {
        "rm2": float(np.max(dec["rm2"])),
        "abs_kperp": float(max(np.max(np.abs(k1)), np.max(np.abs(k3)))),
        "abs_k": float(max(np.max(np.abs(kmin)), np.max(np.abs(kmax)))),
        "abs_s": float(np.max(np.abs(dec["s"]))),
        "abs_k1": float(np.max(np.abs(k1))),
    }
    vol = ints["vol"]
    values = FunctionalValues(
        weyl_func=ints["w2"],
        e1perp=ints["e1perp"],
        yamabe_mod=12.0 * ints["k1"] / math.sqrt(vol),
        r_infinity=math.sqrt(sups["rm2"]),
        sup_abs_kperp=sups["abs_kperp"],
        sup_abs_k=sups["abs_k"],
        vol=vol,
    )
    return Survey(chart, int(grid), nodes, ints, fields, sups, values, "euler_chain" in fields)


def functional_values(chart: MetricChart, grid: int = 16) -> FunctionalValues:
    return survey(chart, grid).values


# -- normalizations ----------------------------------------------------------


def _unit_volume(chart: MetricChart, grid: int) -> tuple[MetricChart, Normalization]:
    vol = survey(chart, grid).values.vol
    if not vol > 0:
        raise NormalizationError("volume must be positive")
    lam = vol**-0.5
    return rescale(chart, lam), Normalization("unit-volume", lam)


def _sup_kperp(chart: MetricChart, grid: int) -> tuple[MetricChart, Normalization]:
    sup = survey(chart, grid).values.sup_abs_kperp
    if sup == 0.0:
        return chart, Normalization("sup-kperp", 1.0, "sup |K_perp| = 0; normalization skipped")
    return rescale(chart, sup), Normalization("sup-kperp", sup)


def normalize_unit_volume(chart: MetricChart, grid: int = 16) -> MetricChart:
    """Rescale by ``Vol^(-1/2)`` so the volume becomes 1."""
    return _unit_volume(chart, grid)[0]


def normalize_sup_kperp(chart: MetricChart, grid: int = 16) -> MetricChart:
    """Rescale by ``sup |K_perp|`` so the new sup is 1 (no-op, with a warning, if it is 0)."""
    out, norm = _sup_kperp(chart, grid)
    if norm.notice:
        warnings.warn(norm.notice, stacklevel=2)
    return out


# -- topology input ----------------------------------------------------------


def _chi_tau(chart: MetricChart, grid: int, notices: list[str]) -> tuple[float, float]:
    if chart.chi is not None and chart.tau is not None:
        return float(chart.chi), float(chart.tau)
    rep = recover_topology(chart, grid)
    chi = rep.chi.snapped if rep.chi.snapped is not None else rep.chi.value
    tau = rep.tau.snapped if rep.tau.snapped is not None else rep.tau.value
    notices.append(f"chi = {chi}, tau = {tau} recovered from curvature integrals")
    if rep.chi.snapped is None or rep.tau.snapped is None:
        notices.append("recovered chi or tau is not within snapping tolerance of an integer")
    return float(chi), float(tau)


def _rtol(sv: Survey) -> float:
    return CLOSED_RTOL if sv.homogeneous else QUAD_RTOL


# -- suites ------------------------------------------------------------------


def volume_suite(chart: MetricChart, grid: int = 16) -> BoundReport:
    """Volume lower bounds in terms of chi and tau, at the sup |K_perp| = 1 scale."""
    notices: list[str] = []
    chi, tau = _chi_tau(chart, grid, notices)
    norm_chart, norm = _sup_kperp(chart, grid)
    if norm.notice:
        notices.append(norm.notice)
    sv = survey(norm_chart, grid, with_bg=True, extra=("signature_chain", "k1_sq", "euler_chain"))
    if sv.values.sup_abs_kperp > 1.0 + 1e-6:
        raise NormalizationError(f"sup |K_perp| = {sv.values.sup_abs_kperp} > 1 after normalization")
    rt = _rtol(sv)
    vol = sv.values.vol
    ints = sv.integrals
    e: list[BoundEntry] = []
    e.append(_entry("vol-signature", "Vol >= (9 pi^2/20) |tau|  when |K_perp| <= 1", vol, 9 * PI2 / 20 * abs(tau), ">=", CLOSED_RTOL))
    e.append(
        _entry(
            "signature-chain",
            "6 pi^2 |tau| <= int 4 (K3 - K1) + (4/3)(K3 - K1)^2 dV",
            6 * PI2 * abs(tau),
            ints["signature_chain"],
            "<=",
            CLOSED_RTOL,
        )
    )
    e.append(
        _entry("signature-chain-vol", "int 4 (K3 - K1) + (4/3)(K3 - K1)^2 dV <= (40/3) Vol", ints["signature_chain"], 40.0 / 3.0 * vol, "<=", rt)
    )
    if chi > 0:
        e.append(_entry("vol-euler", "Vol >= (12 pi^2/25) chi  when chi > 0, |K_perp| <= 1", vol, 12 * PI2 / 25 * chi, ">=", CLOSED_RTOL))
        if sv.bg_ok:
            e.append(
                _entry(
                    "euler-chain",
                    "4 pi^2 chi <= int sum (K_perp_1j)^2 + (4/3)(K3 - K1)^2 dV  (Bishop-Goldberg frame)",
                    4 * PI2 * chi,
                    ints["euler_chain"],
                    "<=",
                    CLOSED_RTOL,
                )
            )
            e.append(_entry("euler-chain-vol", "int sum (K_perp_1j)^2 + (4/3)(K3 - K1)^2 dV <= (25/3) Vol", ints["euler_chain"], 25.0 / 3.0 * vol, "<=", rt))
        else:
            notices.append("Bishop-Goldberg frame search failed; euler-chain entries skipped")
    else:
        # needs |K| <= 1 rather than |K_perp| <= 1
        sup_k = survey(chart, grid).values.sup_abs_k
        k_chart = rescale(chart, sup_k) if sup_k > 0 else chart
        kv = survey(k_chart, grid, with_bg=True, extra=("euler_lower",))
        note = f"evaluated at the sup |K| = 1 scale (factor {sup_k:.12g})" if sup_k > 0 else "sup |K| = 0; unscaled"
        e.append(_entry("vol-euler-nonpositive", "Vol >= (4 pi^2/3) |chi|  when chi <= 0, |K| <= 1", kv.values.vol, 4 * PI2 / 3 * abs(chi), ">=", CLOSED_RTOL, note))
        if kv.bg_ok:
            e.append(
                _entry(
                    "euler-nonpositive-chain",
                    "-(1/4) int sum (K_ij - K_kl)^2 dV <= 4 pi^2 chi  (Bishop-Goldberg frame)",
                    kv.integrals["euler_lower"],
                    4 * PI2 * chi,
                    "<=",
                    CLOSED_RTOL,
                )
            )
    e.append(_entry("k1perp-l2-vol", "int (K1_perp)^2 dV <= Vol  when |K1_perp| <= 1", ints["k1_sq"], vol, "<=", rt))
    e.append(_entry("e1perp-vol", "E1_perp / 144 <= 4 Vol", sv.values.e1perp / 144.0, 4.0 * vol, "<=", rt))
    return BoundReport("volume", chart.descriptor(), norm, e, notices)


def supnorm_suite(chart: MetricChart, grid: int = 16) -> BoundReport:
    """Lower bounds on ``R_inf^2 = sup |Rm|^2`` at unit volume."""
    notices: list[str] = []
    chi, tau = _chi_tau(chart, grid, notices)
    unit, norm = _unit_volume(chart, grid)
    sv = survey(unit, grid, extra=("s2_24", "k1_sq", "ric02"))
    if abs(sv.values.vol - 1.0) > 1e-8:
        raise NormalizationError(f"volume {sv.values.vol} after unit-volume normalization")
    rt = _rtol(sv)
    r2 = sv.values.r_infinity**2
    ints = sv.integrals
    f = sv.node_fields
    e: list[BoundEntry] = []
    e.append(_entry("rinf-euler", "R_inf^2 >= 8 pi^2 |chi|", r2, 8 * PI2 * abs(chi), ">=", CLOSED_RTOL))
    e.append(_entry("rinf-weyl", "R_inf^2 >= int |W|^2 dV", r2, ints["w2"], ">=", rt))
    e.append(_entry("weyl-signature", "int |W|^2 dV >= 12 pi^2 |tau|", ints["w2"], 12 * PI2 * abs(tau), ">=", CLOSED_RTOL))
    e.append(
        _entry("rinf-scalar-signature", "R_inf^2 >= int s^2/24 dV + 12 pi^2 |tau|", r2, ints["s2_24"] + 12 * PI2 * abs(tau), ">=", rt)
    )
    e.append(_entry("rinf-k1perp", "R_inf^2 >= 2 int (K1_perp)^2 dV", r2, 2.0 * ints["k1_sq"], ">=", rt))
    scale = float(np.max(f["rm2"]))
    e.append(_pointwise("pointwise-rm-k1perp", "|Rm|^2 >= 2 (K1_perp)^2 at every node", np.max(2 * f["k1_sq"] - f["rm2"]), scale))
    e.append(
        _pointwise("pointwise-rm-scalar-weyl", "|Rm|^2 >= s^2/24 + |W|^2 at every node", np.max(f["s2_24"] + f["w2"] - f["rm2"]), scale)
    )
    if abs(r2 - 8 * PI2 * abs(chi)) <= CLOSED_RTOL * max(r2, 1e-300) and chi != 0:
        notices.append("R_inf^2 = 8 pi^2 |chi|: equality case, rigidity quantities evaluated")
        e.append(_entry("rigidity-einstein", "int |Ric0|^2 dV vanishes in the equality case", ints["ric02"], RIGIDITY_TOL, "<=", 0.0))
        w2 = f["w2"]
        e.append(_entry("rigidity-weyl-constant", "|W|^2 is constant in the equality case (node variance)", float(np.var(w2)), RIGIDITY_TOL, "<=", 0.0))
    return BoundReport("supnorm", chart.descriptor(), norm, e, notices)


def lemma_suite(chart: MetricChart, grid: int = 16, seaman_nodes: int = 32, seaman_frames: int = 16) -> BoundReport:
    """Weyl-functional comparison, the 576 bound and the pointwise eigenvalue estimates."""
    notices: list[str] = []
    sv = survey(chart, grid)
    rt = _rtol(sv)
    d = sv.nodes.dec
    e: list[BoundEntry] = []
    e.append(_entry("weyl-e1perp", "W(g) <= E1_perp(g) / 6", sv.values.weyl_func, sv.values.e1perp / 6.0, "<=", rt))

    norm_chart, norm = _sup_kperp(chart, grid)
    if norm.notice:
        notices.append(norm.notice)
    nv = survey(norm_chart, grid)
    note = "at the sup |K_perp| = 1 scale"
    e.append(_entry("e1perp-576", "E1_perp(g) <= 576 Vol  when |K_perp| <= 1", nv.values.e1perp, 576.0 * nv.values.vol, "<=", _rtol(nv), note))
    e.append(_entry("scalar-bound-12", "|s| <= 12  when |K_perp| <= 1", nv.sups["abs_s"], 12.0, "<=", CLOSED_RTOL, note))

    ep, em = d["eig_plus"], d["eig_minus"]
    w3456 = np.maximum(d["w_plus2"] - 6 * ep[:, 0] ** 2, d["w_minus2"] - 6 * em[:, 0] ** 2)
    weqt = np.maximum(ep[:, 0] ** 2 - 2.0 / 3.0 * d["w_plus2"], em[:, 0] ** 2 - 2.0 / 3.0 * d["w_minus2"])
    wscale = float(np.max(d["w2"]))
    e.append(_pointwise("weyl-w1-upper", "|W+-|^2 <= 6 (w1+-)^2 at every node", np.max(w3456), wscale))
    e.append(_pointwise("w1-weyl-upper", "(w1+-)^2 <= (2/3) |W+-|^2 at every node", np.max(weqt), wscale))

    idx = np.linspace(0, len(sv.nodes.tensors) - 1, min(seaman_nodes, len(sv.nodes.tensors))).astype(int)
    worst, biggest = -np.inf, 0.0
    for k in idx:
        res = seaman_check(AlgCurvTensor(sv.nodes.tensors[k]), frames=seaman_frames, seed=int(k))
        worst = max(worst, res.max_component - res.bound)
        biggest = max(biggest, res.bound)
    e.append(
        _pointwise(
            "seaman",
            "|R_ijkl| <= (2/3)(K3_perp - K1_perp), i, j, k, l distinct, in random frames",
            worst,
            biggest,
            f"{len(idx)} nodes x {seaman_frames} frames",
        )
    )
    return BoundReport("lemmas", chart.descriptor(), norm, e, notices)


def conformal_suite(chart: MetricChart, phi, grid: int = 16) -> BoundReport:
    """Conformal invariance of W and E1_perp, and the K1_perp transformation law."""
    if isinstance(phi, str):
        phi = ex.parse(phi, chart.coords)
    notices: list[str] = []
    bar = conformal_change(chart, phi)
    sv = survey(chart, grid, extra=("k1_sq",))
    sb = survey(bar, grid, extra=("k1_sq", "rm2"))
    e: list[BoundEntry] = []
    rm_bar = sb.integrals["rm2"]
    for name, key, ref in (
        ("weyl-invariance", "weyl_func", "|W(e^{2 phi} g) - W(g)| is quadrature-small"),
        ("e1perp-invariance", "e1perp", "|E1_perp(e^{2 phi} g) - E1_perp(g)| is quadrature-small"),
    ):
        a, b = getattr(sv.values, key), getattr(sb.values, key)
        scale = max(abs(a), abs(b), rm_bar)
        rel = abs(a - b) / scale if scale > 0 else 0.0
        e.append(
            BoundEntry(name, ref, abs(a - b), CONFORMAL_RTOL * scale, "<=", 0.0, f"values {a:.12g} vs {b:.12g}; relative drift {rel:.3e}")
        )

    pts = sb.nodes.points
    k1_bar, _ = kperp_extremes(sb.nodes.dec)
    base = decompose_arrays(curvature_batch(chart, pts))
    k1, _ = kperp_extremes(base)
    wide = replace(chart, active_axes=chart.active_axes | ex.free_variables(phi))
    lap, grad2, f = scalar_derivatives(wide, lambda x: ex.evaluate(phi, x), pts)
    resid = 12.0 * np.exp(2.0 * f) * k1_bar - (12.0 * k1 - 6.0 * lap - 6.0 * grad2)
    e.append(
        BoundEntry(
            "k1perp-transformation",
            "12 e^{2 phi} K1_perp(bar g) = 12 K1_perp - 6 Lap phi - 6 |grad phi|^2 at every node",
            float(np.max(np.abs(resid))),
            LAW_TOL * (1.0 + float(np.max(np.abs(12.0 * k1)))),
            "<=",
            0.0,
            f"{len(pts)} nodes",
        )
    )
    k1_nodes = sv.node_fields["k1"]
    const = float(np.max(k1_nodes) - np.min(k1_nodes)) <= 1e-8 * (1.0 + float(np.max(np.abs(k1_nodes))))
    if const and float(np.max(k1_nodes)) <= 1e-12:
        e.append(
            _entry(
                "k1perp-l2-conformal",
                "int (K1_perp)^2 dV <= int (K1_perp(bar g))^2 dV(bar g)  when K1_perp is a non-positive constant",
                sv.integrals["k1_sq"],
                sb.integrals["k1_sq"],
                "<=",
                QUAD_RTOL,
            )
        )
    else:
        notices.append("K1_perp is not a non-positive constant; L2 comparison skipped")
    return BoundReport("conformal", chart.descriptor(), Normalization("none", 1.0), e, notices)


SUITES = {
    "volume": volume_suite,
    "supnorm": supnorm_suite,
    "lemmas": lemma_suite,
    "conformal": conformal_suite,
}


def family_sweep(family, t_values, grid: int = 16) -> list[dict]:
    """Rows ``(t, vol, sup_abs_k, sup_abs_kperp, r_infinity)`` along a one-parameter family."""
    from .builtins import family_member

    rows = []
    for t in t_values:
        chart = family_member(family, t) if isinstance(family, str) else family(t)
        v = functional_values(chart, grid)
        rows.append(
            {
                "t": float(t),
                "vol": v.vol,
                "sup_abs_k": v.sup_abs_k,
                "sup_abs_kperp": v.sup_abs_kperp,
                "r_infinity": v.r_infinity,
            }
        )
    return rows
