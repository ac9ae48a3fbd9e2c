"""Euler characteristic and signature from curvature integrals.

Four routes, cross-checked against each other:

* Chern-Gauss-Bonnet: ``8 pi^2 chi = int |W+|^2 + |W-|^2 + s^2/24 - |Ric0|^2/2``
* Hirzebruch: ``12 pi^2 tau = int |W+|^2 - |W-|^2``
* the Bishop-Goldberg Euler integrand and Gray's signature integrand, both
  evaluated in a frame where ``R_1213, R_1214, R_1223, R_1224, R_1314, R_1323``
  vanish (found numerically by :func:`bg_basis_search`).

In Gray's integrand the second term pairs ``e1^e3`` with ``e4^e2`` (the
component ``R_1342``), matching the self-dual basis
``(e12+e34, e13+e42, e14+e23)``; with that reading it integrates to
``tau(CP^2) = 1``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fields import CurvatureNodes, converged_integrals
from .frame_algebra import AlgCurvTensor, decompose_arrays, validate
from .geometry import MetricChart

__all__ = [
    "BGFrameResult",
    "BGSearchError",
    "TopologyEstimate",
    "TopologyReport",
    "bg_basis_search",
    "bg_node_tensors",
    "bg_frames",
    "bg_residual_components",
    "gauss_bonnet_integrand",
    "signature_integrand",
    "gray_integrand",
    "bg_euler_integrand",
    "gauss_bonnet_chi",
    "hirzebruch_tau",
    "gray_signature_tau",
    "bg_euler_chi",
    "recover_topology",
    "betti_annotation",
    "snap",
    "SNAP_TOL",
    "BG_STARTS",
]

SNAP_TOL = 1e-4
BG_STARTS = 16
BG_RTOL = 1e-7

# 0-based (i, j, k, l) of the six components a Bishop-Goldberg frame kills
_BG_SLOTS = ((0, 1, 0, 2), (0, 1, 0, 3), (0, 1, 1, 2), (0, 1, 1, 3), (0, 2, 0, 3), (0, 2, 1, 2))
_BG_IDX = tuple(np.array(s) for s in zip(*_BG_SLOTS))


class BGSearchError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BGFrameResult:
    rotation: np.ndarray
    residual: float
    rotated_tensor: AlgCurvTensor
    success: bool


def _rotate_comps(comps: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.einsum("ia,jb,kc,ld,ijkl->abcd", q, q, q, q, comps, optimize=True)


def bg_residual_components(comps) -> np.ndarray:
    c = comps.comps if isinstance(comps, AlgCurvTensor) else np.asarray(comps)
    return c[(...,) + _BG_IDX]


def _quat_left(p):
    a, b, c, d = p
    return np.array([[a, -b, -c, -d], [b, a, -d, c], [c, d, a, -b], [d, -c, b, a]])


def _quat_right(r):
    a, b, c, d = r
    return np.array([[a, -b, -c, -d], [b, a, d, -c], [c, -d, a, b], [d, c, -b, a]])


def _start_rotations(count: int) -> list[np.ndarray]:
    """Identity, then rotations ``x -> p x conj(r)`` from seeded unit quaternion pairs."""
    rng = np.random.default_rng(20240611)
    out = [np.eye(4)]
    while len(out) < count:
        p, r = rng.standard_normal(4), rng.standard_normal(4)
        p /= np.linalg.norm(p)
        r /= np.linalg.norm(r)
        r_conj = r * np.array([1.0, -1.0, -1.0, -1.0])
        out.append(_quat_left(p) @ _quat_right(r_conj))
    return out


_STARTS = _start_rotations(BG_STARTS)
_TRIU = np.triu_indices(4, 1)


def _cayley(theta: np.ndarray) -> np.ndarray:
    a = np.zeros((4, 4))
    a[_TRIU] = theta
    a = a - a.T
    eye = np.eye(4)
    return np.linalg.solve(eye - 0.5 * a, eye + 0.5 * a)


_PAIRS_I = np.array([0, 0, 0, 1, 1, 2])
_PAIRS_J = np.array([1, 2, 3, 2, 3, 3])
# (bivector, bivector) index pairs of the six slots in the PAIRS basis
_SLOT_A = np.array([0, 0, 0, 0, 1, 1])
_SLOT_B = np.array([1, 2, 3, 4, 2, 3])


def _wedge(q: np.ndarray) -> np.ndarray:
    """Induced map on bivectors: column ``(a, b)`` is ``q_a ^ q_b`` in the PAIRS basis."""
    return q[_PAIRS_I][:, _PAIRS_I] * q[_PAIRS_J][:, _PAIRS_J] - q[_PAIRS_J][:, _PAIRS_I] * q[_PAIRS_I][:, _PAIRS_J]


def _bivector_matrix(comps: np.ndarray) -> np.ndarray:
    return comps[_PAIRS_I[:, None], _PAIRS_J[:, None], _PAIRS_I[None, :], _PAIRS_J[None, :]]


def _generators() -> np.ndarray:
    out = []
    for a, b in zip(*_TRIU):
        e = np.zeros((4, 4))
        e[a, b], e[b, a] = 1.0, -1.0
        # the wedge map is quadratic, so the central difference is exact
        out.append(0.5 * (_wedge(np.eye(4) + e) - _wedge(np.eye(4) - e)))
    return np.array(out)


_LIE = _generators()


def _six(comps: np.ndarray, q: np.ndarray, m: np.ndarray | None = None) -> np.ndarray:
    if m is None:
        m = _bivector_matrix(comps)
    xi = _wedge(q)
    return (xi.T @ m @ xi)[_SLOT_A, _SLOT_B]


def _polish(comps: np.ndarray, q0: np.ndarray, tol: float, max_iter: int = 200) -> np.ndarray:
    """Levenberg-Marquardt on ``q exp(A)`` with the exact Jacobian on bivectors."""
    m = _bivector_matrix(comps)
    q = q0
    mm = _wedge(q).T @ m @ _wedge(q)
    r = mm[_SLOT_A, _SLOT_B]
    cost = r @ r
    lam = 1e-3
    for _ in range(max_iter):
        if math.sqrt(cost) < 1e-3 * tol:
            break
        d = np.einsum("kqp,qr->kpr", _LIE, mm)
        jac = (d + np.swapaxes(d, 1, 2))[:, _SLOT_A, _SLOT_B].T
        jtj = jac.T @ jac
        g = jac.T @ r
        step = np.linalg.solve(jtj + lam * (np.diag(np.diag(jtj)) + 1e-12 * np.eye(6)), -g)
        q_new = q @ _cayley(step)
        x = _wedge(q_new)
        mm_new = x.T @ m @ x
        r_new = mm_new[_SLOT_A, _SLOT_B]
        cost_new = r_new @ r_new
        if cost_new < cost:
            q, mm, r, cost = q_new, mm_new, r_new, cost_new
            lam = max(lam / 5.0, 1e-12)
        else:
            lam *= 4.0
            if lam > 1e12:
                break
    # re-orthonormalise against drift
    u, _, vt = np.linalg.svd(q)
    return u @ vt


def bg_basis_search(r, starts: int = BG_STARTS, hint: np.ndarray | None = None) -> BGFrameResult:
    """Rotation in SO(4) making the six Bishop-Goldberg components vanish.

    Multi-start Levenberg-Marquardt on a Cayley chart of SO(4) from
    ``hint`` (if given), the identity and seeded quaternion-pair rotations;
    stops at the first start whose residual is below ``1e-7 (1 + |Rm|)``.
    """
    tensor = r if isinstance(r, AlgCurvTensor) else AlgCurvTensor(np.asarray(r, dtype=float))
    validate(tensor)
    comps = tensor.comps
    arrays = decompose_arrays(comps[None])
    tol = BG_RTOL * (1.0 + math.sqrt(float(arrays["rm2"][0])))
    best = None
    starts_list = _STARTS if starts == BG_STARTS else _start_rotations(starts)
    if hint is not None:
        starts_list = [hint] + list(starts_list)
    for q0 in starts_list:
        res0 = float(np.linalg.norm(_six(comps, q0)))
        q = q0 if res0 < 1e-3 * tol else _polish(comps, q0, tol)
        res = float(np.linalg.norm(_six(comps, q)))
        if best is None or res < best[1]:
            best = (q, res)
        if res < tol:
            break
    q, res = best
    return BGFrameResult(q, res, AlgCurvTensor(_rotate_comps(comps, q)), res < tol)


# -- integrands (frame components, 0-based) ----------------------------------


def gauss_bonnet_integrand(dec: dict) -> np.ndarray:
    return dec["w2"] + dec["s"] ** 2 / 24.0 - 0.5 * dec["ric02"]


def signature_integrand(dec: dict) -> np.ndarray:
    return dec["w_plus2"] - dec["w_minus2"]


def gray_integrand(c: np.ndarray) -> np.ndarray:
    """Gray's signature integrand; valid only in a Bishop-Goldberg frame."""
    c = np.asarray(c)

    def R(i, j, k, l):
        return c[..., i - 1, j - 1, k - 1, l - 1]

    kp12 = 0.5 * (R(1, 2, 1, 2) + R(3, 4, 3, 4))
    kp13 = 0.5 * (R(1, 3, 1, 3) + R(2, 4, 2, 4))
    kp14 = 0.5 * (R(1, 4, 1, 4) + R(2, 3, 2, 3))
    return (
        2 * kp12 * R(1, 2, 3, 4)
        + 2 * kp13 * R(1, 3, 4, 2)
        + 2 * kp14 * R(1, 4, 2, 3)
        + R(1, 4, 2, 4) * R(2, 3, 2, 4)
        - R(1, 4, 3, 4) * R(2, 3, 4, 3)
        + R(1, 3, 4, 3) * R(4, 2, 4, 3)
    )


def bg_euler_integrand(c: np.ndarray) -> np.ndarray:
    """Bishop-Goldberg Euler integrand; valid only in a Bishop-Goldberg frame."""
    c = np.asarray(c)

    def R(i, j, k, l):
        return c[..., i - 1, j - 1, k - 1, l - 1]

    return (
        R(1, 2, 1, 2) * R(3, 4, 3, 4)
        + R(1, 3, 1, 3) * R(2, 4, 2, 4)
        + R(1, 4, 1, 4) * R(2, 3, 2, 3)
        + R(1, 2, 3, 4) ** 2
        + R(1, 3, 2, 4) ** 2
        + R(1, 4, 2, 3) ** 2
    )


# -- estimates ---------------------------------------------------------------


def snap(value: float, tol: float = SNAP_TOL) -> int | None:
    k = round(value)
    return int(k) if abs(value - k) < tol else None


@dataclass(frozen=True)
class TopologyEstimate:
    name: str
    value: float
    snapped: int | None
    integrand_min: float
    integrand_max: float

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "snapped": self.snapped,
            "integrand_min": self.integrand_min,
            "integrand_max": self.integrand_max,
        }


def _estimate(name, integral, norm, values) -> TopologyEstimate:
    v = integral / norm
    return TopologyEstimate(name, v, snap(v), float(np.min(values)), float(np.max(values)))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CURV4_THREADS", "1")))
    except ValueError:
        return 1


BG_BLOCK = 64


def _bg_block(tensors: np.ndarray) -> list[BGFrameResult]:
    # nodes whose given frame already passes (to a margin) skip the search
    rm = np.sqrt(0.25 * np.sum(tensors**2, axis=(1, 2, 3, 4)))
    res0 = np.linalg.norm(bg_residual_components(tensors), axis=-1)
    trivial = res0 < 1e-3 * BG_RTOL * (1.0 + rm)
    eye = np.eye(4)
    out, hint = [], None
    for t, easy, r0 in zip(tensors, trivial, res0):
        if easy:
            res = BGFrameResult(eye, float(r0), AlgCurvTensor(t), True)
        else:
            res = bg_basis_search(t, hint=hint)
        hint = res.rotation if res.success else None
        out.append(res)
    return out


def bg_frames(tensors: np.ndarray) -> list[BGFrameResult]:
    """Per-node searches in node order.

    Nodes are processed in fixed blocks of 64, each warm-started from the
    previous node's frame; blocks may run on ``CURV4_THREADS`` threads
    without changing the result.
    """
    blocks = [tensors[k : k + BG_BLOCK] for k in range(0, len(tensors), BG_BLOCK)]
    n = _threads()
    if n == 1 or len(blocks) < 2:
        results = [_bg_block(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_bg_block, blocks))
    return [r for block in results for r in block]


def bg_node_tensors(nodes: CurvatureNodes) -> np.ndarray:
    cache = nodes.cache
    if "frames" not in cache:
        cache["frames"] = bg_frames(nodes.tensors)
    frames = cache["frames"]
    failed = [k for k, f in enumerate(frames) if not f.success]
    if failed:
        worst = max(frames[k].residual for k in failed)
        raise BGSearchError(
            f"Bishop-Goldberg frame not found at {len(failed)} of {len(frames)} nodes (worst residual {worst:.3e})"
        )
    return np.stack([f.rotated_tensor.comps for f in frames])


_EIGHT_PI2 = 8 * math.pi**2
_TWELVE_PI2 = 12 * math.pi**2
_SIX_PI2 = 6 * math.pi**2
_FOUR_PI2 = 4 * math.pi**2


def gauss_bonnet_chi(chart: MetricChart, grid: int = 16) -> TopologyEstimate:
    ints, nodes = converged_integrals(chart, grid, lambda n: {"gb": gauss_bonnet_integrand(n.dec)})
    return _estimate("gauss_bonnet_chi", ints["gb"], _EIGHT_PI2, gauss_bonnet_integrand(nodes.dec))


def hirzebruch_tau(chart: MetricChart, grid: int = 16) -> TopologyEstimate:
    ints, nodes = converged_integrals(chart, grid, lambda n: {"sig": signature_integrand(n.dec)})
    return _estimate("hirzebruch_tau", ints["sig"], _TWELVE_PI2, signature_integrand(nodes.dec))


def gray_signature_tau(chart: MetricChart, grid: int = 16) -> TopologyEstimate:
    ints, nodes = converged_integrals(chart, grid, lambda n: {"gray": gray_integrand(bg_node_tensors(n))})
    return _estimate("gray_signature_tau", ints["gray"], _SIX_PI2, gray_integrand(bg_node_tensors(nodes)))


def bg_euler_chi(chart: MetricChart, grid: int = 16) -> TopologyEstimate:
    ints, nodes = converged_integrals(chart, grid, lambda n: {"bg": bg_euler_integrand(bg_node_tensors(n))})
    return _estimate("bg_euler_chi", ints["bg"], _FOUR_PI2, bg_euler_integrand(bg_node_tensors(nodes)))


@dataclass(frozen=True)
class TopologyReport:
    chi: TopologyEstimate
    tau: TopologyEstimate
    bg_chi: TopologyEstimate | None
    gray_tau: TopologyEstimate | None
    bg_max_residual: float
    bg_ok: bool
    notice: str | None

    def as_dict(self) -> dict:
        return {
            "gauss_bonnet_chi": self.chi.as_dict(),
            "hirzebruch_tau": self.tau.as_dict(),
            "bg_euler_chi": None if self.bg_chi is None else self.bg_chi.as_dict(),
            "gray_signature_tau": None if self.gray_tau is None else self.gray_tau.as_dict(),
            "bg_max_residual": self.bg_max_residual,
            "bg_ok": self.bg_ok,
            "notice": self.notice,
        }


def recover_topology(chart: MetricChart, grid: int = 16) -> TopologyReport:
    """All four routes from one set of nodes; the frame-based ones are skipped if a search fails."""

    def fields(n: CurvatureNodes) -> dict:
        out = {"gb": gauss_bonnet_integrand(n.dec), "sig": signature_integrand(n.dec)}
        try:
            bg = bg_node_tensors(n)
        except BGSearchError:
            return out
        out["gray"] = gray_integrand(bg)
        out["bg"] = bg_euler_integrand(bg)
        return out

    ints, nodes = converged_integrals(chart, grid, fields)
    f = fields(nodes)
    frames = nodes.cache["frames"]
    max_res = max(fr.residual for fr in frames)
    chi = _estimate("gauss_bonnet_chi", ints["gb"], _EIGHT_PI2, f["gb"])
    tau = _estimate("hirzebruch_tau", ints["sig"], _TWELVE_PI2, f["sig"])
    if "bg" in ints:
        return TopologyReport(
            chi,
            tau,
            _estimate("bg_euler_chi", ints["bg"], _FOUR_PI2, f["bg"]),
            _estimate("gray_signature_tau", ints["gray"], _SIX_PI2, f["gray"]),
            max_res,
            True,
            None,
        )
    notice = "Bishop-Goldberg frame search failed at some node; frame-based formulas skipped"
    return TopologyReport(chi, tau, None, None, max_res, False, notice)


def betti_annotation(chi: int | None, tau: int | None, simply_connected: bool | None) -> dict | None:
    """``b2 = chi - 2`` and ``b2+- = (b2 +- tau)/2`` for simply connected closed 4-manifolds."""
    if not simply_connected or chi is None or tau is None:
        return None
    b2 = chi - 2
    return {"b1": 0, "b2": b2, "b2_plus": (b2 + tau) // 2, "b2_minus": (b2 - tau) // 2}
