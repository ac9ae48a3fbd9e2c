"""Sectional and biorthogonal curvature of 2-planes.

``K_perp(P) = (K(P) + K(P_perp)) / 2``.  Its pointwise extremes have the
closed forms ``K1 = (w1+ + w1-)/2 + s/12`` and ``K3 = (w3+ + w3-)/2 + s/12``;
:func:`k_extremes_brute` is an independent sampling-and-polish oracle for them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frame_algebra import PAIRS, AlgCurvTensor, CurvDecomposition, bivector_matrix

__all__ = [
    "Plane2",
    "InvalidPlaneError",
    "sectional",
    "orthogonal_plane",
    "biorthogonal_k",
    "k_extremes_closed",
    "k_extremes_brute",
    "einstein_defect",
    "seaman_check",
    "SeamanResult",
    "sectional_extremes",
    "sectional_extremes_batch",
    "random_planes",
    "random_rotation",
    "scalar_from_kperp",
    "HODGE_STAR",
]

PLANE_TOL = 1e-10

# Hodge star on the PAIRS basis [12, 13, 14, 23, 24, 34] for the orientation e1^e2^e3^e4
HODGE_STAR = np.zeros((6, 6))
for _a, _b, _sign in ((0, 5, 1.0), (1, 4, -1.0), (2, 3, 1.0)):
    HODGE_STAR[_a, _b] = HODGE_STAR[_b, _a] = _sign
HODGE_STAR.setflags(write=False)

_PI = np.array([p[0] for p in PAIRS])
_PJ = np.array([p[1] for p in PAIRS])


class InvalidPlaneError(ValueError):
    pass


@dataclass(frozen=True)
class Plane2:
    """Oriented 2-plane spanned by an orthonormal pair of frame vectors."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float).reshape(4)
        v = np.array(self.v, dtype=float).reshape(4)
        if abs(u @ u - 1) > PLANE_TOL or abs(v @ v - 1) > PLANE_TOL or abs(u @ v) > PLANE_TOL:
            raise InvalidPlaneError("plane basis must be orthonormal")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def spanned_by(cls, a, b) -> "Plane2":
        """Gram-Schmidt of two independent vectors."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        u = a / np.linalg.norm(a)
        w = b - (b @ u) * u
        n = np.linalg.norm(w)
        if n < 1e-12:
            raise InvalidPlaneError("vectors are linearly dependent")
        return cls(u, w / n)

    @classmethod
    def coordinate(cls, i: int, j: int) -> "Plane2":
        e = np.eye(4)
        return cls(e[i], e[j])

    def projector(self) -> np.ndarray:
        return np.outer(self.u, self.u) + np.outer(self.v, self.v)

    def bivector(self) -> np.ndarray:
        return _bivectors(self.u[None], self.v[None])[0]


def _bivectors(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., _PI] * v[..., _PJ] - u[..., _PJ] * v[..., _PI]


def _comps(r) -> np.ndarray:
    return r.comps if isinstance(r, AlgCurvTensor) else np.asarray(r, dtype=float)


def sectional(r: AlgCurvTensor, plane: Plane2) -> float:
    """``K(P) = R(u, v, u, v)`` for an orthonormal basis ``(u, v)`` of ``P``."""
    if not isinstance(plane, Plane2):
        raise InvalidPlaneError("expected a Plane2")
    return float(np.einsum("ijkl,i,j,k,l->", _comps(r), plane.u, plane.v, plane.u, plane.v))


def orthogonal_plane(plane: Plane2) -> Plane2:
    """Orthonormal basis of the complement, from the two least-aligned standard vectors."""
    proj = plane.projector()
    alignment = np.diag(proj)
    order = sorted(range(4), key=lambda k: (round(alignment[k], 12), k))
    comp = np.eye(4) - proj
    a, b = comp[:, order[0]], comp[:, order[1]]
    if np.linalg.norm(a) < 1e-8:
        a = comp[:, order[2]]
    u = a / np.linalg.norm(a)
    for cand in (b, comp[:, order[2]], comp[:, order[3]]):
        w = cand - (cand @ u) * u
        if np.linalg.norm(w) > 1e-6:
            return Plane2(u, w / np.linalg.norm(w))
    raise InvalidPlaneError("could not complete the orthogonal plane")


def biorthogonal_k(r: AlgCurvTensor, plane: Plane2) -> float:
    return 0.5 * (sectional(r, plane) + sectional(r, orthogonal_plane(plane)))


def k_extremes_closed(dec: CurvDecomposition) -> tuple[float, float]:
    """``(K1_perp, K3_perp)`` from the Weyl spectra and scalar curvature."""
    k1 = 0.5 * (dec.eig_plus[0] + dec.eig_minus[0]) + dec.s / 12.0
    k3 = 0.5 * (dec.eig_plus[2] + dec.eig_minus[2]) + dec.s / 12.0
    return k1, k3


def scalar_from_kperp(r: AlgCurvTensor) -> float:
    """``4 (K_perp(e1,e2) + K_perp(e1,e3) + K_perp(e1,e4))``, equal to ``s``."""
    c = _comps(r)
    return 2.0 * (c[0, 1, 0, 1] + c[2, 3, 2, 3] + c[0, 2, 0, 2] + c[1, 3, 1, 3] + c[0, 3, 0, 3] + c[1, 2, 1, 2])


# -- sampling oracle ---------------------------------------------------------


def random_planes(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Planes from the invariant measure on G(2,4): Gaussian pairs + Gram-Schmidt."""
    a = rng.standard_normal((n, 4))
    b = rng.standard_normal((n, 4))
    u = a / np.linalg.norm(a, axis=1, keepdims=True)
    w = b - np.sum(b * u, axis=1, keepdims=True) * u
    return u, w / np.linalg.norm(w, axis=1, keepdims=True)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of SO(4)."""
    q, r = np.linalg.qr(rng.standard_normal((4, 4)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _kperp_and_k(m: np.ndarray, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xi = _bivectors(u, v)
    star = xi @ HODGE_STAR
    k = np.einsum("np,pq,nq->n", xi, m, xi)
    kp = np.einsum("np,pq,nq->n", star, m, star)
    return 0.5 * (k + kp), k


def _random_small_rotations(rng: np.random.Generator, n: int, step: float) -> np.ndarray:
    a = rng.standard_normal((n, 4, 4))
    a = a - np.swapaxes(a, 1, 2)
    a *= step / np.linalg.norm(a, axis=(1, 2), keepdims=True)
    eye = np.eye(4)
    # Cayley transform: exactly orthogonal
    return np.linalg.solve(eye - 0.5 * a, eye + 0.5 * a)


def _polish(objective, u, v, rng, levels: int, trials: int = 64, rounds: int = 8, step0: float = 0.1):
    """Maximise ``objective(u, v)`` from each starting plane by random small rotations."""
    u, v = u.copy(), v.copy()
    best = objective(u, v)
    for level in range(levels + 1):
        step = step0 * 0.5**level
        for _ in range(rounds):
            improved = False
            for c in range(len(u)):
                q = _random_small_rotations(rng, trials, step)
                tu, tv = q @ u[c], q @ v[c]
                vals = objective(tu, tv)
                k = int(np.argmax(vals))
                if vals[k] > best[c]:
                    best[c] = vals[k]
                    u[c], v[c] = tu[k], tv[k]
                    improved = True
            if not improved:
                break
    return best, u, v


def k_extremes_brute(
    r: AlgCurvTensor, samples: int = 10_000, polish_iters: int = 10, seed: int = 0, keep: int = 8
) -> tuple[float, float]:
    """Min and max of ``K_perp`` by uniform plane sampling plus local polish."""
    if samples < 1000:
        raise ValueError("k_extremes_brute needs at least 1000 samples")
    rng = np.random.default_rng(seed)
    m = bivector_matrix(_comps(r))
    u, v = random_planes(rng, samples)
    kp, _ = _kperp_and_k(m, u, v)
    order = np.argsort(kp, kind="stable")
    lo_idx, hi_idx = order[:keep], order[::-1][:keep]
    best_lo, _, _ = _polish(lambda a, b: -_kperp_and_k(m, a, b)[0], u[lo_idx], v[lo_idx], rng, polish_iters)
    best_hi, _, _ = _polish(lambda a, b: _kperp_and_k(m, a, b)[0], u[hi_idx], v[hi_idx], rng, polish_iters)
    return float(-np.max(best_lo)), float(np.max(best_hi))


def einstein_defect(r: AlgCurvTensor, samples: int = 2000, seed: int = 0, polish_iters: int = 10) -> float:
    """``max_P |K_perp(P) - K(P)|`` over sampled (and polished) planes."""
    if samples < 1000:
        raise ValueError("einstein_defect needs at least 1000 samples")
    rng = np.random.default_rng(seed)
    m = bivector_matrix(_comps(r))

    def objective(a, b):
        kp, k = _kperp_and_k(m, a, b)
        return np.abs(kp - k)

    u, v = random_planes(rng, samples)
    e = np.eye(4)
    cu = np.array([e[i] for i, j in PAIRS])
    cv = np.array([e[j] for i, j in PAIRS])
    u, v = np.vstack([cu, u]), np.vstack([cv, v])
    vals = objective(u, v)
    top = np.argsort(-vals, kind="stable")[:8]
    best, _, _ = _polish(objective, u[top], v[top], rng, polish_iters)
    return float(max(np.max(vals), np.max(best)))


@dataclass(frozen=True)
class SeamanResult:
    """``max_component`` is over components with four distinct indices.

    ``max_shared`` (pairs sharing an index, e.g. ``R_1213``) is informational:
    those components carry traceless Ricci and are not controlled by
    ``K3 - K1`` (already on S^1 x S^3, where ``K_perp`` is constant).
    """

    max_component: float
    bound: float
    passed: bool
    max_shared: float


_DISTINCT = np.array([[i, j] for i in range(6) for j in range(6) if not set(PAIRS[i]) & set(PAIRS[j])])
_SHARED = np.array(
    [[i, j] for i in range(6) for j in range(6) if i != j and set(PAIRS[i]) & set(PAIRS[j])]
)


def seaman_check(r: AlgCurvTensor, frames: int = 64, seed: int = 0, dec: CurvDecomposition | None = None) -> SeamanResult:
    """Largest ``|R_ijkl|`` (i, j, k, l distinct) over frames against ``(2/3)(K3 - K1)``.

    Frame 0 is the given frame; the rest are Haar-random rotations of it.
    """
    from .frame_algebra import decompose

    comps = _comps(r)
    if dec is None:
        dec = decompose(AlgCurvTensor(comps))
    k1, k3 = k_extremes_closed(dec)
    bound = 2.0 / 3.0 * (k3 - k1)
    rng = np.random.default_rng(seed)
    qs = np.array([np.eye(4)] + [random_rotation(rng) for _ in range(max(frames - 1, 0))])
    rot = np.einsum("fia,fjb,fkc,fld,ijkl->fabcd", qs, qs, qs, qs, comps, optimize=True)
    m = rot[:, _PI[:, None], _PJ[:, None], _PI[None, :], _PJ[None, :]]
    biggest = float(np.max(np.abs(m[:, _DISTINCT[:, 0], _DISTINCT[:, 1]])))
    shared = float(np.max(np.abs(m[:, _SHARED[:, 0], _SHARED[:, 1]])))
    return SeamanResult(biggest, bound, biggest <= bound + 1e-9 * (1.0 + abs(bound)), shared)


def sectional_extremes(r: AlgCurvTensor | np.ndarray) -> tuple[float, float]:
    """Exact min and max sectional curvature.

    Decomposable unit bivectors are the unit bivectors with
    ``<*xi, xi> = 0``; in dimension 4 the min of ``<R xi, xi>`` over them
    equals ``max_t lambda_min(R + t *)`` (the joint numerical range of two
    quadratic forms is convex), a concave 1-d problem.
    """
    lo, hi = sectional_extremes_batch(_comps(r)[None])
    return float(lo[0]), float(hi[0])


def _lowest_decomposable(m: np.ndarray) -> np.ndarray:
    bound = 2.0 * np.max(np.linalg.norm(m, 2, axis=(1, 2))) + 1.0
    lo = np.full(len(m), -bound)
    hi = np.full(len(m), bound)
    best = np.full(len(m), -np.inf)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        w, v = np.linalg.eigh(m + mid[:, None, None] * HODGE_STAR)
        best = np.maximum(best, w[:, 0])
        # bisection on the sign of a supergradient <* v, v> of the concave function
        up = np.einsum("np,pq,nq->n", v[:, :, 0], HODGE_STAR, v[:, :, 0]) > 0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    return best


def sectional_extremes_batch(comps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`sectional_extremes` over tensors of shape ``(N, 4, 4, 4, 4)``."""
    comps = np.asarray(comps, dtype=float)
    m = comps[:, _PI[:, None], _PJ[:, None], _PI[None, :], _PJ[None, :]]
    return _lowest_decomposable(m), -_lowest_decomposable(-m)
