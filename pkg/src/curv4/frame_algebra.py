"""Algebraic curvature tensors at a point of an oriented Riemannian 4-manifold.

Components are taken in an oriented orthonormal frame with the convention
``K(e_i, e_j) = R[i, j, i, j]``, so the unit round sphere has
``R[i, j, k, l] = delta_ik delta_jl - delta_il delta_jk``.

Two-forms are handled in the bivector basis ``PAIRS`` (unit norm
``|e_i ^ e_j| = 1``) and in the self-dual / anti-self-dual basis

    (e1^e2 +- e3^e4)/sqrt2, (e1^e3 +- e4^e2)/sqrt2, (e1^e4 +- e2^e3)/sqrt2

Norm conventions:

* ``|W|^2`` is the sum of squared eigenvalues of the W+ and W- blocks
  (operator norm on two-forms, equal to 1/4 of the plain tensor norm),
* ``|Ric0|^2`` is the plain tensor norm of the traceless Ricci tensor,
* ``|Rm|^2 = s^2/24 + |W|^2 + |Ric0|^2/2`` (again 1/4 of the tensor norm).

With these, the Chern-Gauss-Bonnet integrand is
``|W|^2 + s^2/24 - |Ric0|^2/2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PAIRS",
    "SD_BASIS",
    "ADMISSIBLE_TOL",
    "AlgCurvTensor",
    "CurvDecomposition",
    "CurvNorms",
    "SymmetryDiagnostics",
    "InadmissibleTensorError",
    "validate",
    "decompose",
    "norms",
    "recompose",
    "random_alg_curv",
    "rotate",
    "project_algebraic",
    "curvature_operator",
    "constant_curvature",
    "product_s2s2",
    "product_s1s3",
    "kahler_constant_holomorphic",
]

ADMISSIBLE_TOL = 1e-9

PAIRS: tuple[tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

_S = 1.0 / np.sqrt(2.0)
# rows: xi+_1..3, xi-_1..3 in the PAIRS basis [12, 13, 14, 23, 24, 34]
SD_BASIS = np.array(
    [
        [_S, 0, 0, 0, 0, _S],
        [0, _S, 0, 0, -_S, 0],
        [0, 0, _S, _S, 0, 0],
        [_S, 0, 0, 0, 0, -_S],
        [0, _S, 0, 0, _S, 0],
        [0, 0, _S, -_S, 0, 0],
    ]
)
SD_BASIS.setflags(write=False)

_PI = np.array([p[0] for p in PAIRS])
_PJ = np.array([p[1] for p in PAIRS])


class InadmissibleTensorError(ValueError):
    """Raised when a tensor violates the curvature symmetries."""

    def __init__(self, diagnostics: "SymmetryDiagnostics"):
        self.diagnostics = diagnostics
        super().__init__(
            "tensor is not an algebraic curvature tensor "
            f"(antisymmetry={diagnostics.antisymmetry:.3e}, "
            f"pair={diagnostics.pair_symmetry:.3e}, "
            f"bianchi={diagnostics.bianchi:.3e})"
        )


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AlgCurvTensor:
    """Orthonormal-frame components ``R[i, j, k, l]`` of a curvature tensor."""

    comps: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.comps)
        if arr.shape != (4, 4, 4, 4):
            raise ValueError(f"expected shape (4, 4, 4, 4), got {arr.shape}")
        object.__setattr__(self, "comps", arr)

    def __getitem__(self, idx):
        return self.comps[idx]

    def sectional(self, i: int, j: int) -> float:
        """Sectional curvature of the coordinate plane ``span(e_i, e_j)``."""
        return float(self.comps[i, j, i, j])

    def scaled(self, factor: float) -> "AlgCurvTensor":
        return AlgCurvTensor(self.comps * factor)

    def __add__(self, other: "AlgCurvTensor") -> "AlgCurvTensor":
        return AlgCurvTensor(self.comps + other.comps)


@dataclass(frozen=True)
class SymmetryDiagnostics:
    antisymmetry: float
    pair_symmetry: float
    bianchi: float

    @property
    def max_violation(self) -> float:
        return max(self.antisymmetry, self.pair_symmetry, self.bianchi)

    @property
    def admissible(self) -> bool:
        return self.max_violation < ADMISSIBLE_TOL


@dataclass(frozen=True)
class CurvDecomposition:
    s: float
    ric0: np.ndarray
    w_plus: np.ndarray
    w_minus: np.ndarray
    eig_plus: tuple[float, float, float]
    eig_minus: tuple[float, float, float]
    # off-diagonal block of the curvature operator (traceless Ricci part)
    b_block: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        for name in ("ric0", "w_plus", "w_minus", "b_block"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, _frozen(val))


@dataclass(frozen=True)
class CurvNorms:
    w2: float
    ric02: float
    rm2: float
    w_plus2: float
    w_minus2: float


def _cyclic_sum(comps: np.ndarray) -> np.ndarray:
    # R_ijkl + R_iklj + R_iljk
    return (
        comps
        + np.einsum("...iklj->...ijkl", comps)
        + np.einsum("...iljk->...ijkl", comps)
    )


def validate(tensor: AlgCurvTensor | np.ndarray) -> SymmetryDiagnostics:
    """Largest absolute violation of each curvature symmetry class."""
    r = tensor.comps if isinstance(tensor, AlgCurvTensor) else np.asarray(tensor)
    anti = max(
        np.max(np.abs(r + np.swapaxes(r, -4, -3))),
        np.max(np.abs(r + np.swapaxes(r, -2, -1))),
    )
    pair = np.max(np.abs(r - np.einsum("...klij->...ijkl", r)))
    bianchi = np.max(np.abs(_cyclic_sum(r)))
    return SymmetryDiagnostics(float(anti), float(pair), float(bianchi))


def project_algebraic(comps: np.ndarray) -> np.ndarray:
    """Orthogonal projection of a 4-index array onto algebraic curvature tensors.

    Averages over the antisymmetries and the pair symmetry, then removes the
    totally antisymmetric part (one third of the cyclic sum), which is the
    exact projector onto the first-Bianchi kernel.
    """
    x = np.asarray(comps, dtype=float)
    x = 0.5 * (x - np.swapaxes(x, -4, -3))
    x = 0.5 * (x - np.swapaxes(x, -2, -1))
    x = 0.5 * (x + np.einsum("...klij->...ijkl", x))
    return x - _cyclic_sum(x) / 3.0


def random_alg_curv(seed: int) -> AlgCurvTensor:
    """Deterministic pseudo-random algebraic curvature tensor."""
    rng = np.random.default_rng(seed)
    return AlgCurvTensor(project_algebraic(rng.standard_normal((4, 4, 4, 4))))


def rotate(tensor: AlgCurvTensor, q: np.ndarray) -> AlgCurvTensor:
    """Components in the frame ``e'_a = sum_i q[i, a] e_i``."""
    q = np.asarray(q, dtype=float)
    return AlgCurvTensor(np.einsum("ia,jb,kc,ld,ijkl->abcd", q, q, q, q, tensor.comps))


def bivector_matrix(comps: np.ndarray) -> np.ndarray:
    """6x6 matrix of the curvature operator in the ``PAIRS`` basis."""
    return comps[..., _PI[:, None], _PJ[:, None], _PI[None, :], _PJ[None, :]]


def curvature_operator(comps: np.ndarray) -> np.ndarray:
    """6x6 curvature operator in the self-dual / anti-self-dual basis."""
    m = bivector_matrix(np.asarray(comps, dtype=float))
    return SD_BASIS @ m @ SD_BASIS.T


def _from_bivector_matrix(m: np.ndarray) -> np.ndarray:
    out = np.zeros(m.shape[:-2] + (4, 4, 4, 4))
    for p, (i, j) in enumerate(PAIRS):
        for q, (k, l) in enumerate(PAIRS):
            v = m[..., p, q]
            out[..., i, j, k, l] = v
            out[..., j, i, k, l] = -v
            out[..., i, j, l, k] = -v
            out[..., j, i, l, k] = v
    return out


def decompose_arrays(comps: np.ndarray) -> dict[str, np.ndarray]:
    """Vectorised decomposition over leading batch axes (no validation)."""
    comps = np.asarray(comps, dtype=float)
    ric = np.einsum("...ijil->...jl", comps)
    s = np.einsum("...ii->...", ric)
    eye = np.eye(4)
    ric0 = ric - (s[..., None, None] / 4.0) * eye
    op = curvature_operator(comps)
    tr3 = np.eye(3)
    a = op[..., :3, :3]
    c = op[..., 3:, 3:]
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    c = 0.5 * (c + np.swapaxes(c, -1, -2))
    wp = a - (np.trace(a, axis1=-2, axis2=-1)[..., None, None] / 3.0) * tr3
    wm = c - (np.trace(c, axis1=-2, axis2=-1)[..., None, None] / 3.0) * tr3
    eig_p = np.linalg.eigvalsh(wp)
    eig_m = np.linalg.eigvalsh(wm)
    w_plus2 = np.sum(eig_p**2, axis=-1)
    w_minus2 = np.sum(eig_m**2, axis=-1)
    ric02 = np.sum(ric0**2, axis=(-2, -1))
    w2 = w_plus2 + w_minus2
    return {
        "s": s,
        "ric0": ric0,
        "w_plus": wp,
        "w_minus": wm,
        "eig_plus": eig_p,
        "eig_minus": eig_m,
        "b_block": op[..., :3, 3:],
        "w_plus2": w_plus2,
        "w_minus2": w_minus2,
        "w2": w2,
        "ric02": ric02,
        "rm2": s**2 / 24.0 + w2 + 0.5 * ric02,
    }


def decompose(tensor: AlgCurvTensor) -> CurvDecomposition:
    """Scalar curvature, traceless Ricci and the W+/W- blocks with sorted spectra."""
    diag = validate(tensor)
    if not diag.admissible:
        raise InadmissibleTensorError(diag)
    d = decompose_arrays(tensor.comps)
    return CurvDecomposition(
        s=float(d["s"]),
        ric0=d["ric0"],
        w_plus=d["w_plus"],
        w_minus=d["w_minus"],
        eig_plus=tuple(float(x) for x in d["eig_plus"]),
        eig_minus=tuple(float(x) for x in d["eig_minus"]),
        b_block=d["b_block"],
    )


def norms(dec: CurvDecomposition) -> CurvNorms:
    wp2 = float(np.sum(np.square(dec.eig_plus)))
    wm2 = float(np.sum(np.square(dec.eig_minus)))
    w2 = wp2 + wm2
    ric02 = float(np.sum(np.square(dec.ric0)))
    return CurvNorms(
        w2=w2,
        ric02=ric02,
        rm2=dec.s**2 / 24.0 + w2 + 0.5 * ric02,
        w_plus2=wp2,
        w_minus2=wm2,
    )


def kulkarni_nomizu(h: np.ndarray, k: np.ndarray) -> np.ndarray:
    return (
        np.einsum("ik,jl->ijkl", h, k)
        + np.einsum("jl,ik->ijkl", h, k)
        - np.einsum("il,jk->ijkl", h, k)
        - np.einsum("jk,il->ijkl", h, k)
    )


def recompose(dec: CurvDecomposition) -> AlgCurvTensor:
    """Rebuild ``R = W + (1/2) Ric0 (KN) g + (s/24) g (KN) g``."""
    weyl_op = np.zeros((6, 6))
    weyl_op[:3, :3] = dec.w_plus
    weyl_op[3:, 3:] = dec.w_minus
    weyl = _from_bivector_matrix(SD_BASIS.T @ weyl_op @ SD_BASIS)
    g = np.eye(4)
    comps = weyl + 0.5 * kulkarni_nomizu(dec.ric0, g) + dec.s / 24.0 * kulkarni_nomizu(g, g)
    return AlgCurvTensor(comps)


# -- model tensors -----------------------------------------------------------


def constant_curvature(k: float = 1.0) -> AlgCurvTensor:
    g = np.eye(4)
    return AlgCurvTensor(0.5 * k * kulkarni_nomizu(g, g))


def _block_sphere(indices, k: float) -> np.ndarray:
    p = np.zeros((4, 4))
    for i in indices:
        p[i, i] = 1.0
    return 0.5 * k * kulkarni_nomizu(p, p)


def product_s2s2(r1: float = 1.0, r2: float = 1.0) -> AlgCurvTensor:
    """S^2(r1) x S^2(r2) in the product frame (e1, e2 | e3, e4)."""
    return AlgCurvTensor(_block_sphere((0, 1), r1**-2) + _block_sphere((2, 3), r2**-2))


def product_s1s3(r3: float = 1.0) -> AlgCurvTensor:
    """S^1 x S^3(r3) with the circle direction first."""
    return AlgCurvTensor(_block_sphere((1, 2, 3), r3**-2))


def kahler_constant_holomorphic(j: np.ndarray, hol: float = 4.0) -> AlgCurvTensor:
    """Constant holomorphic sectional curvature ``hol`` for the complex structure ``j``.

    ``j[a, b] = g(J e_a, e_b)`` in an orthonormal frame.  Sectional curvatures
    lie in ``[hol/4, hol]`` and the scalar curvature is ``6 * hol``.
    """
    j = np.asarray(j, dtype=float)
    g = np.eye(4)
    comps = (
        0.5 * kulkarni_nomizu(g, g)
        + np.einsum("ik,jl->ijkl", j, j)
        - np.einsum("il,jk->ijkl", j, j)
        + 2.0 * np.einsum("ij,kl->ijkl", j, j)
    )
    return AlgCurvTensor(0.25 * hol * comps)


STANDARD_J = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)
STANDARD_J.setflags(write=False)
