"""Curvature of Riemannian 4-manifolds: Weyl decomposition, biorthogonal
curvature, topological integrals and per-metric inequality checks."""

from .biorthogonal import (
    Plane2,
    biorthogonal_k,
    einstein_defect,
    k_extremes_brute,
    k_extremes_closed,
    orthogonal_plane,
    seaman_check,
    sectional,
    sectional_extremes,
)
from .builtins import builtin, family_member, flat_t4, fubini_study_cp2, product_s1s3, product_s2s2, round_s4
from .expr import evaluate, parse, pretty
from .frame_algebra import (
    AlgCurvTensor,
    CurvDecomposition,
    CurvNorms,
    InadmissibleTensorError,
    decompose,
    norms,
    recompose,
    validate,
)
from .functionals import (
    BoundEntry,
    BoundReport,
    FunctionalValues,
    conformal_suite,
    family_sweep,
    functional_values,
    lemma_suite,
    normalize_sup_kperp,
    normalize_unit_volume,
    supnorm_suite,
    volume_suite,
)
from .geometry import MetricChart, conformal_change, curvature_at, integrate, rescale, volume
from .metric_file import load_metric_toml
from .topology import (
    BGFrameResult,
    bg_basis_search,
    bg_euler_chi,
    gauss_bonnet_chi,
    gray_signature_tau,
    hirzebruch_tau,
    recover_topology,
)

__version__ = "0.1.0"

__all__ = [
    "AlgCurvTensor",
    "BGFrameResult",
    "BoundEntry",
    "BoundReport",
    "CurvDecomposition",
    "CurvNorms",
    "FunctionalValues",
    "InadmissibleTensorError",
    "MetricChart",
    "Plane2",
    "bg_basis_search",
    "bg_euler_chi",
    "biorthogonal_k",
    "builtin",
    "conformal_change",
    "conformal_suite",
    "curvature_at",
    "decompose",
    "einstein_defect",
    "evaluate",
    "family_member",
    "family_sweep",
    "flat_t4",
    "fubini_study_cp2",
    "functional_values",
    "gauss_bonnet_chi",
    "gray_signature_tau",
    "hirzebruch_tau",
    "integrate",
    "k_extremes_brute",
    "k_extremes_closed",
    "lemma_suite",
    "load_metric_toml",
    "normalize_sup_kperp",
    "normalize_unit_volume",
    "norms",
    "orthogonal_plane",
    "parse",
    "pretty",
    "product_s1s3",
    "product_s2s2",
    "recompose",
    "recover_topology",
    "rescale",
    "round_s4",
    "seaman_check",
    "sectional",
    "sectional_extremes",
    "supnorm_suite",
    "validate",
    "volume",
    "volume_suite",
]
