from dataclasses import replace

import numpy as np
import pytest

from curv4.biorthogonal import random_rotation
from curv4.builtins import builtin
from curv4.frame_algebra import (
    STANDARD_J,
    decompose_arrays,
    kahler_constant_holomorphic,
    product_s2s2,
    random_alg_curv,
    rotate,
)
from curv4.metric_file import load_metric_toml
from curv4.topology import (
    BGSearchError,
    bg_basis_search,
    bg_euler_chi,
    bg_euler_integrand,
    bg_residual_components,
    betti_annotation,
    gauss_bonnet_chi,
    gauss_bonnet_integrand,
    gray_integrand,
    gray_signature_tau,
    hirzebruch_tau,
    recover_topology,
    signature_integrand,
    snap,
)

WARPED = """
[chart]
domain = [[0, 1], [0, 1], [0, 1], [0, 1]]
periodic = [true, true, true, true]
[metric]
g11 = "exp(0.2*sin(2*pi*x1))"
g22 = "1 + 0.1*cos(2*pi*x2)"
g33 = "1"
g44 = "1"
g12 = "0.1*cos(2*pi*x1)"
"""


def _swap_last_coords(chart):
    """The same metric with the last two coordinates exchanged (orientation reversed)."""
    perm = [0, 1, 3, 2]
    p = np.eye(4)[perm]
    base, dens = chart.metric, chart.sqrt_det
    return replace(
        chart,
        name=chart.name + "-reversed",
        coords=tuple(chart.coords[k] for k in perm),
        domain=tuple(chart.domain[k] for k in perm),
        periodic=tuple(chart.periodic[k] for k in perm),
        active_axes=frozenset(perm.index(k) for k in chart.active_axes),
        metric=lambda x: p @ base(x[..., perm]) @ p.T,
        sqrt_det=lambda x: dens(x[..., perm]),
        analytic_curvature=None,
        homogeneous=False,
        tau=-chart.tau,
    )


def _is_rotation(q):
    return np.allclose(q @ q.T, np.eye(4), atol=1e-10) and abs(np.linalg.det(q) - 1) < 1e-10


def test_bg_product_frame_accepted():
    res = bg_basis_search(product_s2s2())
    assert res.success and res.residual == 0.0
    assert np.array_equal(res.rotation, np.eye(4))


def test_bg_kahler_frame_accepted():
    res = bg_basis_search(kahler_constant_holomorphic(STANDARD_J))
    assert res.success and res.residual < 1e-14


def test_bg_recovers_rotated_product():
    rng = np.random.default_rng(0)
    for _ in range(10):
        r = rotate(product_s2s2(), random_rotation(rng))
        res = bg_basis_search(r)
        assert res.success and res.residual < 1e-8
        assert _is_rotation(res.rotation)
        assert np.allclose(rotate(r, res.rotation).comps, res.rotated_tensor.comps)
        assert np.linalg.norm(bg_residual_components(res.rotated_tensor)) == pytest.approx(res.residual, abs=1e-15)


def test_bg_random_tensors():
    for seed in range(40):
        res = bg_basis_search(random_alg_curv(seed))
        assert res.success
        assert _is_rotation(res.rotation)


def test_bg_hint_and_determinism():
    r = random_alg_curv(3)
    a, b = bg_basis_search(r), bg_basis_search(r)
    assert np.array_equal(a.rotation, b.rotation)
    warm = bg_basis_search(r, hint=a.rotation)
    assert np.array_equal(warm.rotation, a.rotation)


def test_frame_integrands_match_invariant_ones():
    for seed in range(40):
        r = random_alg_curv(seed)
        c = bg_basis_search(r).rotated_tensor.comps
        dec = decompose_arrays(r.comps)
        assert gray_integrand(c) == pytest.approx(0.5 * signature_integrand(dec), abs=1e-9)
        assert bg_euler_integrand(c) == pytest.approx(0.5 * gauss_bonnet_integrand(dec), abs=1e-9)


def test_model_integrand_values():
    s4 = decompose_arrays(builtin("s4").analytic_curvature(np.zeros((1, 4)))[0])
    assert gauss_bonnet_integrand(s4) == pytest.approx(6.0)
    cp2 = kahler_constant_holomorphic(STANDARD_J).comps
    assert bg_euler_integrand(cp2) == pytest.approx(24.0)
    s2s2 = product_s2s2().comps
    assert bg_euler_integrand(s2s2) == pytest.approx(1.0)


def test_orientation_reversal_pointwise():
    swap = np.eye(4)[:, [1, 0, 2, 3]]
    for seed in range(10):
        r = random_alg_curv(seed)
        a, b = decompose_arrays(r.comps), decompose_arrays(rotate(r, swap).comps)
        assert signature_integrand(b) == pytest.approx(-signature_integrand(a), abs=1e-12)
        assert gauss_bonnet_integrand(b) == pytest.approx(gauss_bonnet_integrand(a), abs=1e-12)


@pytest.mark.parametrize(
    "name, chi, tau", [("s4", 2, 0), ("s2xs2", 4, 0), ("cp2", 3, 1), ("flat-t4", 0, 0), ("s1xs3", 0, 0)]
)
def test_four_routes_on_builtins(name, chi, tau):
    chart = builtin(name)
    assert abs(gauss_bonnet_chi(chart).value - chi) < 1e-8
    assert abs(hirzebruch_tau(chart).value - tau) < 1e-8
    assert abs(bg_euler_chi(chart).value - chi) < 1e-6
    assert abs(gray_signature_tau(chart).value - tau) < 1e-6
    rep = recover_topology(chart)
    assert rep.bg_ok and rep.notice is None
    assert (rep.chi.snapped, rep.tau.snapped, rep.bg_chi.snapped, rep.gray_tau.snapped) == (chi, tau, chi, tau)


def test_s1xs3_integrand_vanishes_pointwise():
    est = gauss_bonnet_chi(builtin("s1xs3"))
    assert abs(est.integrand_min) < 1e-12 and abs(est.integrand_max) < 1e-12


def test_orientation_reversed_cp2():
    chart = _swap_last_coords(builtin("cp2"))
    rep = recover_topology(chart, grid=24)
    assert rep.tau.snapped == -1 and rep.gray_tau.snapped == -1
    assert rep.chi.snapped == 3 and rep.bg_chi.snapped == 3


def test_full_grid_matches_fast_path():
    chart = replace(builtin("cp2"), homogeneous=False)
    rep = recover_topology(chart, grid=24)
    assert abs(rep.chi.value - 3) < 1e-4 and abs(rep.tau.value - 1) < 1e-4
    assert abs(rep.bg_chi.value - 3) < 1e-4 and abs(rep.gray_tau.value - 1) < 1e-4


def test_non_homogeneous_torus():
    rep = recover_topology(load_metric_toml(text=WARPED), grid=32)
    assert rep.bg_ok
    for est in (rep.chi, rep.tau, rep.bg_chi, rep.gray_tau):
        assert est.snapped == 0


def test_snap():
    assert snap(2.00001) == 2
    assert snap(1.9) is None
    assert snap(-0.99999999) == -1


def test_betti_annotation():
    assert betti_annotation(3, 1, True) == {"b1": 0, "b2": 1, "b2_plus": 1, "b2_minus": 0}
    assert betti_annotation(4, 0, True) == {"b1": 0, "b2": 2, "b2_plus": 1, "b2_minus": 1}
    assert betti_annotation(0, 0, False) is None


def test_bg_failure_is_reported():
    from curv4.fields import curvature_nodes
    from curv4.topology import bg_node_tensors

    nodes = curvature_nodes(builtin("s4"))
    nodes.cache["frames"] = [replace(f, success=False, residual=1.0) for f in [bg_basis_search(t) for t in nodes.tensors]]
    with pytest.raises(BGSearchError):
        bg_node_tensors(nodes)


def test_thread_count_does_not_change_frames(monkeypatch):
    from curv4.topology import bg_frames

    tensors = np.stack([random_alg_curv(seed).comps for seed in range(150)])
    monkeypatch.setenv("CURV4_THREADS", "1")
    serial = bg_frames(tensors)
    monkeypatch.setenv("CURV4_THREADS", "3")
    threaded = bg_frames(tensors)
    for a, b in zip(serial, threaded):
        assert np.array_equal(a.rotation, b.rotation)
