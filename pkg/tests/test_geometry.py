import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.special import i0

from curv4.builtins import BUILTINS, UnknownMetricError, builtin, family_member
from curv4.frame_algebra import decompose_arrays
from curv4.geometry import (
    NotPositiveDefiniteError,
    StencilError,
    conformal_change,
    curvature_at,
    curvature_batch,
    integrate,
    interior_samples,
    make_grid,
    rescale,
    volume,
)
from curv4.metric_file import MetricFileError, load_metric_toml

PI = math.pi

WARPED = """
[chart]
coords = ["x", "y", "z", "w"]
domain = [[0, 1], [0, 1], [0, 1], [0, 1]]
periodic = [true, true, true, true]

[metric]
g11 = "exp(0.2*sin(2*pi*x))"
g22 = "1 + 0.1*cos(2*pi*y)"
g33 = "1"
g44 = "1"
g12 = "0.1*cos(2*pi*x)"
"""


@pytest.mark.parametrize("name", list(BUILTINS))
def test_finite_differences_match_analytic(name):
    chart = builtin(name)
    pts = interior_samples(chart, 20, seed=11, margin=0.1)
    fd = curvature_batch(chart, pts, use_analytic=False)
    exact = curvature_batch(chart, pts, use_analytic=True)
    assert np.max(np.abs(fd - exact)) < 1e-6


def test_flat_t4_curvature_zero():
    r = curvature_at(builtin("flat-t4"), (0.3, 0.1, 0.7, 0.2), use_analytic=False)
    assert np.max(np.abs(r.comps)) < 1e-9


def test_round_s4_coordinate_planes():
    r = curvature_at(builtin("s4"), (1.0, 1.2, 0.7, 2.0), use_analytic=False)
    for i in range(4):
        for j in range(4):
            if i != j:
                assert r.sectional(i, j) == pytest.approx(1.0, abs=1e-6)


def test_s1xs3_block_structure():
    r = curvature_at(builtin("s1xs3"), (0.5, 1.0, 1.3, 2.0), use_analytic=False)
    s = decompose_arrays(r.comps)["s"]
    assert s == pytest.approx(6.0, abs=1e-6)
    for i in range(1, 4):
        assert r.sectional(0, i) == pytest.approx(0.0, abs=1e-6)
        for j in range(1, 4):
            if i != j:
                assert r.sectional(i, j) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize(
    "name, expected",
    [("s4", 8 * PI**2 / 3), ("flat-t4", 1.0), ("s2xs2", 16 * PI**2), ("cp2", PI**2 / 2), ("s1xs3", 4 * PI**3)],
)
def test_exact_volumes(name, expected):
    assert volume(builtin(name)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("name", list(BUILTINS))
def test_quadrature_volume_matches_closed_form(name):
    chart = builtin(name)
    quad = volume(replace(chart, homogeneous=False), grid=32)
    assert quad == pytest.approx(chart.exact_volume, rel=1e-8)


def test_flat_unit_torus_weights_sum_to_one():
    chart = builtin("flat-t4")
    chart = replace(chart, active_axes=frozenset(range(4)))
    w = make_grid(chart, 8).weights(chart)
    assert abs(np.sum(w) - 1.0) < 1e-12


def test_periodic_rule_converges_fast():
    chart = replace(builtin("flat-t4"), active_axes=frozenset({0}), homogeneous=False)
    exact = i0(1.0)
    errs = [abs(integrate(chart, lambda x: np.exp(np.cos(2 * PI * x[:, 0])), grid=n) - exact) for n in (2, 4)]
    assert errs[1] < errs[0] / 16


def test_integrate_examples():
    t4 = builtin("flat-t4")
    assert integrate(t4, lambda x: np.ones(len(x))) == pytest.approx(1.0)
    s4 = builtin("s4")
    field = lambda x: decompose_arrays(curvature_batch(s4, x))["s"] ** 2 / 24  # noqa: E731
    assert integrate(s4, field) == pytest.approx(16 * PI**2, rel=1e-12)
    s1s3 = builtin("s1xs3")
    val = integrate(s1s3, lambda x: decompose_arrays(curvature_batch(s1s3, x))["s"])
    assert val == pytest.approx(6 * 4 * PI**3, rel=1e-12)


def test_integrate_is_bit_stable():
    chart = load_metric_toml(text=WARPED)
    f = lambda x: np.sin(x[:, 0]) + x[:, 1] ** 2  # noqa: E731
    assert integrate(chart, f, grid=12) == integrate(chart, f, grid=12)


def test_homogeneity_check():
    from curv4.geometry import HomogeneityError

    with pytest.raises(HomogeneityError):
        integrate(builtin("s4"), lambda x: x[:, 0])


def test_rescale_unit_volume_s4():
    c = math.sqrt(8 * PI**2 / 3)
    chart = rescale(builtin("s4"), 1 / c)
    assert volume(chart) == pytest.approx(1.0, rel=1e-12)
    n2 = np.max(decompose_arrays(curvature_batch(chart, interior_samples(chart, 4)))["rm2"])
    assert math.sqrt(n2) == pytest.approx(4 * PI, rel=1e-12)


def test_rescale_identity():
    chart = builtin("cp2")
    assert rescale(chart, 1.0) == chart


def test_rescale_scaling_law_by_finite_differences():
    base = load_metric_toml(text=WARPED)
    lam = 2.5
    pts = interior_samples(base, 5, seed=2)
    k = curvature_batch(base, pts)
    k_scaled = curvature_batch(rescale(base, lam), pts)
    for i in range(4):
        for j in range(4):
            if i != j:
                assert np.allclose(k_scaled[:, i, j, i, j], k[:, i, j, i, j] / lam, atol=1e-8)


def test_rescale_rejects_nonpositive():
    with pytest.raises(ValueError):
        rescale(builtin("s4"), 0.0)


def test_conformal_zero_is_identity():
    base = load_metric_toml(text=WARPED)
    pts = interior_samples(base, 5, seed=4)
    assert np.array_equal(curvature_batch(conformal_change(base, "0"), pts), curvature_batch(base, pts))


def test_conformal_constant_equals_rescale():
    base = load_metric_toml(text=WARPED)
    pts = interior_samples(base, 5, seed=4)
    a = curvature_batch(conformal_change(base, "0.3"), pts)
    b = curvature_batch(rescale(base, math.exp(0.6)), pts)
    assert np.max(np.abs(a - b)) < 1e-9


def test_conformal_scalar_curvature_law():
    chart = conformal_change(builtin("flat-t4"), "0.1*sin(2*pi*x1)")
    pts = interior_samples(chart, 20, seed=5)
    s_bar = decompose_arrays(curvature_batch(chart, pts))["s"]
    x = pts[:, 0]
    phi = 0.1 * np.sin(2 * PI * x)
    lap = -0.1 * (2 * PI) ** 2 * np.sin(2 * PI * x)
    grad2 = (0.2 * PI * np.cos(2 * PI * x)) ** 2
    expected = np.exp(-2 * phi) * (-6 * lap - 6 * grad2)
    assert np.max(np.abs(s_bar - expected)) < 5e-5


def test_stencil_error_outside_domain():
    with pytest.raises(StencilError):
        curvature_at(builtin("s4"), (-0.1, 1.0, 1.0, 1.0), use_analytic=False)


def test_not_positive_definite():
    text = WARPED.replace('g22 = "1 + 0.1*cos(2*pi*y)"', 'g22 = "1 + 0.1*cos(2*pi*y)"\ng13 = "1.2"')
    with pytest.raises(MetricFileError):
        load_metric_toml(text=text)
    chart = load_metric_toml(text=WARPED)
    bad = replace(chart, metric=lambda x: -chart.metric(x))
    with pytest.raises(NotPositiveDefiniteError):
        curvature_at(bad, (0.5, 0.5, 0.5, 0.5))


def test_builtin_registry():
    with pytest.raises(UnknownMetricError):
        builtin("nosuch")
    chart = builtin("s1xs3", r1=0.5)
    assert chart.exact_volume == pytest.approx(0.5 * 4 * PI**3)
    member = family_member("s1xs3-collapse", 0.01)
    assert member.exact_volume == pytest.approx(0.04 * PI**3)
    assert builtin("t4").name == builtin("flat-t4").name


@pytest.mark.parametrize("name, chi, tau", [("s4", 2, 0), ("s2xs2", 4, 0), ("cp2", 3, 1), ("flat-t4", 0, 0), ("s1xs3", 0, 0)])
def test_builtin_metadata(name, chi, tau):
    chart = builtin(name)
    assert (chart.chi, chart.tau) == (chi, tau)
    assert chart.descriptor()["name"] == name
