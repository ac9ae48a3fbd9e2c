import math

import numpy as np
import pytest

from curv4.builtins import builtin
from curv4.frame_algebra import constant_curvature
from curv4.geometry import curvature_batch, interior_samples, volume
from curv4.metric_file import MetricFileError, load_metric_toml

SPHERE = """
[chart]
name = "sphere"
coords = ["a", "b", "c", "p"]
domain = [[0, "pi"], [0, "pi"], [0, "pi"], [0, "2*pi"]]
periodic = [false, false, false, true]

[metric]
g11 = "1"
g22 = "sin(a)^2"
g33 = "(sin(a)*sin(b))^2"
g44 = "(sin(a)*sin(b)*sin(c))^2"
"""


def test_sphere_from_file_matches_builtin():
    chart = load_metric_toml(text=SPHERE)
    assert chart.name == "sphere"
    assert chart.active_axes == {0, 1, 2}
    pts = interior_samples(chart, 10, seed=3, margin=0.1)
    r = curvature_batch(chart, pts)
    assert np.max(np.abs(r - constant_curvature(1.0).comps)) < 1e-6
    assert volume(chart, grid=16) == pytest.approx(builtin("s4").exact_volume, rel=1e-8)


def test_load_from_path(tmp_path):
    path = tmp_path / "round.toml"
    path.write_text(SPHERE.replace('name = "sphere"\n', ""))
    chart = load_metric_toml(path)
    assert chart.name == "round"


def test_integer_entries_and_transposed_keys():
    text = """
[chart]
domain = [[0, 1], [0, 1], [0, 1], [0, 1]]
periodic = [true, true, true, true]
[metric]
g11 = 2
g22 = 1
g33 = 1
g44 = 1
g21 = "0.5*cos(2*pi*x1)"
"""
    chart = load_metric_toml(text=text)
    g = chart.g(np.array([0.0, 0.2, 0.3, 0.4]))
    assert g[0, 1] == g[1, 0] == pytest.approx(0.5)
    assert g[0, 0] == 2.0


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[chart\n", "invalid TOML"),
        ("[metric]\ng11 = '1'\n", "[chart] and [metric]"),
        (SPHERE.replace('g44 = "(sin(a)*sin(b)*sin(c))^2"\n', ""), "missing diagonal entry g44"),
        (SPHERE.replace('g11 = "1"', 'g11 = "1 +"'), "offset 3"),
        (SPHERE.replace('g11 = "1"', 'g11 = "1 + q"'), "unknown identifier"),
        (SPHERE + 'g12 = "0"\ng21 = "0"\n', "given twice"),
        (SPHERE + 'h12 = "0"\n', "unknown metric key"),
        (SPHERE.replace('[0, "2*pi"]', '[1, "0"]'), "empty"),
        (SPHERE.replace('[0, "2*pi"]', '[0, "x4"]'), "constant"),
        (SPHERE.replace('g44 = "(sin(a)*sin(b)*sin(c))^2"', 'g44 = "(sin(a)*sin(b)*sin(c))^2*(2+sin(p/4))"'), "periodic"),
        (SPHERE.replace('g11 = "1"', 'g11 = "-1"'), "positive definite"),
    ],
)
def test_rejections(text, fragment):
    with pytest.raises(MetricFileError) as exc:
        load_metric_toml(text=text)
    assert fragment in str(exc.value)


def test_domain_accepts_expressions():
    chart = load_metric_toml(text=SPHERE)
    assert chart.domain[3] == (0.0, 2 * math.pi)
