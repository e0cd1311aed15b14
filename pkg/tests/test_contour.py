import numpy as np
import pytest

from artifact.contour import (build_boundary_contour, build_real_line_rule,
                              gauss_arc, gauss_segment)
from artifact.dispersion import DispersionContext
from artifact.errors import InvalidTruncation


def test_segment_exact_for_cubic():
    z0, z1 = 1.0 + 2.0j, -3.0 + 0.5j
    nodes, w = gauss_segment(z0, z1, 8)
    got = np.sum(w * nodes ** 3)
    want = (z1 ** 4 - z0 ** 4) / 4.0
    assert abs(got - want) < 1e-13 * abs(want)


def test_arc_closes_path():
    nodes, w = gauss_arc(2.0, np.pi, np.pi / 2, 24)
    # integral of dz is the endpoint difference
    assert abs(np.sum(w) - (2j - (-2.0))) < 1e-12
    assert np.max(np.abs(np.abs(nodes) - 2.0)) < 1e-13


@pytest.mark.parametrize("which", ["D1", "D2"])
def test_boundary_contour_geometry(which, ctx):
    rule = build_boundary_contour(ctx, which, 16, 40.0, 40.0)
    a = ctx.radius_a
    # every node sits in the closed upper half plane, outside radius a
    assert np.min(rule.nodes.imag) > -1e-12
    assert np.min(np.abs(rule.nodes)) > a - 1e-9
    # whole contour: integral of dz telescopes to last - first endpoint
    want = 40.0 - 40.0j if which == "D1" else 40.0 + 40.0j
    assert abs(np.sum(rule.weights) - want) < 1e-10


def test_boundary_contour_rejects_small_cutoff(ctx):
    with pytest.raises(InvalidTruncation):
        build_boundary_contour(ctx, "D1", 16, 2.0, 40.0)


def test_real_line_rule_gaussian():
    rule = build_real_line_rule(12.0, 48)
    got = np.sum(rule.weights.real * np.exp(-rule.nodes.real ** 2 / 2))
    assert abs(got - np.sqrt(2 * np.pi)) < 1e-12
    # symmetric layout
    assert np.max(np.abs(np.sort(rule.nodes.real)
                         + np.sort(rule.nodes.real)[::-1])) < 1e-12


def test_real_line_rule_validation():
    with pytest.raises(ValueError):
        build_real_line_rule(-1.0, 48)
    with pytest.raises(ValueError):
        build_real_line_rule(10.0, 4)
