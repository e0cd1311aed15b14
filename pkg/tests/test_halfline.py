import numpy as np
import pytest

from artifact.errors import IncompatibleData, SupportViolation
from artifact.halfline import (ExtensionOperator, NaturalExtension,
                               extend_halfline, solve_linear_full,
                               solve_reduced)
from artifact.scenario import FunctionSpec as FS
from artifact.scenario import Scenario

from conftest import manufactured_exp


def test_manufactured_exp_small_grid(ctx):
    scn = manufactured_exp()
    x = np.linspace(0.0, 10.0, 32)
    t = np.linspace(0.0, 0.5, 17)
    fld = solve_linear_full(ctx, scn, x, t, nseg=256, nreal=64)
    ue = np.outer(np.exp(-x), 1 + t ** 2)
    ute = np.outer(np.exp(-x), 2 * t)
    assert np.max(np.abs(fld.u - ue)) < 1e-8
    assert np.max(np.abs(fld.ut - ute)) < 1e-8


def test_zero_scenario_zero_field(ctx):
    z = FS.zero()
    scn = Scenario(gamma=1.0, delta=0.0, horizon_T=0.5, s=2.0,
                   u0=z, u1=z, alpha=z, beta=z)
    x = np.linspace(0.0, 10.0, 16)
    t = np.linspace(0.0, 0.5, 8)
    fld = solve_linear_full(ctx, scn, x, t, nseg=128, nreal=32)
    assert np.max(np.abs(fld.u)) < 1e-13
    assert np.max(np.abs(fld.ut)) < 1e-13


def test_traces_satisfy_robin(ctx):
    scn = manufactured_exp()
    x = np.linspace(0.0, 10.0, 32)
    t = np.linspace(0.0, 0.5, 17)
    fld = solve_linear_full(ctx, scn, x, t, nseg=256, nreal=64)
    r1 = fld.traces["g1"] + fld.traces["g0"] - scn.alpha(t)
    r2 = fld.traces["g2"] - scn.beta(t)
    assert np.max(np.abs(r1)) < 1e-8
    assert np.max(np.abs(r2)) < 1e-8


def test_strict_compatibility_enforced(ctx):
    G = FS.gaussian(1.0, 3.0, 0.8)
    scn = Scenario(gamma=1.0, delta=0.0, horizon_T=0.5, s=4.0,
                   u0=G, u1=FS.zero(), alpha=FS.zero(), beta=FS.zero())
    x = np.linspace(0.0, 10.0, 8)
    t = np.linspace(0.0, 0.5, 4)
    with pytest.raises(IncompatibleData):
        solve_linear_full(ctx, scn, x, t, nseg=64, nreal=16)
    # waived: runs anyway
    solve_linear_full(ctx, scn, x, t, nseg=64, nreal=16, compat="waive")


def test_reduced_support_guard(ctx):
    phi = FS.raised_cosine(0.3, 0.45, 0.15)  # support reaches past T = 0.5
    psi = FS.zero()
    x = np.linspace(0.0, 10.0, 8)
    t = np.linspace(0.0, 0.5, 4)
    with pytest.raises(SupportViolation):
        solve_reduced(ctx, phi, psi, x, t, nseg=64)


def test_extension_operator_moments():
    op = ExtensionOperator.build(4)
    # moment system: sum_j c_j (-j)^p = 1 for p = 0..order-1, which makes
    # E phi match phi's derivatives at 0
    for p in range(op.order):
        got = sum(c * (-j) ** p
                  for j, c in enumerate(op.coefficients, start=1))
        assert abs(got - 1.0) < 1e-8


def test_extension_routing():
    op = ExtensionOperator.build(4)
    G = FS.gaussian(1.0, 3.0, 0.8)
    E = FS.exp_decay(1.0, 1.0)
    assert isinstance(extend_halfline(G, op), NaturalExtension)
    assert not isinstance(extend_halfline(E, op), NaturalExtension)
    both = FS.sum_of((G, FS.raised_cosine(0.3, 2.0, 0.5)))
    assert isinstance(extend_halfline(both, op), NaturalExtension)
    mixed = FS.sum_of((G, E))
    assert not isinstance(extend_halfline(mixed, op), NaturalExtension)


def test_natural_extension_is_the_function_itself():
    G = FS.gaussian(1.0, 3.0, 0.8)
    ext = extend_halfline(G, ExtensionOperator.build(4))
    x = np.linspace(-5.0, 5.0, 21)
    assert np.allclose(ext(x), G(x))
    assert ext.norm_inflation() < 1.01
