import numpy as np
import pytest

from artifact.cauchy import SolutionField
from artifact.errors import GridTooCoarse
from artifact.halfline import solve_linear_full
from artifact.scenario import FunctionSpec as FS
from artifact.scenario import Scenario
from artifact.verify import (estimate_ratio_sweep, global_relation_residual,
                             initial_residuals, lambda_asymptote_check,
                             laplace_bound_check, laplace_transform_ratio,
                             pde_residual, refinement_study, robin_residuals)

from conftest import manufactured_exp, manufactured_gaussian


G = FS.gaussian(1.0, 3.0, 0.8)


def _tabulated(x, t):
    # exact u = G(x) cos(2t): the residual is pure stencil truncation
    return SolutionField(x, t, np.outer(G(x), np.cos(2 * t)),
                         np.outer(G(x), -2 * np.sin(2 * t)))


def test_refinement_factors_exact_field():
    scn = manufactured_gaussian()
    out = refinement_study(_tabulated, scn)
    assert out["t_measurable"] and out["x_measurable"]
    assert abs(out["t_factor"] - 4.0) < 0.8
    assert abs(out["x_factor"] - 16.0) < 3.2


def test_nonlinear_residual_path():
    # w = (G cos2t)^2 = H(x) (1 + cos 4t)/2 with H = G^2 another Gaussian,
    # so compensating the forcing makes the nonlinear residual truncation
    H = FS.gaussian(1.0, 3.0, 0.8 / np.sqrt(2.0))
    Hxx = H.derivative_chain(2)
    base = manufactured_gaussian()
    scn = Scenario(gamma=base.gamma, delta=base.delta,
                   horizon_T=base.horizon_T, s=base.s,
                   u0=base.u0, u1=base.u1, alpha=base.alpha, beta=base.beta,
                   forcing=base.forcing + ((Hxx, FS.poly_time([0.5])),
                                           (Hxx, FS.cos_time(0.5, 4.0))))
    x = np.linspace(0.0, 10.0, 257)
    t = np.linspace(0.0, 0.5, 65)
    fld = _tabulated(x, t)
    _, s_nl = pde_residual(fld, scn, nonlinear=True)
    _, s_lin = pde_residual(fld, scn, nonlinear=False)
    # without the quadratic term the compensated forcing is unbalanced
    assert s_nl["max"] < 1e-3
    assert s_lin["max"] > 10 * s_nl["max"]


def test_grid_too_coarse_guards():
    scn = manufactured_gaussian()
    x = np.linspace(0.0, 10.0, 7)
    t = np.linspace(0.0, 0.5, 9)
    with pytest.raises(GridTooCoarse):
        pde_residual(_tabulated(x, t), scn)
    xs = np.concatenate([np.linspace(0, 5, 8), np.linspace(5.5, 10, 8)])
    with pytest.raises(GridTooCoarse):
        pde_residual(_tabulated(xs, np.linspace(0, 0.5, 9)), scn)


def test_initial_and_robin_residuals_exact():
    scn = manufactured_gaussian()
    x = np.linspace(0.0, 10.0, 65)
    t = np.linspace(0.0, 0.5, 17)
    fld = _tabulated(x, t)
    z = np.array(0.0)
    ct = np.cos(2 * t)
    fld.traces.update({"g0": float(G(z)) * ct,
                       "g1": float(G.derivative()(z)) * ct,
                       "g2": float(G.derivative_chain(2)(z)) * ct})
    ini = initial_residuals(fld, scn)
    assert ini["u0"] < 1e-13 and ini["u1"] < 1e-13
    rob = robin_residuals(fld, scn)
    assert rob["robin1"] < 1e-12 and rob["robin2"] < 1e-12


def test_global_relation_on_manufactured_solve(ctx):
    scn = manufactured_exp()
    x = np.linspace(0.0, 10.0, 129)
    t = np.linspace(0.0, 0.5, 17)
    fld = solve_linear_full(ctx, scn, x, t, nseg=256, nreal=64)
    ks = np.array([0.5, 2.0 - 1.0j, -3.0 - 0.5j])
    rows = global_relation_residual(fld, scn, ctx, ks)
    assert len(rows) == 6
    for row in rows:
        assert row["residual"] < 1e-5 * row["scale"]
    with pytest.raises(ValueError):
        global_relation_residual(fld, scn, ctx, np.array([1.0 + 0.5j]))


def test_lambda_asymptote_band(ctx):
    out = lambda_asymptote_check(ctx)
    assert out["ok"]
    assert 1.9 < out["real_range"][0] and out["real_range"][1] <= 3.0
    assert not lambda_asymptote_check(ctx, band=(1.99, 2.0))["ok"]


def test_laplace_ratio_exponential_oracle():
    # L[e^{-lam}](x) = 1/(1+x): the L2 ratio is exactly sqrt(2)
    r = laplace_transform_ratio(lambda lam: np.exp(-lam))
    assert abs(r - np.sqrt(2.0)) < 1e-3


def test_laplace_bound_small_sample():
    out = laplace_bound_check(n_samples=8, seed=1)
    assert out["ok"]
    assert max(out["ratios"]) <= np.sqrt(np.pi) * (1 + 1e-3)


def test_sweep_deterministic_across_jobs():
    a = estimate_ratio_sweep("cauchy-hom", 2, [0.1], seed=5, jobs=1)
    b = estimate_ratio_sweep("cauchy-hom", 2, [0.1], seed=5, jobs=2)
    assert a["rows"] == b["rows"]
    assert a["ok"]
    with pytest.raises(ValueError):
        estimate_ratio_sweep("cauchy-hom", 2, [], seed=5)
    with pytest.raises(ValueError):
        estimate_ratio_sweep("no-such", 1, [0.1])
