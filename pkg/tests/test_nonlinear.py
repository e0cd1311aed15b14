import numpy as np

from artifact.cauchy import SolutionField
from artifact.nonlinear import _SquareBundle, lifespan_probe, picard_solve
from artifact.scenario import FunctionSpec as FS
from artifact.scenario import Scenario

from conftest import small_data_nonlinear


def test_zero_data_fixed_point(ctx):
    z = FS.zero()
    scn = Scenario(gamma=1.0, delta=0.0, horizon_T=0.1, s=2.0,
                   u0=z, u1=z, alpha=z, beta=z)
    x = np.linspace(0.0, 10.0, 16)
    t = np.linspace(0.0, 0.1, 6)
    fld, rep = picard_solve(ctx, scn, x, t, nseg=96, nreal=24)
    assert rep.converged
    assert rep.iterations == 1
    assert rep.residual < 1e-14
    assert np.max(np.abs(fld.u)) < 1e-14


def test_square_bundle_transform_oracle():
    # u = e^{-x} g(t): w = u^2 has half transform g^2 / (2 + ik), so the
    # -d_xx identity collapses to fhat = -4 g^2 / (2 + ik)
    x = np.linspace(0.0, 30.0, 481)
    t = np.linspace(0.0, 0.5, 9)
    g = 1.0 + t ** 2
    fld = SolutionField(x, t, np.outer(np.exp(-x), g),
                        np.outer(np.exp(-x), 2 * t),
                        traces={"g0": g, "g1": -g})
    bundle = _SquareBundle(fld, k_scale=4.0)
    ks = np.array([0.5, 2.0 - 1.0j], dtype=complex)
    tau = np.array([0.2, 0.5])
    got = bundle.fhat(ks, tau)
    want = -4.0 * (1.0 + tau ** 2)[None, :] ** 2 / (2.0 + 1j * ks)[:, None]
    assert np.max(np.abs(got - want)) < 1e-6


def test_small_data_contraction(ctx):
    scn = small_data_nonlinear()
    x = np.linspace(0.0, 10.0, 32)
    t = np.linspace(0.0, scn.horizon_T, 12)
    fld, rep = picard_solve(ctx, scn, x, t, nseg=256, nreal=48, tol=1e-9)
    assert rep.converged
    assert rep.iterations <= 8
    assert all(r < 0.5 for r in rep.ratios)
    # coarse grid: the audit runs and records its verdict either way
    assert isinstance(rep.diagnostics["aliasing_ok"], bool)
    d = rep.to_dict()
    assert set(d) >= {"iterations", "differences", "ratios", "residual",
                      "converged", "lifespan_value"}
    assert np.all(np.isfinite(fld.u))


def test_lifespan_probe_rows(ctx):
    scn = small_data_nonlinear()
    rows = lifespan_probe(ctx, scn, [0.1, 0.05],
                          x_grid=np.linspace(0.0, 10.0, 32), nt=10,
                          nseg=256, nreal=48)
    assert [r["T"] for r in rows] == [0.1, 0.05]
    assert all(r["converged"] for r in rows)
    # the surrogate shrinks with the horizon
    assert rows[1]["lifespan_value"] < rows[0]["lifespan_value"]
