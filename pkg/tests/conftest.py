import numpy as np
import pytest

from artifact.dispersion import DispersionContext
from artifact.scenario import FunctionSpec as FS
from artifact.scenario import Scenario


@pytest.fixture(scope="session")
def ctx():
    return DispersionContext.build(1.0, 0.0, horizon_T=0.5)


def manufactured_exp():
    """u = e^{-x}(1+t^2) with the matching Robin signals and forcing."""
    E = FS.exp_decay(1.0, 1.0)
    return Scenario(gamma=1.0, delta=0.0, horizon_T=0.5, s=4.0,
                    u0=E, u1=FS.zero(),
                    alpha=FS.poly_time([0.0, 0.0, 0.0]),
                    beta=FS.poly_time([1.0, 0.0, 1.0]),
                    forcing=((E.scaled(2.0), FS.poly_time([1.0])),))


def manufactured_gaussian():
    """u = G(x) cos(2t), G a Gaussian bump centered at 3."""
    G = FS.gaussian(1.0, 3.0, 0.8)
    X = FS.sum_of((G.scaled(-4.0), G.derivative_chain(2).scaled(-1.0),
                   G.derivative_chain(4)))
    z = np.array(0.0)
    a0 = float(G.derivative()(z)) + float(G(z))
    b0 = float(G.derivative_chain(2)(z))
    return Scenario(gamma=1.0, delta=0.0, horizon_T=0.5, s=4.0,
                    u0=G, u1=FS.zero(),
                    alpha=FS.cos_time(a0, 2.0), beta=FS.cos_time(b0, 2.0),
                    forcing=((X, FS.cos_time(1.0, 2.0)),))


def small_data_nonlinear():
    G = FS.gaussian(0.25, 3.0, 0.8)
    z = np.array(0.0)
    a0 = float(G.derivative()(z)) + float(G(z))
    b0 = float(G.derivative_chain(2)(z))
    return Scenario(gamma=1.0, delta=0.0, horizon_T=0.1, s=2.0,
                    u0=G, u1=FS.zero(),
                    alpha=FS.cos_time(a0, 2.0), beta=FS.cos_time(b0, 2.0))
