import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.dispersion import (DispersionContext, choose_radius_a,
                                 cut_distance, delta_product_poly,
                                 find_delta_zeros, lambda1_imag,
                                 lambda1_real, nu, omega, sqrt_one_plus_k2)
from artifact.errors import BranchCutViolation


def test_root_pins():
    assert abs(sqrt_one_plus_k2(2.0) - np.sqrt(5)) < 1e-14
    assert abs(sqrt_one_plus_k2(2j) - 1j * np.sqrt(3)) < 1e-14
    assert abs(sqrt_one_plus_k2(-2.0) - (-np.sqrt(5))) < 1e-14


def test_omega_real_samples():
    for k in (0.5, 1.0, 2.0, -0.5, -1.0, 3.7):
        want = abs(k) * np.sqrt(1 + k * k)
        # omega(k) = k sqrt(1+k^2) with the odd branch; |.| on both sides
        assert abs(abs(omega(k)) - want) < 1e-12 * (1 + want)


@pytest.mark.parametrize("lam", [1.5, 2.0, 5.0])
def test_imaginary_ray_values(lam):
    r = np.sqrt(lam * lam - 1.0)
    assert abs(omega(1j * lam) - (-lam * r)) < 1e-12 * lam * r
    assert abs(nu(1j * lam) - (-r)) < 1e-12 * r


def test_symmetry_suite():
    rng = np.random.default_rng(11)
    pts = []
    while len(pts) < 200:
        k = rng.uniform(-6, 6) + 1j * rng.uniform(-6, 6)
        if cut_distance(k) > 0.1 and cut_distance(-k) > 0.1:
            pts.append(k)
    k = np.array(pts)
    n = nu(k)
    tol = 1e-12
    assert np.max(np.abs(omega(-k) - omega(k))
                  / (1 + np.abs(omega(k)))) < tol
    for sgn in (1, -1):
        arg = sgn * n
        ok = cut_distance(arg) > 1e-9
        assert np.max(np.abs(omega(arg[ok]) + omega(k[ok]))
                      / (1 + np.abs(omega(k[ok])))) < tol
        assert np.max(np.abs(nu(arg[ok]) + sgn * k[ok])
                      / (1 + np.abs(k[ok]))) < tol


def test_branch_cut_rejected():
    with pytest.raises(BranchCutViolation):
        sqrt_one_plus_k2(0.5j)


@given(st.complex_numbers(max_magnitude=8, allow_nan=False,
                          allow_infinity=False))
@settings(max_examples=200, deadline=None)
def test_omega_square_identity(k):
    if cut_distance(k) < 0.05:
        return
    w = omega(k)
    assert abs(w * w - k * k * (1 + k * k)) < 1e-9 * (1 + abs(k)) ** 4
    v = nu(k)
    assert abs(v * v + 1 + k * k) < 1e-9 * (1 + abs(k)) ** 2


def test_delta_zeros_standard_config():
    zeros = find_delta_zeros(1.0, 0.0, 6.0)
    coeffs = delta_product_poly(1.0, 0.0)
    for z in zeros:
        assert abs(np.polyval(coeffs, z)) < 1e-9
    ctx = DispersionContext.build(1.0, 0.0)
    assert abs(ctx.radius_a - 5.0047370458302325) < 1e-10
    assert all(abs(z) < ctx.radius_a for z in zeros)


def test_lambda_bounds_tend_to_two():
    k = np.array([50.0, 500.0, 5000.0])
    assert np.max(np.abs(lambda1_real(k, 1.0, 0.0) - 2.0)) < 0.1
    assert np.max(np.abs(lambda1_imag(k, 1.0, 0.0) - 2.0)) < 0.1


def test_choose_radius_margin_validation():
    with pytest.raises(ValueError):
        choose_radius_a([], 0.5)
