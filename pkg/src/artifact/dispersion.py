"""Dispersion relation, branch bookkeeping and Robin determinants.

The square root (1+k^2)^{1/2} is cut along the segment B = i[-1,1] and is
realized as the product of two square roots anchored at the branch points
+-i.  Each factor uses the argument range [-pi/2, 3*pi/2), i.e. the angle is
measured counterclockwise starting from the ray pointing straight down; the
individual cuts (vertical rays below +i and below -i) overlap below -i and
cancel there, leaving exactly the segment B.

Pinned values that define the branch:

    sqrt_one_plus_k2(2)   = +sqrt(5)
    sqrt_one_plus_k2(2i)  = i*sqrt(3)
    sqrt_one_plus_k2(-2)  = -sqrt(5)

so that on the real axis omega(k) = k*(1+k^2)^{1/2} = |k|*sqrt(1+k^2) is
continuous across k=0, and on the imaginary axis (lambda > 1)

    omega(i*lambda) = -lambda*sqrt(lambda^2-1),
    nu(i*lambda)    = -sqrt(lambda^2-1).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AsymptoteViolation,
    BranchCutViolation,
    ConditioningWarning,
    ZeroCountMismatch,
)

EPS_CUT = 1e-12


def cut_distance(k):
    """Distance from k to the branch segment i[-1,1]."""
    k = np.asarray(k, dtype=complex)
    return np.hypot(k.real, np.maximum(np.abs(k.imag) - 1.0, 0.0))


def _check_off_cut(k, eps_cut):
    if np.any(cut_distance(k) < eps_cut):
        raise BranchCutViolation(
            "spectral point within %g of the branch segment i[-1,1]" % eps_cut
        )


def _halfplane_angle(z):
    """arg(z) in [-pi/2, 3*pi/2): cut along the ray pointing straight down."""
    th = np.angle(z)
    return np.where(th < -np.pi / 2, th + 2 * np.pi, th)


def sqrt_one_plus_k2(k, eps_cut=EPS_CUT):
    """The cut square root (1+k^2)^{1/2}; see module docstring for the branch."""
    scalar = np.isscalar(k) or (isinstance(k, np.ndarray) and k.ndim == 0)
    k = np.asarray(k, dtype=complex)
    _check_off_cut(k, eps_cut)
    th1 = _halfplane_angle(k - 1j)
    th2 = _halfplane_angle(k + 1j)
    mod = np.sqrt(np.abs(k - 1j) * np.abs(k + 1j))
    out = mod * np.exp(0.5j * (th1 + th2))
    return complex(out) if scalar else out


def omega(k, eps_cut=EPS_CUT):
    """Dispersion relation omega(k) = k*(1+k^2)^{1/2}."""
    return np.asarray(k, dtype=complex) * sqrt_one_plus_k2(k, eps_cut) \
        if not np.isscalar(k) else k * sqrt_one_plus_k2(k, eps_cut)


def nu(k, eps_cut=EPS_CUT):
    """nu(k) = i*(1+k^2)^{1/2}."""
    return 1j * sqrt_one_plus_k2(k, eps_cut)


def delta1(k, gamma, delta, eps_cut=EPS_CUT):
    """Robin determinant Delta_1(k) = -gamma*(k+nu) + i*(gamma*delta - k*nu)."""
    n = nu(k, eps_cut)
    return -gamma * (k + n) + 1j * (gamma * delta - k * n)


def delta2(k, gamma, delta, eps_cut=EPS_CUT):
    """Robin determinant Delta_2(k) = -gamma*(k-nu) + i*(gamma*delta + k*nu)."""
    n = nu(k, eps_cut)
    return -gamma * (k - n) + 1j * (gamma * delta + k * n)


def delta_product_poly(gamma, delta):
    """Coefficients (highest degree first) of Delta_1*Delta_2 as a quartic.

    Delta_1*Delta_2 = gamma^2*(k-i*delta)^2 + (1+k^2)*(gamma+i*k)^2,
    which is branch-free because only nu^2 = -(1+k^2) survives.
    """
    return np.array(
        [
            -1.0,
            2j * gamma,
            2.0 * gamma**2 - 1.0,
            2j * gamma * (1.0 - gamma * delta),
            gamma**2 * (1.0 - delta**2),
        ],
        dtype=complex,
    )


def _winding_count(coeffs, radius, n_nodes=4096):
    """Zeros of the polynomial inside |k|=radius by trapezoidal winding count."""
    th = np.linspace(0.0, 2 * np.pi, n_nodes, endpoint=False)
    vals = np.polyval(coeffs, radius * np.exp(1j * th))
    total = np.angle(vals[0] / vals[-1])  # closing increment
    total += np.sum(np.angle(vals[1:] / vals[:-1]))
    return int(round(total / (2 * np.pi)))


def find_delta_zeros(gamma, delta, search_radius):
    """All zeros of Delta_1*Delta_2 with |k| <= search_radius.

    The product is the branch-free quartic of delta_product_poly; its roots
    are found directly, polished by Newton, and the count is cross-checked
    against an argument-principle winding evaluation on the search circle.
    Zeros sitting at the branch points +-i are artifacts of the nu^2
    factorization (nu itself vanishes there) and are dropped.
    """
    if search_radius < 2:
        raise ValueError("search_radius must be >= 2")
    coeffs = delta_product_poly(gamma, delta)
    lead = np.argmax(np.abs(coeffs) > 0)
    coeffs = coeffs[lead:]
    if coeffs.size <= 1:
        raise ValueError("degenerate determinant product")
    roots = np.roots(coeffs)
    dp = np.polyder(coeffs)
    for _ in range(3):  # Newton polish
        f = np.polyval(coeffs, roots)
        df = np.polyval(dp, roots)
        step = np.where(np.abs(df) > 0, f / np.where(df == 0, 1, df), 0)
        roots = roots - step
    inside = roots[np.abs(roots) <= search_radius * (1 + 1e-12)]
    expected = _winding_count(coeffs, search_radius)
    if inside.size < expected:
        raise ZeroCountMismatch(
            "winding count %d but only %d refined roots" % (expected, inside.size)
        )
    # drop branch-point artifacts, then dedupe multiple roots
    inside = inside[np.minimum(np.abs(inside - 1j), np.abs(inside + 1j)) > 1e-8]
    out = []
    for z in inside:
        if all(abs(z - w) > 1e-8 for w in out):
            out.append(complex(z))
    for z in out:
        if abs(np.polyval(coeffs, z)) > 1e-10 * (1 + abs(z)) ** 4:
            raise ZeroCountMismatch("root residual too large at %r" % z)
    return sorted(out, key=lambda z: (abs(z), z.real, z.imag))


def lambda1_real(k, gamma, delta):
    """Kernel-size bound along the real ray; tends to 2 as k grows."""
    k = np.asarray(k, dtype=float)
    r = np.sqrt(1.0 + k**2)
    num = (1.0 + 2.0 * k**2) * (1.0 + k**2 + delta**2 - 2.0 * delta * r)
    den = k**2 * (r - gamma) ** 2 + gamma**2 * (delta - r) ** 2
    return num / den


def lambda1_imag(lam, gamma, delta):
    """Kernel-size bound along the imaginary ray (lambda > 1); tends to 2."""
    lam = np.asarray(lam, dtype=float)
    num = (2.0 * lam**2 - 1.0) * (lam**2 - 1.0 + delta**2)
    den = (lam**2 - 1.0) * (gamma - lam) ** 2 + gamma**2 * (delta - lam) ** 2
    return num / den


def choose_radius_a(zeros, margin, gamma=0.0, delta=0.0, horizon_T=None,
                    max_growth=400):
    """Contour radius: clear the Delta zeros, then enforce the Lambda budget.

    a = margin * max(1, max|zeros|), raised geometrically until both ray
    bounds satisfy Lambda_1 <= 3 at a.  Emits ConditioningWarning when the
    arc growth budget a^2*T > 30 is exceeded.
    """
    if margin <= 1:
        raise ValueError("margin must be > 1")
    zmax = max([abs(z) for z in zeros], default=0.0)
    a = margin * max(1.0, zmax)
    grew = 0
    while (lambda1_real(a, gamma, delta) > 3.0
           or lambda1_imag(a, gamma, delta) > 3.0):
        a *= 1.1
        grew += 1
        if grew > max_growth:
            raise AsymptoteViolation(
                "Lambda budget not reached for gamma=%g delta=%g" % (gamma, delta)
            )
    if horizon_T is not None and a * a * horizon_T > 30:
        warnings.warn(
            "a^2*T = %.3g exceeds the arc conditioning budget 30"
            % (a * a * horizon_T),
            ConditioningWarning,
        )
    return a


@dataclass(frozen=True)
class DispersionContext:
    """Frozen per-(gamma, delta) spectral context shared by all solvers."""

    gamma: float
    delta: float
    radius_a: float
    delta_zeros: tuple = field(default_factory=tuple)

    @classmethod
    def build(cls, gamma, delta, margin=2.0, search_radius=6.0, horizon_T=None):
        zeros = find_delta_zeros(gamma, delta, search_radius)
        a = choose_radius_a(zeros, margin, gamma, delta, horizon_T)
        return cls(gamma=float(gamma), delta=float(delta), radius_a=float(a),
                   delta_zeros=tuple(zeros))

    def delta1(self, k):
        return delta1(k, self.gamma, self.delta)

    def delta2(self, k):
        return delta2(k, self.gamma, self.delta)
