"""Whole-line solvers for U_tt - U_xx + U_xxxx = F.

Spectrally, each Fourier mode obeys d_tt U_hat + omega(k)^2 U_hat = F_hat
with omega = |k| sqrt(1+k^2) on the real line, so

    U(x,t) = (1/2pi) int_R e^{ikx} [ cos(omega t) FU0
                                     + t sinc(omega t) FU1 ] dk

plus, for the forced problem with zero initial data,

    Z(x,t) = (1/2pi) int_R e^{ikx} int_0^t (t-tau) sinc(omega (t-tau))
                                            F_hat(k,tau) dtau dk,

where sinc(z) = sin(z)/z.  The cosine/sinc regrouping keeps the k=0
neighbourhood removable; the Duhamel route composes homogeneous solves with
a fixed Gauss-Legendre rule in tau and must agree with the direct route.
"""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .contour import _leggauss
from .errors import MethodMismatch, TruncationAudit
from .scenario import FunctionSpec, _gl_on, _phase_nodes


@dataclass
class SolutionField:
    """Grid solution: u and dt u, optional traces and diagnostics."""

    x_grid: np.ndarray
    t_grid: np.ndarray
    u: np.ndarray            # shape (nx, nt)
    ut: np.ndarray
    traces: dict = field(default_factory=dict)   # g0..g3, robin residuals
    diagnostics: dict = field(default_factory=dict)

    def interp(self, x, t):
        """Bilinear read-off for verification probes."""
        ix = np.searchsorted(self.x_grid, x)
        it = np.searchsorted(self.t_grid, t)
        return self.u[min(ix, len(self.x_grid) - 1),
                      min(it, len(self.t_grid) - 1)]


@dataclass(frozen=True)
class LineData:
    """Whole-line problem data; F is a tuple of separable (X(x), T(t))."""

    U0: object = None
    U1: object = None
    F: tuple = ()


def _sinc(z):
    """sin(z)/z, stable at 0 (np.sinc is sin(pi x)/(pi x))."""
    return np.sinc(np.asarray(z) / np.pi)


def _omega_real(k):
    """omega on the real line: |k| sqrt(1+k^2) (continuous across 0)."""
    k = np.asarray(k, dtype=float)
    return np.abs(k) * np.sqrt(1.0 + k * k)


def _line_transform(spec, k):
    if spec is None:
        return np.zeros(np.shape(k), dtype=complex)
    return np.asarray(spec.line_ft(k), dtype=complex)


def _audit_tail(weights, coeffs, label, diagnostics, frac=1e-9):
    total = np.max(np.abs(np.cumsum(weights * coeffs)))
    edge = np.max(np.abs((weights * coeffs)[-8:])) if coeffs.size >= 8 else 0.0
    ratio = edge / (total + 1e-300)
    diagnostics.setdefault("tail_ratios", {})[label] = float(ratio)
    if ratio > frac:
        warnings.warn(
            "truncation tail ratio %.2e for %s" % (ratio, label),
            TruncationAudit,
        )


def homogeneous_from_transforms(F0, F1, rule, x_grid, t_grid):
    """(u, ut) of the homogeneous problem given nodal transforms F0, F1."""
    k = rule.nodes.real
    w = rule.weights
    om = _omega_real(k)
    x_grid = np.asarray(x_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    phase = np.exp(1j * np.outer(x_grid, k)) * w / (2 * np.pi)
    wt = np.multiply.outer(om, t_grid)
    cu = np.cos(wt) * F0[:, None] \
        + t_grid[None, :] * _sinc(wt) * F1[:, None]
    cut = -om[:, None] * np.sin(wt) * F0[:, None] + np.cos(wt) * F1[:, None]
    return phase @ cu, phase @ cut


def solve_cauchy_homogeneous(data, rule, x_grid, t_grid):
    """S[U0, U1; 0] evaluated on the grid."""
    t0 = time.perf_counter()
    if data.F:
        raise ValueError("homogeneous solver requires F absent")
    k = rule.nodes.real
    F0 = _line_transform(data.U0, k)
    F1 = _line_transform(data.U1, k)
    u, ut = homogeneous_from_transforms(F0, F1, rule, x_grid, t_grid)
    diag = {"wall_time": time.perf_counter() - t0}
    _audit_tail(rule.weights, F0 + F1, "cauchy-hom", diag)
    return SolutionField(np.asarray(x_grid, float), np.asarray(t_grid, float),
                         u, ut, diagnostics=diag)


def sinc_time_integrals(ft, om, t_grid):
    """S = int_0^t (t-tau) sinc(om(t-tau)) ft(tau) dtau and its time
    derivative C (cosine kernel), for real frequencies om.

    Recombined from the two folded exponentials where |om| >= 1/2 (exact
    for closed-form time families); small |om| uses plain quadrature to
    avoid the 1/(2i om) division.
    """
    from .scenario import folded_time_integrals

    om = np.asarray(om, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    Ap = folded_time_integrals(ft, om, t_grid, +1)
    Am = folded_time_integrals(ft, om, t_grid, -1)
    big = np.abs(om) >= 0.5
    safe = np.where(big, om, 1.0)
    S = np.where(big[:, None], (Ap - Am) / (2j * safe[:, None]), 0.0)
    C = 0.5 * (Ap + Am)
    if np.any(~big):
        idx = np.where(~big)[0]
        C[idx, :] = 0.0
        for j, t in enumerate(t_grid):
            if t == 0.0:
                continue
            tau, wq = _gl_on(0.0, float(t), 48)
            Tv = np.asarray(ft(tau), dtype=complex)
            dt = t - tau
            wdt = np.multiply.outer(om[idx], dt)
            S[idx, j] = (dt[None, :] * _sinc(wdt)) @ (wq * Tv)
            C[idx, j] = np.cos(wdt) @ (wq * Tv)
    return S, C


def _forced_direct(data, rule, x_grid, t_grid):
    k = rule.nodes.real
    w = rule.weights
    om = _omega_real(k)
    x_grid = np.asarray(x_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    phase = np.exp(1j * np.outer(x_grid, k)) * w / (2 * np.pi)
    cu = np.zeros((k.size, t_grid.size), dtype=complex)
    cut = np.zeros_like(cu)
    for fx, ft in data.F:
        X = np.asarray(fx.line_ft(k), dtype=complex)
        S, C = sinc_time_integrals(ft, om, t_grid)
        cu += X[:, None] * S
        cut += X[:, None] * C
    return phase @ cu, phase @ cut


def _forced_duhamel(data, rule, x_grid, t_grid, order=None):
    k = rule.nodes.real
    w = rule.weights
    om = _omega_real(k)
    x_grid = np.asarray(x_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    phase = np.exp(1j * np.outer(x_grid, k)) * w / (2 * np.pi)
    cu = np.zeros((k.size, t_grid.size), dtype=complex)
    cut = np.zeros_like(cu)
    Xs = [np.asarray(fx.line_ft(k), dtype=complex) for fx, _ in data.F]
    for j, t in enumerate(t_grid):
        if t == 0.0:
            continue
        n = order if order is not None else _phase_nodes(np.max(om) * t)
        tau, wq = _gl_on(0.0, float(t), n)
        for (fx, ft), X in zip(data.F, Xs):
            Tv = np.asarray(ft(tau), dtype=complex)
            dt = t - tau
            # homogeneous solve with U1-slot data F(., tau), shifted time t-tau
            cu[:, j] += X * ((dt[None, :] * _sinc(np.multiply.outer(om, dt)))
                             @ (wq * Tv))
            cut[:, j] += X * (np.cos(np.multiply.outer(om, dt)) @ (wq * Tv))
    return phase @ cu, phase @ cut


def solve_cauchy_forced(data, rule, x_grid, t_grid, method="direct",
                        check_against=None, mismatch_tol=1e-8):
    """S[0, 0; F]: zero-initial-data forced solve.

    method 'direct' evaluates the double spectral integral; 'duhamel'
    composes homogeneous solves with a fixed tau rule.  If check_against is
    the other method's field, disagreement beyond mismatch_tol raises
    MethodMismatch (exposed, never averaged).
    """
    t0 = time.perf_counter()
    if not data.F:
        x_grid = np.asarray(x_grid, float)
        t_grid = np.asarray(t_grid, float)
        z = np.zeros((x_grid.size, t_grid.size), dtype=complex)
        return SolutionField(x_grid, t_grid, z, z.copy())
    if method == "direct":
        u, ut = _forced_direct(data, rule, x_grid, t_grid)
    elif method == "duhamel":
        u, ut = _forced_duhamel(data, rule, x_grid, t_grid)
    else:
        raise ValueError("method must be 'direct' or 'duhamel'")
    fld = SolutionField(np.asarray(x_grid, float), np.asarray(t_grid, float),
                        u, ut, diagnostics={"wall_time": time.perf_counter() - t0,
                                            "method": method})
    if check_against is not None:
        gap = np.max(np.abs(fld.u - check_against.u))
        if gap > mismatch_tol:
            raise MethodMismatch(
                "direct/duhamel disagree by %.3e > %.1e" % (gap, mismatch_tol))
        fld.diagnostics["method_gap"] = float(gap)
    return fld


def solve_cauchy(data, rule, x_grid, t_grid, method="direct"):
    """General initial data + forcing by superposition."""
    hom = solve_cauchy_homogeneous(
        LineData(U0=data.U0, U1=data.U1), rule, x_grid, t_grid)
    if not data.F:
        return hom
    forc = solve_cauchy_forced(
        LineData(F=data.F), rule, x_grid, t_grid, method=method)
    return SolutionField(hom.x_grid, hom.t_grid, hom.u + forc.u,
                         hom.ut + forc.ut,
                         diagnostics={**hom.diagnostics, **forc.diagnostics})


def lemma_ivp_shift(U0, calU1, j, rule, x_grid, t_grid):
    """dt S[V0j, V1j; 0] with F{V0j} = (ik)^{j-1}/(1+k^2) F{calU1},
    V1j = d_x^j U0; equals d_x^j S[U0, calU1'; 0] (tested, not assumed)."""
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    k = rule.nodes.real
    F0 = (1j * k) ** (j - 1) / (1.0 + k * k) * _line_transform(calU1, k)
    V1j = U0
    for _ in range(j):
        V1j = V1j.derivative()
    F1 = _line_transform(V1j, k)
    u, ut = homogeneous_from_transforms(F0, F1, rule, x_grid, t_grid)
    return SolutionField(np.asarray(x_grid, float), np.asarray(t_grid, float),
                         ut, np.zeros_like(ut))
