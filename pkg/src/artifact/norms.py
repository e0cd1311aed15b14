"""Sobolev norms on the line and half line, and solution-space norms.

Line norms use the Fourier characterization

    ||f||_{H^s}^2 = (1/2pi) int_R (1+k^2)^s |F{f}(k)|^2 dk,

half-line norms are extension-realized UPPER BOUNDS of the restriction
(infimum) norm: ||f||_{H^s(0,inf)} <= ||E f||_{H^s(R)} for any extension E.
The physical-space alternative splits s = sigma + beta into an integer part
(sum of derivative L2 norms) and a fractional seminorm

    |f|_beta^2 = int_0^inf int_0^inf |f(x+z)-f(x)|^2 / z^{1+2 beta} dz dx,

with the z integral split at z=1 (near field controlled by f', far field by
plain L2).  Solution-space norms combine sup-in-time Sobolev slices of u and
dt u; the Y variant adds an L4-in-time sup-in-space component.
"""

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .contour import _leggauss, build_real_line_rule
from .errors import TailAudit
from .halfline import ExtensionOperator, extend_halfline
from .scenario import FunctionSpec


def _line_transform_of(f, k):
    if hasattr(f, "line_ft"):
        return np.asarray(f.line_ft(k), dtype=complex)
    raise TypeError("norm argument must expose line_ft")


def sobolev_norm_line(f, s, k_max=60.0, n=160):
    """H^s(R) norm by the weighted-transform quadrature, with tail audit."""
    rule = build_real_line_rule(float(k_max), int(n))
    k = rule.nodes.real
    F = _line_transform_of(f, k)
    vals = (1.0 + k * k) ** s * np.abs(F) ** 2
    contrib = (rule.weights.real * vals)
    total = np.sum(contrib) / (2 * np.pi)
    # last panel on each side carries the tail estimate
    m = rule.nodes_per_segment
    edge = (np.sum(contrib[:m]) + np.sum(contrib[-m:])) / (2 * np.pi)
    if total > 0 and edge / total > 1e-9:
        warnings.warn(
            "H^s tail fraction %.2e at k_max=%g" % (edge / total, k_max),
            TailAudit,
        )
    return float(np.sqrt(max(total, 0.0)))


def sobolev_norm_halfline(f, s, op=None, k_max=60.0, n=160):
    """Extension upper bound for the H^s(0,inf) restriction norm.

    The returned value is >= the infimum norm; the gap depends on the
    extension order and is not quantified here.
    """
    if op is None:
        op = ExtensionOperator.build(max(4, int(np.ceil(s)) + 1))
    if op.order < int(np.ceil(s)):
        raise ValueError("extension order %d below ceil(s)=%d"
                         % (op.order, int(np.ceil(s))))
    return sobolev_norm_line(extend_halfline(f, op), s, k_max=k_max, n=n)


def _halfline_l2(g, x_max=40.0, n=48, panels=32):
    edges = np.linspace(0.0, x_max, panels + 1)
    xg, wg = _leggauss(n)
    total = 0.0
    for z0, z1 in zip(edges[:-1], edges[1:]):
        xx = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * xg
        ww = 0.5 * (z1 - z0) * wg
        total += float(np.sum(ww * np.abs(g(xx)) ** 2))
    return np.sqrt(total)


def fractional_seminorm(f, sigma, beta, x_max=40.0, z_max=None):
    """|d^sigma f|_beta on the half line.

    x_max bounds the support resolved by the x quadrature; z runs on graded
    geometric panels up to z_max (default max(x_max, 40)) and is closed by
    the analytic far-field term (g assumed negligible beyond x_max + z_max).
    beta=0 returns 0 by definition.
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0,1)")
    if beta == 0.0:
        return 0.0
    if z_max is None:
        z_max = max(x_max, 40.0)
    g = f.derivative_chain(sigma) if isinstance(f, FunctionSpec) else f
    z_edges = np.geomspace(1e-7, z_max, 37)
    xg, wg = _leggauss(32)
    x_edges = np.linspace(0.0, x_max, 17)
    xs = np.concatenate([0.5 * (a + b) + 0.5 * (b - a) * xg
                         for a, b in zip(x_edges[:-1], x_edges[1:])])
    xw = np.concatenate([0.5 * (b - a) * wg
                         for a, b in zip(x_edges[:-1], x_edges[1:])])
    gx = np.asarray(g(xs), dtype=float)
    total = 0.0
    for z0, z1 in zip(z_edges[:-1], z_edges[1:]):
        zz = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * xg
        zw = 0.5 * (z1 - z0) * wg
        diff = np.asarray(g(xs[None, :] + zz[:, None]), dtype=float) \
            - gx[None, :]
        inner = diff ** 2 @ xw
        total += float(np.sum(zw * inner / zz ** (1.0 + 2.0 * beta)))
    # z > z_max: |g(x+z)-g(x)|^2 ~ g(x)^2 there
    total += float(gx ** 2 @ xw) * z_max ** (-2.0 * beta) / (2.0 * beta)
    return float(np.sqrt(total))


def physical_halfline_norm(f, s, x_max=40.0):
    """Physical-space H^s(0,inf): sum of derivative L2 norms plus the
    fractional seminorm of the top derivative (equivalent norm, constants
    not tracked)."""
    sigma = int(np.floor(s))
    beta = s - sigma
    total = sum(_halfline_l2(f.derivative_chain(j), x_max=x_max)
                for j in range(sigma + 1))
    if beta > 0:
        total += fractional_seminorm(f, sigma, beta, x_max=x_max)
    return float(total)


@lru_cache(maxsize=32)
def _seminorm_weight(beta):
    """D(beta) = int_0^inf (2-2cos u)/u^{1+2beta} du, so that the one-sided
    seminorm of g on the whole line equals D(beta)/2pi * int |k|^{2beta}
    |F g|^2 dk."""
    from scipy.integrate import quad
    near = quad(lambda u: (2.0 - 2.0 * np.cos(u)) / u ** (1 + 2 * beta),
                0.0, 1.0)[0]
    tail_plain = 1.0 / beta
    tail_osc = quad(lambda u: 2.0 / u ** (1 + 2 * beta), 1.0, np.inf,
                    weight="cos", wvar=1.0)[0]
    return near + tail_plain - tail_osc


def physical_equiv_norm(f, s, x_max=40.0):
    """Square-summed physical norm with the Plancherel-matched fractional
    weight: corresponds to the multiplier 1+k^2+...+k^{2 sigma}+|k|^{2s},
    which brackets (1+k^2)^s tightly (used for the cross-method check)."""
    sigma = int(np.floor(s))
    beta = s - sigma
    total = sum(_halfline_l2(f.derivative_chain(j), x_max=x_max) ** 2
                for j in range(sigma + 1))
    if beta > 0:
        total += fractional_seminorm(f, sigma, beta, x_max=x_max) ** 2 \
            / _seminorm_weight(beta)
    return float(np.sqrt(total))


@dataclass
class NormReport:
    """Named norm entries with method provenance tags."""

    entries: dict = field(default_factory=dict)

    def add(self, name, value, method, upper_bound=False):
        self.entries[name] = {"value": float(value), "method": method,
                              "upper_bound": bool(upper_bound)}
        return self.entries[name]

    def to_dict(self):
        return dict(self.entries)


def _fd_derivative(vals, h):
    """Fourth-order interior first derivative, one-sided at the ends."""
    v = np.asarray(vals, dtype=float)
    out = np.gradient(v, h, edge_order=2)
    if v.size >= 7:
        out[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    return out


def slice_norm(x_grid, vals, s):
    """Discrete H^s(0,inf) of one grid slice (integer s via derivative
    L2 sums with finite differences; fractional part via the tabulated
    seminorm)."""
    x_grid = np.asarray(x_grid, dtype=float)
    h = x_grid[1] - x_grid[0]
    sigma = int(np.floor(s))
    beta = s - sigma
    v = np.asarray(vals, dtype=float)
    total = 0.0
    cur = v
    for j in range(sigma + 1):
        total += float(np.sqrt(np.trapezoid(cur ** 2, x_grid)))
        if j < sigma:
            cur = _fd_derivative(cur, h)
    if beta > 0:
        spec = FunctionSpec.tabulated(x_grid, cur)
        total += fractional_seminorm(spec, 0, beta, x_max=float(x_grid[-1]))
    return total


def solution_space_norm(fld, s, which="X", report=None):
    """X or Y space norm of a grid SolutionField.

    X: sup_t ||u(.,t)||_{H^s} + sup_t ||dt u(.,t)||_{H^{s-2}};
    Y adds the L4-in-time sup-in-space component.  Orders below zero are
    clamped to L2 (surrogate upper bound for the discrete field).
    """
    if which not in ("X", "Y"):
        raise ValueError("which must be 'X' or 'Y'")
    if report is None:
        report = NormReport()
    x = fld.x_grid
    t = fld.t_grid
    su = max(s, 0.0)
    sut = max(s - 2.0, 0.0)
    nu = max(slice_norm(x, fld.u[:, j].real, su) for j in range(t.size))
    nut = max(slice_norm(x, fld.ut[:, j].real, sut) for j in range(t.size))
    report.add("sup_t H^%g of u" % su, nu, "physical", upper_bound=True)
    report.add("sup_t H^%g of ut" % sut, nut, "physical", upper_bound=True)
    total = nu + nut
    if which == "Y":
        sup_x = np.max(np.abs(fld.u.real), axis=0)
        l4 = float(np.trapezoid(sup_x ** 4, t) ** 0.25)
        report.add("L4_t sup_x of u", l4, "physical")
        total += l4
    report.add("%s-norm (s=%g)" % (which, s), total, "physical",
               upper_bound=True)
    return total, report


def data_norm_report(scn, s, op=None, report=None):
    """Data-side norms entering the linear estimates.

    u0 in H^s, u1 in H^{s-2} (clamped at L2 below order 0), boundary
    signals in H^{(2s-1)/4} and H^{(2s-3)/4}; signals are treated as
    half-line functions of t (pulse families with closed-form transforms
    extend by themselves).
    """
    if report is None:
        report = NormReport()
    if op is None:
        op = ExtensionOperator.build(max(4, int(np.ceil(s)) + 1))
    report.add("u0 H^%g" % s, sobolev_norm_halfline(scn.u0, s, op=op),
               "fourier", upper_bound=True)
    s1 = max(s - 2.0, 0.0)
    report.add("u1 H^%g" % s1, sobolev_norm_halfline(scn.u1, s1, op=op),
               "fourier", upper_bound=True)
    sa = max((2 * s - 1.0) / 4.0, 0.0)
    sb = max((2 * s - 3.0) / 4.0, 0.0)
    report.add("alpha H^%g" % sa,
               sobolev_norm_halfline(scn.alpha, sa, op=op),
               "fourier", upper_bound=True)
    report.add("beta H^%g" % sb,
               sobolev_norm_halfline(scn.beta, sb, op=op),
               "fourier", upper_bound=True)
    return report
