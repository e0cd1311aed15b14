"""Fixed-point iteration for the quadratically forced half-line problem.

The nonlinear problem u_tt - u_xx + u_xxxx = -d_xx(u^2) is solved by
successive substitution

    u0 = linear solve (w = 0),
    u_{n+1} = S[u0, u1, alpha, beta; -d_xx((u_n)^2)],

where only the w-forcing changes between iterations: each step adds a
zero-data solve driven by the transform identity

    f_hat(k, t) = w_x(0, t) + i k w(0, t) + k^2 w_hat(k, t),    w = u^2,

so no x-derivatives of w are ever formed on the grid.  w_hat is evaluated
by panel quadrature of the iterate's spline surface (all spectral arguments
the solver uses have Im k <= 0, so the integrand never grows).  Convergence
is measured in the discrete solution-space norm; ratios, differences and
the empirical lifespan surrogate are returned in an IterationReport.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .contour import _leggauss
from .errors import NonContraction
from .halfline import (CallableForcing, HalfLineRules, SolutionField,
                       solve_linear_full)
from .norms import solution_space_norm
from .scenario import FunctionSpec, Scenario


@dataclass
class IterationReport:
    """Convergence record of one Picard run."""

    iterations: int = 0
    differences: list = field(default_factory=list)     # d_n = ||u_{n+1}-u_n||
    ratios: list = field(default_factory=list)          # d_{n+1}/d_n
    residual: float = np.inf                            # ||u - S(u)|| at stop
    converged: bool = False
    lifespan_value: float = np.inf    # 2 c_hat sqrt(T) ||u0||, c_hat measured
    surrogate_constant: float = 0.0
    data_norm: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "differences": [float(d) for d in self.differences],
            "ratios": [float(r) for r in self.ratios],
            "residual": float(self.residual),
            "converged": self.converged,
            "lifespan_value": float(self.lifespan_value),
            "surrogate_constant": float(self.surrogate_constant),
            "data_norm": float(self.data_norm),
        }


class _SquareBundle:
    """trace0/trace1/hat interface of w = u^2 built from a grid iterate.

    u is splined over the grid; w_hat(k, tau) integrates the squared spline
    with composite Gauss-Legendre panels sized for the largest |Re k| the
    contours use.  Boundary traces come from the iterate's spectral traces
    g0, g1 (splined in t), not from one-sided grid differences.
    """

    def __init__(self, fld, k_scale, panel=None, n=16):
        x, t = fld.x_grid, fld.t_grid
        self._surf = RectBivariateSpline(x, t, fld.u, kx=3, ky=3)
        self._g0 = CubicSpline(t, fld.traces["g0"])
        self._g1 = CubicSpline(t, fld.traces["g1"])
        if panel is None:
            # ~12 quadrature points per oscillation at the largest wavenumber
            panel = min(0.5, 2 * np.pi / max(k_scale, 1.0) * n / 12.0)
        edges = np.arange(0.0, x[-1] + panel, panel)
        xg, wg = _leggauss(n)
        self._xq = np.concatenate(
            [0.5 * (a + b) + 0.5 * (b - a) * xg
             for a, b in zip(edges[:-1], edges[1:])])
        self._wq = np.concatenate(
            [0.5 * (b - a) * wg for a, b in zip(edges[:-1], edges[1:])])
        self._phase = {}

    def trace0(self, t):
        return self._g0(t) ** 2

    def trace1(self, t):
        return 2.0 * self._g0(t) * self._g1(t)

    def hat(self, k, t):
        k = np.asarray(k, dtype=complex)
        key = k.tobytes()
        if key not in self._phase:
            self._phase[key] = np.exp(
                -1j * np.multiply.outer(k, self._xq)) * self._wq
        wv = self._surf(self._xq, np.atleast_1d(t)) ** 2
        return self._phase[key] @ wv

    def fhat(self, k, tau):
        """Transform of -d_xx w via the boundary-trace identity."""
        k = np.asarray(k, dtype=complex)
        tau = np.atleast_1d(tau)
        return (np.asarray(self.trace1(tau))[None, :]
                + 1j * k[:, None] * np.asarray(self.trace0(tau))[None, :]
                + (k * k)[:, None] * self.hat(k, tau))


def _difference_field(a, b):
    return SolutionField(a.x_grid, a.t_grid, a.u - b.u, a.ut - b.ut)


def _add_fields(a, b):
    traces = {key: a.traces[key] + b.traces[key]
              for key in ("g0", "g1", "g2", "g3")}
    return SolutionField(a.x_grid, a.t_grid, a.u + b.u, a.ut + b.ut,
                         traces=traces)


def _nyquist_audit(fld, diag):
    """Grid Nyquist vs bandwidth of the iterate (aliasing control for w)."""
    h = fld.x_grid[1] - fld.x_grid[0]
    slice0 = fld.u[:, np.argmax(np.max(np.abs(fld.u), axis=0))]
    spec = np.abs(np.fft.rfft(slice0))
    keep = np.where(spec > 1e-6 * (spec.max() + 1e-300))[0]
    k_band = (keep.max() + 1.0 if keep.size else 0.0) \
        * np.pi / (h * slice0.size)
    diag["nyquist"] = np.pi / h
    diag["bandwidth"] = float(k_band)
    diag["aliasing_ok"] = bool(np.pi / h > 2 * k_band)


def picard_solve(ctx, scn, x_grid, t_grid, max_iter=8, tol=1e-8,
                 rules=None, nseg=512, nreal=96, lambda_max=40.0, k_max=None,
                 initial_field=None, norm_s=None):
    """Successive substitution to the nonlinear fixed point.

    Returns (SolutionField, IterationReport); the report is returned even
    on non-convergence.  initial_field restarts from a supplied iterate
    (uniqueness-in-ball witness).  Raises NonContraction when the ratio
    d_{n+1}/d_n stays >= 1 for three consecutive steps.
    """
    t_start = time.perf_counter()
    s = scn.s if norm_s is None else norm_s
    x_grid = np.asarray(x_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if rules is None:
        rules = HalfLineRules.build(ctx, nseg=nseg, nreal=nreal,
                                    lambda_max=lambda_max, k_max=k_max)
    lin = solve_linear_full(ctx, scn, x_grid, t_grid, rules=rules)
    rules_used = rules
    zero = FunctionSpec.zero()
    scn0 = Scenario(gamma=scn.gamma, delta=scn.delta,
                    horizon_T=scn.horizon_T, s=scn.s,
                    u0=zero, u1=zero, alpha=zero, beta=zero)
    k_scale = lin.diagnostics["k_max"]

    report = IterationReport()
    lin_norm, _ = solution_space_norm(lin, s)
    report.data_norm = lin_norm
    _nyquist_audit(lin, report.diagnostics)

    cur = lin if initial_field is None else initial_field
    flat = 0
    for it in range(1, max_iter + 1):
        bundle = _SquareBundle(cur, k_scale)
        corr = solve_linear_full(
            ctx, scn0, x_grid, t_grid, rules=rules_used,
            forcing=CallableForcing(bundle.fhat), compat="waive")
        nxt = _add_fields(lin, corr)
        d, _ = solution_space_norm(_difference_field(nxt, cur), s)
        report.iterations = it
        report.differences.append(d)
        if len(report.differences) >= 2 and report.differences[-2] > 0:
            r = d / report.differences[-2]
            report.ratios.append(r)
            flat = flat + 1 if r >= 1.0 else 0
        cur = nxt
        if d < tol:
            report.converged = True
            report.residual = d
            break
        if flat >= 3:
            report.residual = d
            _finish(report, lin_norm, scn.horizon_T, t_start)
            raise NonContraction(
                "ratios >= 1 for 3 iterations; lifespan value %.3g "
                "(reduce T)" % report.lifespan_value)
    else:
        report.residual = report.differences[-1] if report.differences \
            else 0.0
    if not report.differences:
        report.converged = True
        report.residual = 0.0
    _finish(report, lin_norm, scn.horizon_T, t_start)
    return cur, report


def _finish(report, lin_norm, T, t_start):
    sqT = np.sqrt(T)
    if report.differences and lin_norm > 0:
        # quadratic map heuristic: d1 ~ c sqrt(T) ||u0||^2
        c_hat = report.differences[0] / (sqT * lin_norm ** 2)
        report.surrogate_constant = float(c_hat)
        report.lifespan_value = float(2.0 * c_hat * sqT * lin_norm)
    report.diagnostics["wall_time"] = time.perf_counter() - t_start


def lifespan_probe(ctx, scn, T_list, x_grid=None, nt=24, **kw):
    """Empirical lifespan frontier: convergence record per horizon.

    Returns a list of rows {T, converged, ratio, iterations, lifespan_value};
    non-convergence is a data point, not an error.
    """
    if x_grid is None:
        x_grid = np.linspace(0.0, 10.0, 48)
    rows = []
    for T in T_list:
        scn_T = replace(scn, horizon_T=float(T))
        t_grid = np.linspace(0.0, float(T), nt)
        try:
            _, rep = picard_solve(ctx, scn_T, x_grid, t_grid, **kw)
            ratio = max(rep.ratios) if rep.ratios else 0.0
            rows.append({"T": float(T), "converged": rep.converged,
                         "ratio": float(ratio),
                         "iterations": rep.iterations,
                         "lifespan_value": float(rep.lifespan_value)})
        except NonContraction:
            rows.append({"T": float(T), "converged": False,
                         "ratio": float("inf"), "iterations": kw.get(
                             "max_iter", 8),
                         "lifespan_value": float("inf")})
    return rows
