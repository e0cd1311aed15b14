"""Quadrature rules for the spectral contours.

Geometry (first spectral quadrant region D1, second quadrant D2, both taken
beyond the radius a so that all Robin-determinant zeros and the branch
segment stay inside):

    boundary of D1:  i*L  ->  i*a  (vertical ray, downward)
                     i*a  ->  a    (quarter arc, clockwise in angle)
                     a    ->  K    (real ray, outward)

    boundary of D2:  -K   -> -a    (real ray, inward)
                     -a   -> i*a   (quarter arc)
                     i*a  -> i*L   (vertical ray, upward)

Each segment carries a single Gauss-Legendre rule mapped through its
parametrization; the complex weights include the dk Jacobian and the
orientation, so sum(w * f(nodes)) approximates the contour integral of f.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidTruncation


@lru_cache(maxsize=256)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_segment(z0, z1, n):
    """Gauss-Legendre nodes/weights for the straight segment z0 -> z1."""
    x, w = _leggauss(n)
    mid = 0.5 * (z0 + z1)
    half = 0.5 * (z1 - z0)
    return mid + half * x, half * w.astype(complex)


def gauss_arc(radius, th0, th1, n):
    """Gauss-Legendre rule for the arc radius*e^{i theta}, theta: th0 -> th1."""
    x, w = _leggauss(n)
    mid = 0.5 * (th0 + th1)
    half = 0.5 * (th1 - th0)
    th = mid + half * x
    nodes = radius * np.exp(1j * th)
    weights = 1j * nodes * (half * w)
    return nodes, weights


@dataclass(frozen=True)
class ContourRule:
    """Discretized contour: nodes, complex weights, and truncation metadata."""

    segments: tuple          # (kind, param_start, param_end) per segment
    nodes: np.ndarray
    weights: np.ndarray
    lambda_max: float
    k_max: float
    nodes_per_segment: int

    def integrate(self, values):
        return np.sum(self.weights * values, axis=-1)

    @property
    def rule_id(self):
        key = np.round(self.nodes.view(float), 12).tobytes()
        return hash((key, self.nodes_per_segment))


def default_truncation(a, x_min=1.0, t_min=1.0):
    """Default cutoff max(40, a + 30/(x_min + t_min*a)).

    x_min and t_min are characteristic evaluation scales supplied by the
    caller, not grid minima (grids that touch x=t=0 would make the formula
    meaningless); solvers pass explicit cutoffs and audit the tails.
    """
    return max(40.0, a + 30.0 / (x_min + t_min * a))


def build_boundary_contour(ctx, which, n, lambda_max, k_max):
    """Gauss-Legendre rule along the boundary of region D1 or D2."""
    a = ctx.radius_a
    if lambda_max <= a or k_max <= a:
        raise InvalidTruncation(
            "cutoffs (%g, %g) must exceed the contour radius %g"
            % (lambda_max, k_max, a)
        )
    if n < 8:
        raise ValueError("need at least 8 nodes per segment")
    if which == "D1":
        parts = [
            ("vertical-ray", gauss_segment(1j * lambda_max, 1j * a, n)),
            ("quarter-arc", gauss_arc(a, np.pi / 2, 0.0, n)),
            ("real-ray", gauss_segment(a + 0j, k_max + 0j, n)),
        ]
    elif which == "D2":
        parts = [
            ("real-ray", gauss_segment(-k_max + 0j, -a + 0j, n)),
            ("quarter-arc", gauss_arc(a, np.pi, np.pi / 2, n)),
            ("vertical-ray", gauss_segment(1j * a, 1j * lambda_max, n)),
        ]
    else:
        raise ValueError("which must be 'D1' or 'D2'")
    nodes = np.concatenate([p[1][0] for p in parts])
    weights = np.concatenate([p[1][1] for p in parts])
    segments = tuple(
        (kind, complex(nw[0][0]), complex(nw[0][-1])) for kind, nw in parts
    )
    return ContourRule(
        segments=segments,
        nodes=nodes,
        weights=weights,
        lambda_max=float(lambda_max),
        k_max=float(k_max),
        nodes_per_segment=int(n),
    )


def build_real_line_rule(k_max, n, inner=0.5):
    """Symmetric composite Gauss-Legendre rule on [-k_max, k_max].

    Panels refine toward k=0 (removable-singularity region of the sinc
    kernels): breakpoints 0, inner, 2*inner, ... doubling up to k_max,
    mirrored to the negative axis, n nodes per panel.
    """
    if k_max <= 0:
        raise ValueError("k_max must be positive")
    if n < 16:
        raise ValueError("need at least 16 nodes per panel")
    edges = [0.0]
    step = float(inner)
    while edges[-1] < k_max:
        edges.append(min(edges[-1] + step, float(k_max)))
        step *= 2.0
    nodes, weights, segments = [], [], []
    brk = [-e for e in edges[::-1]] + list(edges[1:])
    for z0, z1 in zip(brk[:-1], brk[1:]):
        nd, wt = gauss_segment(z0 + 0j, z1 + 0j, n)
        nodes.append(nd)
        weights.append(wt)
        segments.append(("real-line", complex(z0), complex(z1)))
    return ContourRule(
        segments=tuple(segments),
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        lambda_max=0.0,
        k_max=float(k_max),
        nodes_per_segment=int(n),
    )
