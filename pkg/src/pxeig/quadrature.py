"""Quadrature rules on the reference interval [0, 1] and triangle (0,0),(1,0),(0,1)."""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import roots_jacobi


@dataclass(frozen=True)
class QuadratureRule:
    """Points in reference coordinates and weights summing to the reference measure.

    ``points`` has shape ``(n, dim)``; ``degree`` is the highest total
    polynomial degree integrated exactly.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return len(self.weights)


def gauss_interval(n_points=4):
    """Gauss-Legendre rule with ``n_points`` nodes mapped to [0, 1]."""
    if n_points < 1:
        raise ValueError("need at least one quadrature point")
    x, w = np.polynomial.legendre.leggauss(n_points)
    return QuadratureRule(points=(0.5 * (x + 1.0))[:, None], weights=0.5 * w,
                          degree=2 * n_points - 1)


def _dunavant5():
    r = math.sqrt(15.0)
    a1, b1 = (9 - 2 * r) / 21, (6 + r) / 21
    a2, b2 = (9 + 2 * r) / 21, (6 - r) / 21
    bary = [(1 / 3, 1 / 3, 1 / 3),
            (a1, b1, b1), (b1, a1, b1), (b1, b1, a1),
            (a2, b2, b2), (b2, a2, b2), (b2, b2, a2)]
    w = [9 / 40] + [(155 + r) / 1200] * 3 + [(155 - r) / 1200] * 3
    pts = np.array([[l1, l2] for _, l1, l2 in bary])
    return QuadratureRule(points=pts, weights=0.5 * np.array(w), degree=5)


def _collapsed_gauss(degree):
    # Duffy map (u, v) -> (u, v (1 - u)); the (1 - u) Jacobian is absorbed
    # into a Gauss-Jacobi rule in u.
    n = max(1, math.ceil((degree + 1) / 2))
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    xl, wl = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (xj + 1.0)
    v = 0.5 * (xl + 1.0)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(0.25 * wj, 0.5 * wl)
    pts = np.column_stack([uu.ravel(), (vv * (1.0 - uu)).ravel()])
    return QuadratureRule(points=pts, weights=ww.ravel(), degree=2 * n - 1)


def triangle_rule(degree=5):
    """Rule on the reference triangle exact up to ``degree``.

    Degree <= 5 uses the 7-point Dunavant rule, higher degrees a collapsed
    (conical product) Gauss rule.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if degree <= 5:
        return _dunavant5()
    return _collapsed_gauss(degree)


def interval_rule(degree=7):
    """Gauss rule on [0, 1] exact up to ``degree`` (default: 4 points)."""
    return gauss_interval(max(1, math.ceil((degree + 1) / 2)))


def default_rule(dim, degree=None):
    if dim == 1:
        return interval_rule(7 if degree is None else degree)
    if dim == 2:
        return triangle_rule(5 if degree is None else degree)
    raise ValueError(f"unsupported dimension {dim}")
