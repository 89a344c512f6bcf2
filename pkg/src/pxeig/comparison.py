"""Nonhomogeneous Rayleigh quotients and the amplitude-scan collapse demonstration.

``mu(u)    = int |grad u|^p / p  /  int |u|^p / p``
``mubar(u) = int |grad u|^p      /  int |u|^p``

Neither is invariant under ``u -> t u`` when ``p`` varies, whereas the
Luxemburg quotient ``||grad u|| / ||u||`` is.
"""

from dataclasses import dataclass
import csv

import numpy as np

from .assembly import FESpace, Rayleigh
from .luxemburg import LuxemburgError
from .mesh import DomainSpec, generate_mesh

__all__ = ["quotient_mu", "quotient_mubar", "homogeneous_quotient", "QuotientScan",
           "collapse_scan", "smooth_bump", "write_scan_csv"]


def _raw_integrals(u, p, weighted):
    if u.is_zero():
        raise LuxemburgError("quotient undefined for the zero field")
    s = u.space
    pq = s.exponent_values(p)
    v = np.abs(s.V @ u.coeffs)
    g = np.sqrt(sum((G @ u.coeffs) ** 2 for G in s.G))
    w = s.weights / pq if weighted else s.weights
    return float(np.dot(w, g ** pq)), float(np.dot(w, v ** pq))


def quotient_mu(u, p):
    """Ratio of the 1/p-weighted modulars of ``grad u`` and ``u``."""
    num, den = _raw_integrals(u, p, True)
    return num / den


def quotient_mubar(u, p):
    """Ratio of the unweighted modulars of ``grad u`` and ``u``."""
    num, den = _raw_integrals(u, p, False)
    return num / den


def homogeneous_quotient(u, p, tol=1e-12):
    """Luxemburg quotient ``||grad u|| / ||u||``."""
    t = Rayleigh(u.space, p, tol=tol)
    return t.norm_grad(u.coeffs) / t.norm_u(u.coeffs)


def smooth_bump(center, half_width):
    """``(1 - ((x - center) / half_width)^2)^2`` inside the support, 0 outside.

    Its derivative vanishes at the peak, so small amplitudes weight the
    exponent near ``center``.
    """
    def f(x):
        s = (np.asarray(x)[:, 0] - center) / half_width
        return np.where(np.abs(s) < 1.0, (1.0 - s * s) ** 2, 0.0)
    return f


@dataclass
class QuotientScan:
    description: str
    amplitudes: np.ndarray
    mubar: np.ndarray
    homogeneous: np.ndarray

    def rows(self):
        return list(zip(self.amplitudes.tolist(), self.mubar.tolist(),
                        self.homogeneous.tolist()))


def collapse_scan(p, bump_center, amplitudes, interval=(-1.0, 1.0), half_width=None,
                  h=0.01, order=2, quad_degree=15, profile=None):
    """Evaluate ``mubar(t phi)`` and the Luxemburg quotient of ``t phi`` for each ``t``.

    ``phi`` defaults to :func:`smooth_bump` centred at ``bump_center``; its
    half width defaults to 90% of the distance to the nearer endpoint.
    """
    amps = np.asarray(amplitudes, dtype=float)
    if amps.ndim != 1 or len(amps) < 2 or np.any(amps <= 0) \
            or np.any(np.diff(amps) >= 0):
        raise ValueError("amplitudes must be a strictly decreasing grid of positive values")
    a, b = interval
    if not a < bump_center < b:
        raise ValueError("bump centre must lie inside the interval")
    if half_width is None:
        half_width = 0.9 * min(bump_center - a, b - bump_center)
    space = FESpace(generate_mesh(DomainSpec.interval(a, b), h, order), quad_degree)
    phi = space.interpolate(profile or smooth_bump(bump_center, half_width))
    mubar = np.array([quotient_mubar(t * phi, p) for t in amps])
    homog = np.array([homogeneous_quotient(t * phi, p) for t in amps])
    if not (np.all(np.isfinite(mubar)) and np.all(mubar > 0)):
        raise ArithmeticError("scan produced non-positive or non-finite quotients")
    desc = (f"bump centre={bump_center!r} half_width={half_width!r} "
            f"on ({a!r}, {b!r}), p={getattr(p, 'label', '') or p!r}")
    return QuotientScan(desc, amps, mubar, homog)


def write_scan_csv(scan, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "mubar", "homog"])
        for row in scan.rows():
            w.writerow([f"{v:.17g}" for v in row])
