"""Luxemburg norm with the 1/p(x) weighted modular.

For a field ``f`` sampled at quadrature points with weights ``w``::

    modular(f, gamma) = sum_i w_i |f_i / gamma|^{p_i} / p_i
    ||f|| = the unique gamma > 0 with modular(f, gamma) = 1

The root is found by a safeguarded Newton iteration on the logarithm of
the modular, which is convex and decreasing in ``log gamma``.
"""

from dataclasses import dataclass
import math

import numpy as np

__all__ = ["ExponentField", "SampledField", "modular", "luxemburg_norm",
           "norm_first_variation", "norm_with_weights", "LuxemburgError"]


class LuxemburgError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Variable exponent ``p(x)`` with declared bounds ``1 < p_minus <= p <= p_plus``.

    ``func`` maps an ``(n, dim)`` array of points to ``n`` exponent values.
    """

    func: object
    p_minus: float
    p_plus: float
    constant_value: float = None
    label: str = ""

    def __post_init__(self):
        if not (1.0 < self.p_minus <= self.p_plus < math.inf):
            raise ValueError(f"need 1 < p_minus <= p_plus < inf, got "
                             f"[{self.p_minus}, {self.p_plus}]")

    @classmethod
    def constant(cls, value):
        value = float(value)
        return cls(lambda x: np.full(np.shape(x)[0], value), value, value,
                   constant_value=value, label=repr(value))

    @property
    def is_constant(self):
        return self.constant_value is not None

    def __call__(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.broadcast_to(np.asarray(self.func(x), dtype=float), (x.shape[0],))
        slack = 1e-12 * max(1.0, self.p_plus)
        if np.any(~np.isfinite(vals)) or vals.min() < self.p_minus - slack \
                or vals.max() > self.p_plus + slack:
            raise ValueError(f"exponent leaves its bounds [{self.p_minus}, {self.p_plus}]: "
                             f"sampled range [{vals.min()}, {vals.max()}]")
        return np.array(vals)

    def blend(self, t):
        """Homotopy member ``2 + t (p - 2)``."""
        if self.is_constant:
            return ExponentField.constant(2.0 + t * (self.constant_value - 2.0))
        lo = 2.0 + t * (self.p_minus - 2.0)
        hi = 2.0 + t * (self.p_plus - 2.0)
        return ExponentField(lambda x: 2.0 + t * (self.func(x) - 2.0),
                             min(lo, hi), max(lo, hi),
                             label=f"2 + {t!r}*(({self.label}) - 2)")


@dataclass(frozen=True, eq=False)
class SampledField:
    """Values of a scalar ``(n,)`` or vector ``(n, d)`` field at quadrature points.

    ``weights`` are quadrature weights times element Jacobians; ``points``
    are the physical locations, needed only to evaluate an
    :class:`ExponentField`.
    """

    values: np.ndarray
    weights: np.ndarray
    points: np.ndarray = None

    def __post_init__(self):
        if len(self.values) != len(self.weights):
            raise ValueError("values and weights differ in length")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    def modulus(self):
        v = np.asarray(self.values, dtype=float)
        return np.abs(v) if v.ndim == 1 else np.sqrt(np.sum(v * v, axis=1))


def _exponents(f, p):
    if isinstance(p, ExponentField):
        if f.points is None:
            raise ValueError("sampled field carries no points to evaluate p at")
        return p(f.points)
    return np.broadcast_to(np.asarray(p, dtype=float), f.weights.shape)


def _check_finite(a):
    if not np.all(np.isfinite(a)):
        raise LuxemburgError("field has non-finite values")


def modular(f, p, gamma):
    """Weighted modular ``sum w |f/gamma|^p / p`` (``F + 1`` in implicit form)."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    a = f.modulus()
    pv = _exponents(f, p)
    return float(np.sum(f.weights * (a / gamma) ** pv / pv))


def norm_with_weights(a, p, w, tol=1e-12, max_iter=200):
    """Luxemburg norm of the nonnegative samples ``a``; array-level core.

    Newton runs on ``phi(s) = log modular(exp(s))``, convex and decreasing,
    starting from a point with ``phi > 0``. Iterates that leave the current
    bracket are replaced by bisection.
    """
    a = np.asarray(a, dtype=float)
    _check_finite(a)
    nz = a > 0
    if not np.any(nz):
        return 0.0
    a, p, w = a[nz], np.broadcast_to(p, nz.shape)[nz], np.broadcast_to(w, nz.shape)[nz]
    logc = np.log(w) - np.log(p) + p * np.log(a)

    def phi(s):
        z = logc - p * s
        zmax = z.max()
        e = np.exp(z - zmax)
        total = e.sum()
        # d/ds log sum exp(logc - p s) = -(softmax-weighted mean of p)
        return zmax + math.log(total), -np.dot(e, p) / total

    amax = a.max()
    gamma0 = amax * min(1.0, (w.sum() / p.max()) ** (1.0 / p.min()))
    s = math.log(gamma0)
    val, slope = phi(s)
    while val <= 0:
        s -= math.log(2.0)
        val, slope = phi(s)
    lo, hi = s, math.inf
    polished = False
    for _ in range(max_iter):
        if abs(math.expm1(val)) <= tol:
            # one extra quadratic step takes the root to roundoff level
            if polished or abs(val) < 1e-15:
                return math.exp(s)
            polished = True
            cand = s - val / slope
            cval, cslope = phi(cand)
            if abs(cval) <= abs(val):
                s, val, slope = cand, cval, cslope
            return math.exp(s)
        step = s - val / slope
        if not (lo < step < hi) or not math.isfinite(step):
            step = 0.5 * (lo + hi) if math.isfinite(hi) else lo + math.log(2.0)
        s = step
        val, slope = phi(s)
        if val > 0:
            lo = s
        else:
            hi = s
    raise LuxemburgError(f"Newton did not reach |F| <= {tol} in {max_iter} iterations "
                         f"(residual {math.expm1(val):.3e})")


def luxemburg_norm(f, p, tol=1e-12):
    """Luxemburg norm of a sampled field; exactly 0 for the zero field."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    a = f.modulus()
    return norm_with_weights(a, _exponents(f, p), f.weights, tol)


def norm_first_variation(f, eta, p, tol=1e-12):
    """Directional derivative of the norm at ``f`` along ``eta``.

    Implicit differentiation of the modular equation gives::

        sum w |f/g|^{p-2} <f/g, eta> / sum w |f/g|^p,   g = ||f||
    """
    pv = _exponents(f, p)
    a = f.modulus()
    g = norm_with_weights(a, pv, f.weights, tol)
    if g == 0.0:
        raise LuxemburgError("the norm is not differentiable at the zero field")
    r = a / g
    scale = np.zeros_like(r)
    nz = r > 0
    scale[nz] = r[nz] ** (pv[nz] - 2.0) / g
    fv, ev = np.asarray(f.values, dtype=float), np.asarray(eta.values, dtype=float)
    inner = fv * ev if fv.ndim == 1 else np.sum(fv * ev, axis=1)
    num = np.sum(f.weights * scale * inner)
    den = np.sum(f.weights * r ** pv)
    return float(num / den)
