"""Finite element evaluation of the Rayleigh quotient terms and their gradients.

Notation used throughout, for a field ``u`` with coefficients ``c``::

    R(u) = ||grad u||^2      S(u) = ||u||^2      (Luxemburg norms)
    J(u) = R(u) - <grad S(u_prev), u>

Gradients are returned as dual vectors: one entry per free (non-Dirichlet)
degree of freedom, the derivative paired with that basis function.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .luxemburg import ExponentField, SampledField, norm_with_weights, LuxemburgError
from .mesh import shape_functions
from .quadrature import default_rule

__all__ = ["FESpace", "ScalarField", "DualVector", "Rayleigh", "sample",
           "sample_gradient", "evaluate_R", "evaluate_S", "grad_S", "grad_J",
           "evaluate_J", "el_residual"]


class FESpace:
    """Lagrange space on a mesh with homogeneous Dirichlet conditions.

    Precomputes, for the chosen quadrature, sparse operators mapping free
    coefficients to values (``V``) and physical gradient components
    (``G[d]``) at every quadrature point.
    """

    def __init__(self, mesh, quad_degree=None):
        self.mesh = mesh
        self.rule = default_rule(mesh.dim, quad_degree)
        dim, ne = mesh.dim, mesh.n_elements
        nq = len(self.rule)

        vals, rgrads = shape_functions(dim, mesh.order, self.rule.points)
        nloc = vals.shape[1]
        jac = mesh.jacobians()
        det = np.abs(mesh.element_measures()) * (2.0 if dim == 2 else 1.0)
        inv_t = np.transpose(np.linalg.inv(jac), (0, 2, 1))
        # physical gradients: (ne, nq, nloc, dim)
        pgrads = np.einsum("eij,qaj->eqai", inv_t, rgrads)

        v0 = mesh.nodes[mesh.elements[:, 0]]
        self.points = (v0[:, None, :] + np.einsum("eij,qj->eqi", jac, self.rule.points)
                       ).reshape(-1, dim)
        self.weights = (det[:, None] * self.rule.weights[None, :]).ravel()

        free_mask = np.ones(mesh.n_dofs, dtype=bool)
        free_mask[mesh.boundary_dofs] = False
        self.free_dofs = np.flatnonzero(free_mask)
        self.n_free = len(self.free_dofs)
        col_of = np.full(mesh.n_dofs, -1)
        col_of[self.free_dofs] = np.arange(self.n_free)

        rows = np.broadcast_to(np.arange(ne * nq).reshape(ne, nq, 1), (ne, nq, nloc))
        cols = np.broadcast_to(col_of[mesh.dof_map][:, None, :], (ne, nq, nloc))
        keep = cols >= 0
        r, c = rows[keep], cols[keep]
        shape = (ne * nq, self.n_free)

        def op(data):
            return sp.csr_matrix((data[keep], (r, c)), shape=shape)

        self.V = op(np.broadcast_to(vals[None], (ne, nq, nloc)))
        self.G = [op(pgrads[..., d]) for d in range(dim)]
        self.Vt = self.V.T.tocsr()
        self.Gt = [g.T.tocsr() for g in self.G]
        self._exponent_cache = {}

    @property
    def dim(self):
        return self.mesh.dim

    @property
    def free_coords(self):
        return self.mesh.dof_coords[self.free_dofs]

    def exponent_values(self, p):
        """``p`` at the quadrature points, validated against its bounds."""
        if not isinstance(p, ExponentField):
            return np.broadcast_to(np.asarray(p, dtype=float), self.weights.shape)
        key = id(p)
        hit = self._exponent_cache.get(key)
        if hit is None or hit[0] is not p:
            hit = (p, p(self.points))
            self._exponent_cache[key] = hit
        return hit[1]

    def interpolate(self, func):
        """Nodal interpolant of ``func(points) -> values`` as a :class:`ScalarField`."""
        vals = np.asarray(func(self.free_coords), dtype=float)
        return ScalarField(self, np.broadcast_to(vals, (self.n_free,)).copy())

    def zero(self):
        return ScalarField(self, np.zeros(self.n_free))

    def full_coefficients(self, coeffs):
        out = np.zeros(self.mesh.n_dofs)
        out[self.free_dofs] = coeffs
        return out

    def from_full(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (self.mesh.n_dofs,):
            raise ValueError(f"expected {self.mesh.n_dofs} dof values, got {values.shape}")
        return ScalarField(self, values[self.free_dofs].copy())

    def integrate(self, values):
        return float(np.dot(self.weights, values))

    def stiffness(self):
        w = sp.diags(self.weights)
        return sum(gt @ w @ g for gt, g in zip(self.Gt, self.G)).tocsc()

    def mass(self):
        return (self.Vt @ sp.diags(self.weights) @ self.V).tocsc()

    def locate(self, points, tol=1e-10):
        """Element index and reference coordinates of each point (-1 if outside)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        mesh = self.mesh
        inv = np.linalg.inv(mesh.jacobians())
        v0 = mesh.nodes[mesh.elements[:, 0]]
        elem = np.full(len(pts), -1)
        ref = np.zeros((len(pts), mesh.dim))
        for start in range(0, len(pts), 256):
            chunk = pts[start:start + 256]
            xi = np.einsum("eij,pej->pei", inv, chunk[:, None, :] - v0[None])
            slack = np.minimum(xi.min(axis=2), 1.0 - xi.sum(axis=2))
            best = np.argmax(slack, axis=1)
            ok = slack[np.arange(len(chunk)), best] >= -tol
            elem[start:start + len(chunk)] = np.where(ok, best, -1)
            ref[start:start + len(chunk)] = xi[np.arange(len(chunk)), best]
        return elem, ref

    def evaluate_at(self, coeffs, points, outside=0.0):
        """Point values of the FE function with free coefficients ``coeffs``."""
        elem, ref = self.locate(points)
        full = self.full_coefficients(coeffs)
        out = np.full(len(elem), float(outside))
        inside = elem >= 0
        if np.any(inside):
            vals, _ = shape_functions(self.dim, self.mesh.order,
                                      np.clip(ref[inside], 0.0, 1.0))
            out[inside] = np.sum(vals * full[self.mesh.dof_map[elem[inside]]], axis=1)
        return out


@dataclass(frozen=True, eq=False)
class ScalarField:
    """FE function given by its free coefficients; Dirichlet dofs are zero."""

    space: FESpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.space.n_free,):
            raise ValueError(f"expected {self.space.n_free} coefficients, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("field coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    def __mul__(self, scalar):
        return ScalarField(self.space, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return ScalarField(self.space, self.coeffs / float(scalar))

    def __add__(self, other):
        return ScalarField(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return ScalarField(self.space, self.coeffs - other.coeffs)

    def __neg__(self):
        return ScalarField(self.space, -self.coeffs)

    def is_zero(self):
        return not np.any(self.coeffs)

    def full(self):
        return self.space.full_coefficients(self.coeffs)


@dataclass(frozen=True, eq=False)
class DualVector:
    """Pairings of a linear functional with every free basis function."""

    space: FESpace
    values: np.ndarray

    def pair(self, u):
        return float(np.dot(self.values, u.coeffs))

    def norm(self):
        return float(np.linalg.norm(self.values))


def sample(u):
    s = u.space
    return SampledField(s.V @ u.coeffs, s.weights, s.points)


def sample_gradient(u):
    s = u.space
    return SampledField(np.column_stack([g @ u.coeffs for g in s.G]), s.weights, s.points)


def _signed_power(r, e):
    # |r|^e with 0 where r == 0 (callers multiply by r or grad u afterwards)
    out = np.zeros_like(r)
    nz = r > 0
    out[nz] = r[nz] ** e[nz]
    return out


class Rayleigh:
    """Norm-based terms for one space and exponent, on raw coefficient arrays.

    ``eps`` regularizes the gradient modulus as ``sqrt(|grad u|^2 + eps^2)``;
    values and gradients are consistent for any ``eps``.
    """

    def __init__(self, space, p, eps=0.0, tol=1e-12):
        self.space = space
        self.p = p
        self.pq = space.exponent_values(p)
        self.eps = float(eps)
        self.tol = tol
        self.n_evals = 0

    # -- value-level pieces -----------------------------------------------

    def values(self, c):
        return self.space.V @ c

    def gradients(self, c):
        return [g @ c for g in self.space.G]

    def grad_modulus(self, grads):
        m2 = sum(g * g for g in grads)
        if self.eps:
            m2 = m2 + self.eps ** 2
        return np.sqrt(m2)

    def _norm(self, a):
        return norm_with_weights(a, self.pq, self.space.weights, self.tol)

    def norm_u(self, c):
        return self._norm(np.abs(self.values(c)))

    def norm_grad(self, c):
        return self._norm(self.grad_modulus(self.gradients(c)))

    def R(self, c):
        return self.norm_grad(c) ** 2

    def S(self, c):
        return self.norm_u(c) ** 2

    # -- first variations -------------------------------------------------

    def _value_variation(self, c):
        """(k, dual of grad k) for k = ||u||."""
        s = self.space
        v = self.values(c)
        a = np.abs(v)
        k = self._norm(a)
        if k == 0.0:
            raise LuxemburgError("zero field")
        r = a / k
        lin = s.weights * _signed_power(r, self.pq - 2.0) * (v / k)
        den = np.dot(s.weights, r ** self.pq)
        return k, (s.Vt @ lin) / den

    def _gradient_variation(self, c):
        """(K, dual of grad K) for K = ||grad u||."""
        s = self.space
        grads = self.gradients(c)
        m = self.grad_modulus(grads)
        K = self._norm(m)
        if K == 0.0:
            raise LuxemburgError("zero gradient field")
        r = m / K
        scale = s.weights * _signed_power(r, self.pq - 2.0) / K
        den = np.dot(s.weights, r ** self.pq)
        dual = sum(gt @ (scale * g) for gt, g in zip(s.Gt, grads))
        return K, dual / den

    def grad_S(self, c):
        k, dk = self._value_variation(c)
        return 2.0 * k * dk

    def grad_R(self, c):
        K, dK = self._gradient_variation(c)
        return 2.0 * K * dK

    def J(self, c, g_prev):
        self.n_evals += 1
        return self.R(c) - np.dot(g_prev, c)

    def J_and_grad(self, c, g_prev):
        self.n_evals += 1
        K, dK = self._gradient_variation(c)
        return K * K - np.dot(g_prev, c), 2.0 * K * dK - g_prev

    # -- Euler-Lagrange ---------------------------------------------------

    def el_terms(self, c):
        """Constants K, k, S and the two dual vectors of the weak equation.

        ``A_i = sum w |grad u/K|^{p-2} <grad u/K, grad eta_i>`` and
        ``B_i = sum w |u/k|^{p-2} (u/k) eta_i``.
        """
        s = self.space
        v = self.values(c)
        grads = self.gradients(c)
        m = self.grad_modulus(grads)
        K = self._norm(m)
        k = self._norm(np.abs(v))
        if K == 0.0 or k == 0.0:
            raise LuxemburgError("zero field")
        rg, ru = m / K, np.abs(v) / k
        S_const = np.dot(s.weights, rg ** self.pq) / np.dot(s.weights, ru ** self.pq)
        wg = s.weights * _signed_power(rg, self.pq - 2.0) / K
        A = sum(gt @ (wg * g) for gt, g in zip(s.Gt, grads))
        B = s.Vt @ (s.weights * _signed_power(ru, self.pq - 2.0) * (v / k))
        return K, k, S_const, A, B

    def el_residual(self, c, lam=None):
        K, k, S_const, A, B = self.el_terms(c)
        if lam is None:
            lam = K / k
        scale = np.max(np.abs(A))
        return float(np.max(np.abs(A - lam * S_const * B)) / scale)


def _terms(u, p, eps=0.0, tol=1e-12):
    if u.is_zero():
        raise LuxemburgError("operation undefined for the zero field")
    return Rayleigh(u.space, p, eps, tol)


def evaluate_R(u, p, eps=0.0):
    """``||grad u||^2`` in the Luxemburg norm."""
    return _terms(u, p, eps).R(u.coeffs)


def evaluate_S(u, p):
    """``||u||^2`` in the Luxemburg norm."""
    return _terms(u, p).S(u.coeffs)


def grad_S(u, p):
    return DualVector(u.space, _terms(u, p).grad_S(u.coeffs))


def evaluate_J(u, u_prev, p, eps=0.0):
    """``J(u) = R(u) - <grad S(u_prev), u>``."""
    t = _terms(u_prev, p, eps)
    return t.J(u.coeffs, t.grad_S(u_prev.coeffs))


def grad_J(u, u_prev, p, eps=0.0):
    """Dual vector of ``grad R(u) - grad S(u_prev)``, the exact gradient of :func:`evaluate_J`."""
    if u.is_zero():
        raise LuxemburgError("grad_J undefined at the zero field")
    t = _terms(u_prev, p, eps)
    return DualVector(u.space, t.J_and_grad(u.coeffs, t.grad_S(u_prev.coeffs))[1])


def el_residual(u, lam, p, eps=0.0):
    """Scale-free defect of the weak eigenvalue equation.

    ``max_i |A_i - lam S B_i| / max_i |A_i|`` with K, k, S recomputed from ``u``.
    """
    return _terms(u, p, eps).el_residual(u.coeffs, lam)
