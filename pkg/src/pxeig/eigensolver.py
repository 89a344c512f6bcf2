"""First eigenpair of the Luxemburg-norm p(x)-Laplacian by inverse power iteration.

Each outer step minimizes ``J(u) = R(u) - <grad S(u_j), u>`` with
Fletcher-Reeves nonlinear CG started at ``u_j / Lambda_j``, renormalizes
to unit Luxemburg norm and updates ``Lambda = R / S``. Runs at variable
exponent are reached by continuation from ``p = 2``, where the problem is
the Dirichlet Helmholtz eigenproblem.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import FESpace, Rayleigh, ScalarField
from .luxemburg import ExponentField

__all__ = ["SolverConfig", "EigenpairResult", "InnerResult", "SolverError",
           "helmholtz_first_eigenpair", "fletcher_reeves", "inner_minimize",
           "inverse_power", "continuation_solve"]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-12
    inner_tol: float = 1e-8
    inner_max_iters: int = 2000
    power_tol: float = 1e-8
    power_max_iters: int = 200
    continuation_steps: int = 10
    regularization_eps: float = 0.0
    restart_period: int = None  # None: number of free dofs
    armijo_c: float = 1e-4

    def __post_init__(self):
        for name in ("newton_tol", "inner_tol", "power_tol", "armijo_c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("inner_max_iters", "power_max_iters", "continuation_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.regularization_eps < 0:
            raise ValueError("regularization_eps must be non-negative")
        if self.restart_period is not None and self.restart_period < 1:
            raise ValueError("restart_period must be at least 1")


@dataclass
class EigenpairResult:
    lambda1: float
    Lambda1: float
    u: ScalarField
    K: float
    k: float
    S_const: float
    history: list
    el_residual: float
    iterations: int
    converged: bool = True
    inner_iterations: int = 0
    trace: list = field(default_factory=list)   # (t, lambda1) per continuation step
    p: ExponentField = None


@dataclass
class InnerResult:
    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool


# --------------------------------------------------------------------------
# p = 2 start

def helmholtz_first_eigenpair(mesh_or_space, tol=1e-12, max_iter=500):
    """Smallest Dirichlet eigenpair of ``-Laplace`` by inverse iteration.

    Returns ``(lam, u)`` with ``u`` positive and mass-normalized.
    """
    space = mesh_or_space if isinstance(mesh_or_space, FESpace) else FESpace(mesh_or_space)
    if space.n_free == 0:
        raise SolverError("mesh has no interior degrees of freedom")
    K, M = space.stiffness(), space.mass()
    try:
        lu = spla.splu(K)
    except RuntimeError as exc:
        raise SolverError(f"singular stiffness matrix: {exc}") from exc
    x = np.ones(space.n_free)
    x /= math.sqrt(x @ (M @ x))
    lam = x @ (K @ x)
    for _ in range(max_iter):
        y = lu.solve(M @ x)
        if not np.all(np.isfinite(y)):
            raise SolverError("inverse iteration produced non-finite values")
        y /= math.sqrt(y @ (M @ y))
        if y.sum() < 0:
            y = -y
        change = np.linalg.norm(y - x) / np.linalg.norm(y)
        x = y
        lam = x @ (K @ x)
        if change <= tol:
            break
    else:
        log.warning("Helmholtz inverse iteration hit max_iter=%d", max_iter)
    return float(lam), ScalarField(space, x)


# --------------------------------------------------------------------------
# inner solver

def _line_search(fg, x, fx, d, slope, trial, c1, max_secant=4, sec_tol=1e-2):
    """Secant steps on the directional derivative, then Armijo backtracking.

    Returns ``(step, f, grad)`` or ``None`` when no acceptable step exists.
    """
    seen = {}

    def at(a):
        if a not in seen:
            seen[a] = fg(x + a * d)
        return seen[a]

    a0, s0, a1 = 0.0, slope, trial
    for _ in range(max_secant):
        _, g1 = at(a1)
        s1 = float(g1 @ d)
        if abs(s1) <= sec_tol * abs(slope):
            break
        a_next = a1 - s1 * (a1 - a0) / (s1 - s0) if s1 > s0 else 2.0 * a1
        if not (math.isfinite(a_next) and a_next > 0):
            break
        a0, s0, a1 = a1, s1, a_next

    # roundoff floor for comparing J values near a minimizer
    noise = 64 * np.finfo(float).eps * max(abs(fx), 1.0)
    step = a1
    for _ in range(60):
        fn, gn = at(step)
        if fn <= fx + c1 * step * slope:
            return step, fn, gn
        # predicted decrease below resolution: accept if the slope shrank
        if fn - fx <= noise and abs(float(gn @ d)) <= 0.9 * abs(slope):
            return step, fn, gn
        step *= 0.5
    return None


def fletcher_reeves(fg, x0, gtol, max_iter=2000, restart=None, c1=1e-4):
    """Minimize a smooth function by Fletcher-Reeves nonlinear CG.

    ``fg(x)`` returns ``(f(x), grad f(x))``. Each step length is located by
    a few secant iterations on the directional derivative and then halved
    until the Armijo condition ``f(x + a d) <= f(x) + c1 a <g, d>`` holds.
    The direction is reset to steepest descent every ``restart`` iterations
    and whenever it fails to be a descent direction.
    """
    x = np.array(x0, dtype=float)
    fx, g = fg(x)
    restart = restart or len(x)
    d = -g
    gg = float(g @ g)
    alpha = None
    steepest = True
    best_f, best_x, best_g = fx, x, g
    it = 0
    for it in range(max_iter):
        if math.sqrt(gg) <= gtol:
            return InnerResult(x, fx, math.sqrt(gg), it, True)
        slope = float(g @ d)
        if slope >= 0:
            d, slope, steepest = -g, -gg, True
        dn = np.linalg.norm(d)
        # first step scaled to the iterate (unit length when starting at 0)
        trial = alpha if alpha else min(1.0, (np.linalg.norm(x) or 1.0) / dn)
        accepted = _line_search(fg, x, fx, d, slope, trial, c1)
        if accepted is None:
            log.debug("line search failed at iteration %d", it)
            if not steepest:
                d, alpha, steepest = -g, None, True
                continue
            break
        alpha, fx, gn = accepted
        x = x + alpha * d
        gg_new = float(gn @ gn)
        beta = 0.0 if (it + 1) % restart == 0 else gg_new / gg
        d = -gn + beta * d
        steepest = beta == 0.0
        g, gg = gn, gg_new
        if fx <= best_f:
            best_f, best_x, best_g = fx, x, g
    else:
        it = max_iter
    gnorm = math.sqrt(float(best_g @ best_g))
    return InnerResult(best_x, best_f, gnorm, it, gnorm <= gtol)


def inner_minimize(u_prev, p, cfg, u_init, terms=None):
    """Approximate ``argmin_u R(u) - <grad S(u_prev), u>`` starting at ``u_init``.

    Converged when the Euclidean norm of the gradient dual vector drops to
    ``inner_tol`` times the norm of ``grad S(u_prev)``.
    """
    if u_init.is_zero():
        raise SolverError("inner solve needs a non-zero initial guess")
    terms = terms or Rayleigh(u_prev.space, p, cfg.regularization_eps, cfg.newton_tol)
    g_prev = terms.grad_S(u_prev.coeffs)
    res = fletcher_reeves(lambda c: terms.J_and_grad(c, g_prev),
                          u_init.coeffs, cfg.inner_tol * np.linalg.norm(g_prev),
                          cfg.inner_max_iters, cfg.restart_period, cfg.armijo_c)
    if not np.isfinite(res.value):
        raise SolverError("non-finite J encountered in the inner solve")
    return ScalarField(u_prev.space, res.x), res


# --------------------------------------------------------------------------
# outer iteration

def _finish(terms, c, history, iterations, converged, inner_its, p):
    space = terms.space
    if space.integrate(space.V @ c) < 0:
        c = -c
    K, k, S_const, A, B = terms.el_terms(c)
    lam = K / k
    res = float(np.max(np.abs(A - lam * S_const * B)) / np.max(np.abs(A)))
    return EigenpairResult(lambda1=lam, Lambda1=lam * lam, u=ScalarField(space, c),
                           K=K, k=k, S_const=float(S_const), history=history,
                           el_residual=res, iterations=iterations, converged=converged,
                           inner_iterations=inner_its, p=p)


def inverse_power(p, u0, cfg=None):
    """Inverse power iteration for the first eigenpair at exponent ``p``.

    Stops once the relative change of ``Lambda = R/S`` between two outer
    iterations is at most ``power_tol`` and the Euler-Lagrange residual of
    the iterate is at most ``10 * power_tol``.
    """
    cfg = cfg or SolverConfig()
    if u0.is_zero():
        raise SolverError("initial guess must be non-zero")
    space = u0.space
    terms = Rayleigh(space, p, cfg.regularization_eps, cfg.newton_tol)
    if p.p_minus < 2:
        log.info("p_minus=%.3g < 2: convergence of the inner solver is not guaranteed",
                 p.p_minus)
    c = u0.coeffs / terms.norm_u(u0.coeffs)
    Lam = terms.R(c)
    history = [Lam]
    inner_its = 0
    converged = False
    j = 0
    for j in range(1, cfg.power_max_iters + 1):
        u_tilde, inner = inner_minimize(ScalarField(space, c), p, cfg,
                                        ScalarField(space, c / Lam), terms)
        inner_its += inner.iterations
        if not inner.converged:
            log.warning("outer iteration %d: inner solve stopped at |grad J|=%.3e "
                        "after %d iterations", j, inner.grad_norm, inner.iterations)
        if u_tilde.is_zero():
            raise SolverError(f"outer iteration {j}: inner solve returned the zero field")
        c_new = u_tilde.coeffs / terms.norm_u(u_tilde.coeffs)
        Lam_new = terms.R(c_new) / terms.S(c_new)
        history.append(Lam_new)
        if not math.isfinite(Lam_new):
            raise SolverError(f"outer iteration {j}: non-finite Rayleigh quotient")
        change = abs(Lam_new - Lam) / Lam
        c, Lam = c_new, Lam_new
        if change <= cfg.power_tol and inner.converged \
                and terms.el_residual(c) <= 10 * cfg.power_tol:
            converged = True
            break
    if not converged:
        log.warning("inverse power stopped after %d iterations without convergence", j)
    return _finish(terms, c, history, j, converged, inner_its, p)


def continuation_solve(p_target, mesh, cfg=None, u0=None, quad_degree=None):
    """Homotopy ``p_t = 2 + t (p_target - 2)`` on a uniform grid of ``t`` ending at 1.

    Starts from the Helmholtz eigenfunction unless ``u0`` is given. A step
    whose solve does not converge is retried once as two half steps.
    """
    cfg = cfg or SolverConfig()
    if u0 is None:
        space = FESpace(mesh, quad_degree)
        _, u0 = helmholtz_first_eigenpair(space)
    space = u0.space
    space.exponent_values(p_target)  # bound check on the whole quadrature set
    if p_target.is_constant and p_target.constant_value == 2.0:
        ts = [1.0]
    else:
        n = cfg.continuation_steps
        ts = [(i + 1) / n for i in range(n)]
    trace = []
    u, t_prev, result = u0, 0.0, None
    for step, t in enumerate(ts):
        attempt = [t]
        res = _solve_step(p_target, t, u, cfg)
        if not res.converged and t - t_prev > 0:
            log.info("continuation step %d (t=%.4g) failed; retrying with half steps", step, t)
            attempt = [0.5 * (t_prev + t), t]
            res = _solve_step(p_target, attempt[0], u, cfg)
            if res.converged:
                trace.append((attempt[0], res.lambda1))
                res = _solve_step(p_target, t, res.u, cfg)
        if not res.converged:
            raise SolverError(f"continuation step {step} (t={t:.6g}) did not converge: "
                              f"el_residual={res.el_residual:.3e}, "
                              f"iterations={res.iterations}")
        trace.append((t, res.lambda1))
        u, t_prev, result = res.u, t, res
    result.trace = trace
    result.p = p_target
    return result


def _solve_step(p_target, t, u, cfg):
    p_t = p_target if t == 1.0 else p_target.blend(t)
    return inverse_power(p_t, u, cfg)
