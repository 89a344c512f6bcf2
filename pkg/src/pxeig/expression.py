"""Arithmetic expressions in ``x`` and ``y`` for exponent fields.

Grammar: numbers, ``x``, ``y``, ``pi``, ``e``, binary ``+ - * / ^`` (``**``
is accepted too), unary ``+ -``, parentheses and the functions ``sin``,
``cos``. Parsing goes through :mod:`ast` with a whitelist; nothing is
passed to ``eval``.
"""

import ast
import math

import numpy as np

from .luxemburg import ExponentField

__all__ = ["Expression", "ExpressionError", "parse_exponent"]


class ExpressionError(ValueError):
    pass


_FUNCS = {"sin": np.sin, "cos": np.cos}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
           ast.Div: np.divide, ast.Pow: np.power}


class Expression:
    """Compiled expression, callable on an ``(n, dim)`` array of points."""

    def __init__(self, text):
        self.text = text.strip()
        if not self.text:
            raise ExpressionError("empty expression")
        try:
            tree = ast.parse(self.text.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ExpressionError(f"unsupported literal {node.value!r}")
        elif isinstance(node, ast.Name):
            if node.id not in ("x", "y") and node.id not in _CONSTS:
                raise ExpressionError(f"unknown name {node.id!r}")
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ExpressionError("unsupported operator")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.UAdd, ast.USub)):
                raise ExpressionError("unsupported unary operator")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS \
                    or len(node.args) != 1 or node.keywords:
                raise ExpressionError("only sin(.) and cos(.) calls are allowed")
            self._check(node.args[0])
        else:
            raise ExpressionError(f"unsupported syntax: {type(node).__name__}")

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env),
                                          self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        return _FUNCS[node.func.id](self._eval(node.args[0], env))

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        env = {"x": pts[:, 0], "y": pts[:, 1] if pts.shape[1] > 1 else np.zeros(len(pts))}
        with np.errstate(all="ignore"):
            out = self._eval(self._tree, env)
        return np.broadcast_to(np.asarray(out, dtype=float), (len(pts),)).copy()

    def __repr__(self):
        return f"Expression({self.text!r})"


def _dense_sample(domain, n=201):
    kind, prm = domain.kind, domain.params
    if kind == "interval":
        return np.linspace(prm[0], prm[1], n)[:, None]
    if kind == "rectangle":
        gx, gy = np.meshgrid(np.linspace(prm[0], prm[1], n), np.linspace(prm[2], prm[3], n))
        return np.column_stack([gx.ravel(), gy.ravel()])
    cx, cy, r_out = prm[0], prm[1], prm[-1]
    r_in = prm[2] if kind == "annulus" else 0.0
    rr, tt = np.meshgrid(np.linspace(r_in, r_out, n), np.linspace(0, 2 * np.pi, 2 * n))
    return np.column_stack([cx + (rr * np.cos(tt)).ravel(), cy + (rr * np.sin(tt)).ravel()])


def parse_exponent(text, domain, samples=201):
    """Exponent field from an expression, validated on a dense sample of ``domain``.

    The bounds ``p_minus``/``p_plus`` are the sampled extremes widened by a
    small margin; values at or below 1 are rejected.
    """
    expr = Expression(text)
    vals = expr(_dense_sample(domain, samples))
    if not np.all(np.isfinite(vals)):
        raise ExpressionError(f"exponent {text!r} is not finite on the domain")
    lo, hi = float(vals.min()), float(vals.max())
    if lo <= 1.0:
        raise ExpressionError(f"exponent {text!r} reaches {lo:.6g} <= 1 on the domain")
    if lo == hi:
        return ExponentField.constant(lo)
    # dense sampling can miss the true extremes slightly
    margin = 1e-3 * (hi - lo)
    return ExponentField(expr, max(lo - margin, 0.5 * (1.0 + lo)), hi + margin, label=text)
