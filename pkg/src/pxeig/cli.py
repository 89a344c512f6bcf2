"""Command line driver: ``solve``, ``study``, ``scan`` and ``diagnose``.

Runs are described by a ``key=value`` config file; any key can be
overridden on the command line as a trailing ``key=value`` argument.

Example config::

    domain = rectangle
    exponent = 5 + 3*sin(3*pi*x)
    h = 0.05
    order = 2
"""

import argparse
from dataclasses import dataclass, field, fields, replace
import logging
import math
from pathlib import Path
import sys

import numpy as np
from scipy.special import jn_zeros

from .assembly import FESpace, Rayleigh
from .comparison import collapse_scan, write_scan_csv
from .diagnostics import run_diagnostics
from .eigensolver import (EigenpairResult, SolverConfig, SolverError, continuation_solve,
                          inverse_power)
from .expression import ExpressionError, parse_exponent
from .io import (read_eigenfunction_csv, read_key_values, read_summary,
                 write_eigenfunction_csv, write_summary, write_vtk, fmt)
from .mesh import DomainSpec, generate_mesh, refine

log = logging.getLogger("pxeig")

DEFAULT_PARAMS = {"interval": (0.0, 1.0), "rectangle": (0.0, 1.0, 0.0, 1.0),
                  "disk": (0.0, 0.0, 1.0), "annulus": (0.0, 0.0, 0.25, 1.0)}
_SOLVER_KEYS = {f.name: f.type for f in fields(SolverConfig)}


class ConfigError(ValueError):
    pass


def _floats(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    domain: DomainSpec
    exponent: str = "2"
    h: float = 0.05
    order: int = 2
    quad_degree: int = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    out: Path = Path("results")
    diagnostics: bool = True
    levels: int = 4
    scan_exponent: str = "2 + 2*x^2"
    scan_interval: tuple = (-1.0, 1.0)
    scan_center: float = 0.0
    scan_amplitudes: tuple = (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    scan_h: float = 0.01

    @classmethod
    def from_mapping(cls, items):
        items = dict(items)
        kind = items.pop("domain", "rectangle").strip()
        if kind not in DEFAULT_PARAMS:
            raise ConfigError(f"unknown domain {kind!r}")
        params = items.pop("domain_params", None)
        try:
            domain = DomainSpec(kind, _floats(params) if params else DEFAULT_PARAMS[kind])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        kw, solver = {}, {}
        conv = {"exponent": str, "h": float, "order": int, "quad_degree": int,
                "out": Path, "diagnostics": _bool, "levels": int, "scan_exponent": str,
                "scan_interval": _floats, "scan_center": float,
                "scan_amplitudes": _floats, "scan_h": float}
        for key, value in items.items():
            try:
                if key in conv:
                    kw[key] = conv[key](value)
                elif key in _SOLVER_KEYS:
                    solver[key] = int(value) if key in ("inner_max_iters", "power_max_iters",
                                                        "continuation_steps",
                                                        "restart_period") else float(value)
                else:
                    raise ConfigError(f"unknown config key {key!r}")
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
        try:
            cfg = cls(domain=domain, solver=SolverConfig(**solver), **kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if cfg.order not in (1, 2):
            raise ConfigError("order must be 1 or 2")
        if not cfg.h > 0:
            raise ConfigError("h must be positive")
        cfg.exponent_field()
        return cfg

    def exponent_field(self):
        try:
            return parse_exponent(self.exponent, self.domain)
        except ExpressionError as exc:
            raise ConfigError(str(exc)) from None

    def mesh(self):
        return generate_mesh(self.domain, self.h, self.order)


def load_config(path=None, overrides=()):
    items = read_key_values(path) if path else {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, value = item.split("=", 1)
        items[key.strip()] = value.strip()
    return RunConfig.from_mapping(items)


# --------------------------------------------------------------------------
# solve

def _summary_items(config, mesh, result, diag=None):
    items = [
        ("domain", config.domain.kind),
        ("domain_params", list(config.domain.params)),
        ("exponent", config.exponent),
        ("order", mesh.order),
        ("h", float(config.h)),
        ("n_dofs", mesh.n_dofs),
        ("n_free", result.u.space.n_free),
        ("lambda1", result.lambda1),
        ("Lambda1", result.Lambda1),
        ("K", result.K),
        ("k", result.k),
        ("S", result.S_const),
        ("iterations", result.iterations),
        ("inner_iterations", result.inner_iterations),
        ("converged", result.converged),
        ("el_residual", result.el_residual),
        ("continuation_t", [t for t, _ in result.trace]),
        ("continuation_lambda1", [lam for _, lam in result.trace]),
    ]
    if diag is not None:
        items += list(diag.as_dict().items())
    return items


def run_solve(config):
    """Solve, then write ``eigenfunction.csv``, ``eigenfunction.vtk`` and ``summary.txt``."""
    p = config.exponent_field()
    mesh = config.mesh()
    log.info("mesh: %d elements, %d dofs, order %d", mesh.n_elements, mesh.n_dofs, mesh.order)
    result = continuation_solve(p, mesh, config.solver, quad_degree=config.quad_degree)
    diag = run_diagnostics(result) if config.diagnostics else None
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    full = result.u.full()
    write_eigenfunction_csv(out / "eigenfunction.csv", mesh, full)
    write_vtk(out / "eigenfunction.vtk", mesh, {"u": full})
    write_summary(out / "summary.txt", _summary_items(config, mesh, result, diag))
    return result


def load_result(config, outdir=None):
    """Rebuild an :class:`EigenpairResult` from a solve's CSV and summary."""
    out = Path(outdir or config.out)
    mesh = config.mesh()
    coords, values = read_eigenfunction_csv(out / "eigenfunction.csv")
    if coords.shape != mesh.dof_coords.shape or \
            not np.allclose(coords, mesh.dof_coords, rtol=0, atol=1e-12):
        raise ConfigError(f"{out}/eigenfunction.csv does not match the configured mesh")
    summary = read_summary(out / "summary.txt")
    space = FESpace(mesh, config.quad_degree)
    u = space.from_full(values)
    return EigenpairResult(
        lambda1=float(summary["lambda1"]), Lambda1=float(summary["Lambda1"]), u=u,
        K=float(summary["K"]), k=float(summary["k"]), S_const=float(summary["S"]),
        history=[], el_residual=float(summary["el_residual"]),
        iterations=int(summary["iterations"]),
        converged=summary.get("converged") == "True", p=config.exponent_field())


def recompute_lambda(result):
    t = Rayleigh(result.u.space, result.p)
    return math.sqrt(t.R(result.u.coeffs) / t.S(result.u.coeffs))


# --------------------------------------------------------------------------
# convergence study

def reference_lambda1(domain):
    """Exact first eigenvalue at p = 2 where a closed form exists, else None."""
    prm = domain.params
    if domain.kind == "interval":
        return math.pi / (prm[1] - prm[0])
    if domain.kind == "rectangle":
        return math.pi * math.hypot(1.0 / (prm[1] - prm[0]), 1.0 / (prm[3] - prm[2]))
    if domain.kind == "disk":
        return float(jn_zeros(0, 1)[0]) / prm[2]
    return None


def run_convergence_study(config, levels=None):
    """Solve on ``levels`` uniformly refined meshes and estimate the order of ``lambda1``.

    Orders are ``log2`` ratios of successive differences; when an exact
    value is known (``p = 2``) error-based orders are added.
    """
    levels = levels or config.levels
    if levels < 3:
        raise ConfigError("a convergence study needs at least 3 levels")
    p = config.exponent_field()
    p_is_two = p.is_constant and p.constant_value == 2.0
    exact = reference_lambda1(config.domain) if p_is_two else None
    mesh = config.mesh()
    rows, prev = [], None
    for level in range(levels):
        if prev is None or p_is_two:
            res = continuation_solve(p, mesh, config.solver, quad_degree=config.quad_degree)
        else:
            space = FESpace(mesh, config.quad_degree)
            u0 = space.interpolate(lambda x: prev.u.space.evaluate_at(prev.u.coeffs, x))
            res = inverse_power(p, u0, config.solver)
            if not res.converged:
                raise SolverError(f"study level {level} did not converge")
        rows.append({"level": level, "h": mesh.h, "n_dofs": mesh.n_dofs,
                     "lambda1": res.lambda1})
        log.info("level %d: h=%.4g dofs=%d lambda1=%.12g", level, mesh.h, mesh.n_dofs,
                 res.lambda1)
        prev = res
        if level + 1 < levels:
            mesh = refine(mesh)
    lam = np.array([r["lambda1"] for r in rows])
    diffs = np.abs(np.diff(lam))
    for i, row in enumerate(rows):
        row["difference"] = diffs[i - 1] if i >= 1 else math.nan
        row["order"] = math.log2(diffs[i - 2] / diffs[i - 1]) if i >= 2 else math.nan
        if exact is not None:
            row["error"] = abs(lam[i] - exact)
            row["error_order"] = (math.log2(rows[i - 1]["error"] / row["error"])
                                  if i >= 1 else math.nan)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    keys = list(rows[0].keys())
    with open(out / "study.csv", "w") as fh:
        fh.write(",".join(keys) + "\n")
        for row in rows:
            fh.write(",".join(fmt(row[k]) for k in keys) + "\n")
    return rows


def estimated_order(rows):
    return rows[-1]["order"]


# --------------------------------------------------------------------------
# scan

def run_scan(config):
    domain = DomainSpec.interval(*config.scan_interval)
    p = parse_exponent(config.scan_exponent, domain)
    scan = collapse_scan(p, config.scan_center, config.scan_amplitudes,
                         interval=config.scan_interval, h=config.scan_h)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    write_scan_csv(scan, out / "scan.csv")
    return scan


# --------------------------------------------------------------------------
# entry point

def _build_parser():
    ap = argparse.ArgumentParser(prog="pxeig", description=__doc__.split("\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value config file")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--order", type=int, choices=(1, 2))
    common.add_argument("--h", type=float, help="target mesh size")
    common.add_argument("--levels", type=int, help="refinement levels (study)")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("overrides", nargs="*", metavar="key=value")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="compute the first eigenpair")
    sub.add_parser("study", parents=[common], help="refinement study of lambda1")
    sub.add_parser("scan", parents=[common], help="nonhomogeneous quotient amplitude scan")
    sub.add_parser("diagnose", parents=[common],
                   help="symmetry/concavity diagnostics of a solved eigenfunction")
    return ap


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.overrides)
    for key in ("out", "order", "h", "levels"):
        value = getattr(args, key)
        if value is not None:
            overrides.append(f"{key}={value}")
    try:
        config = load_config(args.config, overrides)
        if args.command == "solve":
            res = run_solve(config)
            print(f"lambda1={fmt(res.lambda1)} el_residual={res.el_residual:.3e} "
                  f"-> {config.out}")
        elif args.command == "study":
            rows = run_convergence_study(config)
            for r in rows:
                print(f"level={r['level']} h={r['h']:.5g} lambda1={fmt(r['lambda1'])} "
                      f"order={r['order']:.3f}")
        elif args.command == "scan":
            scan = run_scan(config)
            for t, mb, hq in scan.rows():
                print(f"t={t:.3g} mubar={mb:.6g} homog={hq:.12g}")
        else:
            out = Path(config.out)
            if (out / "eigenfunction.csv").exists():
                result = load_result(config)
            else:
                result = run_solve(config)
            diag = run_diagnostics(result)
            write_summary(out / "diagnostics.txt", list(diag.as_dict().items()))
            for key, value in diag.as_dict().items():
                print(f"{key}={fmt(value)}")
    except (ConfigError, ExpressionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
