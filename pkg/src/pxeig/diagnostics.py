"""Shape diagnostics for computed eigenfunctions: symmetry defects and log-concavity."""

from dataclasses import dataclass

import numpy as np

__all__ = ["Diagnostics", "center_symmetry_defect", "reflection_defect",
           "log_second_differences", "run_diagnostics"]

# calibrated at the default resolutions, not taken from any reference values
CENTER_SYMMETRY_MAX = 5e-2
REFLECTION_BREAK_MIN = 0.1


@dataclass
class Diagnostics:
    center_symmetry_defect: float
    reflection_defect: float = None
    positive_log_second_differences: int = None
    max_log_second_difference: float = None

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


def _mirror_defect(u, mirror):
    space = u.space
    pts = space.mesh.dof_coords
    full = u.full()
    scale = np.max(np.abs(full))
    mirrored = space.evaluate_at(u.coeffs, mirror(pts), outside=0.0)
    return float(np.max(np.abs(full - mirrored)) / scale)


def center_symmetry_defect(u):
    """``max |u(x) - u(2c - x)| / max |u|`` over dof locations, ``c`` the domain centre."""
    c = u.space.mesh.domain.center
    return _mirror_defect(u, lambda x: 2.0 * c - x)


def reflection_defect(u):
    """Same defect for the reflection ``x -> 2 c_x - x`` (other coordinates kept)."""
    cx = u.space.mesh.domain.center[0]

    def mirror(x):
        y = np.array(x, copy=True)
        y[:, 0] = 2.0 * cx - y[:, 0]
        return y

    return _mirror_defect(u, mirror)


def log_second_differences(u, rel_floor=1e-8):
    """Divided second differences of ``log u`` on consecutive 1D dof locations.

    Only points where ``u > rel_floor * max u`` (and their neighbours) enter.
    Returns ``(x_mid, d2)``.
    """
    if u.space.dim != 1:
        raise ValueError("log-concavity scan is one-dimensional")
    x = u.space.mesh.dof_coords[:, 0]
    vals = u.full()
    order = np.argsort(x)
    x, vals = x[order], vals[order]
    keep = vals > rel_floor * vals.max()
    x, lv = x[keep], np.log(vals[keep])
    h1, h2 = x[1:-1] - x[:-2], x[2:] - x[1:-1]
    d2 = 2.0 * ((lv[2:] - lv[1:-1]) / h2 - (lv[1:-1] - lv[:-2]) / h1) / (h1 + h2)
    return x[1:-1], d2


def run_diagnostics(result, require_converged=True):
    """Symmetry and concavity report for a solved eigenpair."""
    if require_converged and not result.converged:
        raise ValueError("diagnostics need a converged result")
    u = result.u
    if u.space.dim == 1:
        _, d2 = log_second_differences(u)
        return Diagnostics(center_symmetry_defect=center_symmetry_defect(u),
                           positive_log_second_differences=int(np.sum(d2 > 0)),
                           max_log_second_difference=float(d2.max()))
    return Diagnostics(center_symmetry_defect=center_symmetry_defect(u),
                       reflection_defect=reflection_defect(u))
