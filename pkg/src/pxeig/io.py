"""Plain-text outputs: eigenfunction CSV, key=value summaries, legacy VTK, mesh dumps."""

import csv

import numpy as np

__all__ = ["write_eigenfunction_csv", "read_eigenfunction_csv", "write_summary",
           "read_summary", "write_vtk", "dump_mesh_text", "read_key_values", "fmt"]

# VTK cell type ids, keyed by (dim, order)
_VTK_CELL = {(1, 1): 3, (1, 2): 21, (2, 1): 5, (2, 2): 22}


def fmt(value):
    """17 significant digits for floats, ``str`` for everything else."""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if isinstance(value, (list, tuple)):
        return ",".join(fmt(v) for v in value)
    return str(value)


def write_eigenfunction_csv(path, mesh, values):
    """One row per dof (Dirichlet dofs included) in global dof order."""
    header = ["x", "u"] if mesh.dim == 1 else ["x", "y", "u"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for xy, v in zip(mesh.dof_coords, values):
            w.writerow([fmt(c) for c in xy] + [fmt(v)])


def read_eigenfunction_csv(path):
    """Returns ``(coords, values)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :-1], data[:, -1]


def read_key_values(path):
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_summary(path, items):
    with open(path, "w") as fh:
        for key, value in items:
            fh.write(f"{key}={fmt(value)}\n")


def read_summary(path):
    return read_key_values(path)


def write_vtk(path, mesh, point_data, title="eigenfunction"):
    """Legacy ASCII unstructured grid; P2 meshes are written as quadratic cells."""
    pts = np.zeros((mesh.n_dofs, 3))
    pts[:, :mesh.dim] = mesh.dof_coords
    cells = mesh.dof_map
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write(f"{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(pts)} double\n")
        for p in pts:
            fh.write(" ".join(fmt(c) for c in p) + "\n")
        n, nloc = cells.shape
        fh.write(f"CELLS {n} {n * (nloc + 1)}\n")
        for c in cells:
            fh.write(f"{nloc} " + " ".join(str(int(i)) for i in c) + "\n")
        fh.write(f"CELL_TYPES {n}\n")
        fh.write((f"{_VTK_CELL[(mesh.dim, mesh.order)]}\n") * n)
        fh.write(f"POINT_DATA {len(pts)}\n")
        for name, vals in point_data.items():
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in vals:
                fh.write(fmt(v) + "\n")


def dump_mesh_text(mesh):
    """Node count, coordinates, element count and vertex lists as text."""
    lines = [str(mesh.n_nodes)]
    lines += [" ".join(fmt(float(c)) for c in xy) for xy in mesh.nodes]
    lines.append(str(mesh.n_elements))
    lines += [" ".join(str(int(i)) for i in e) for e in mesh.elements]
    return "\n".join(lines) + "\n"
