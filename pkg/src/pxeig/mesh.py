"""Structured simplicial meshes for intervals, rectangles, disks and annuli.

Also holds the P1/P2 Lagrange shape functions on the reference element.
Meshes are immutable; :func:`refine` returns a new mesh.
"""

from dataclasses import dataclass, field
import math

import numpy as np

__all__ = ["DomainSpec", "Mesh", "generate_mesh", "refine", "eval_basis",
           "shape_functions"]


@dataclass(frozen=True)
class DomainSpec:
    """Geometry of the computational domain.

    ``kind`` is one of ``interval``, ``rectangle``, ``disk``, ``annulus``;
    ``params`` are ``(a, b)``, ``(x0, x1, y0, y1)``, ``(cx, cy, r)`` and
    ``(cx, cy, r_in, r_out)`` respectively.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        nparams = {"interval": 2, "rectangle": 4, "disk": 3, "annulus": 4}
        if self.kind not in nparams:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if len(self.params) != nparams[self.kind]:
            raise ValueError(f"{self.kind} takes {nparams[self.kind]} parameters, "
                             f"got {len(self.params)}")
        if not all(math.isfinite(v) for v in self.params):
            raise ValueError("domain parameters must be finite")
        ok = {
            "interval": lambda a, b: a < b,
            "rectangle": lambda x0, x1, y0, y1: x0 < x1 and y0 < y1,
            "disk": lambda cx, cy, r: r > 0,
            "annulus": lambda cx, cy, ri, ro: 0 < ri < ro,
        }[self.kind](*self.params)
        if not ok:
            raise ValueError(f"degenerate {self.kind} {self.params}")

    @classmethod
    def interval(cls, a=0.0, b=1.0):
        return cls("interval", (a, b))

    @classmethod
    def rectangle(cls, x0=0.0, x1=1.0, y0=0.0, y1=1.0):
        return cls("rectangle", (x0, x1, y0, y1))

    @classmethod
    def disk(cls, cx=0.0, cy=0.0, r=1.0):
        return cls("disk", (cx, cy, r))

    @classmethod
    def annulus(cls, cx=0.0, cy=0.0, r_in=0.25, r_out=1.0):
        return cls("annulus", (cx, cy, r_in, r_out))

    @property
    def dim(self):
        return 1 if self.kind == "interval" else 2

    @property
    def curved(self):
        return self.kind in ("disk", "annulus")

    @property
    def center(self):
        p = self.params
        if self.kind == "interval":
            return np.array([0.5 * (p[0] + p[1])])
        if self.kind == "rectangle":
            return np.array([0.5 * (p[0] + p[1]), 0.5 * (p[2] + p[3])])
        return np.array([p[0], p[1]])

    @property
    def diameter(self):
        p = self.params
        if self.kind == "interval":
            return p[1] - p[0]
        if self.kind == "rectangle":
            return math.hypot(p[1] - p[0], p[3] - p[2])
        return 2.0 * p[-1]

    @property
    def measure(self):
        """Exact length/area of the domain."""
        p = self.params
        if self.kind == "interval":
            return p[1] - p[0]
        if self.kind == "rectangle":
            return (p[1] - p[0]) * (p[3] - p[2])
        if self.kind == "disk":
            return math.pi * p[2] ** 2
        return math.pi * (p[3] ** 2 - p[2] ** 2)

    def boundary_distance(self, points):
        """Distance of ``points`` (shape (n, dim)) to the exact boundary."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        p = self.params
        if self.kind == "interval":
            return np.minimum(np.abs(x[:, 0] - p[0]), np.abs(x[:, 0] - p[1]))
        if self.kind == "rectangle":
            return np.min(np.abs(np.column_stack([x[:, 0] - p[0], x[:, 0] - p[1],
                                                  x[:, 1] - p[2], x[:, 1] - p[3]])),
                          axis=1)
        rho = np.hypot(x[:, 0] - p[0], x[:, 1] - p[1])
        if self.kind == "disk":
            return np.abs(rho - p[2])
        return np.minimum(np.abs(rho - p[2]), np.abs(rho - p[3]))

    def project_to_boundary(self, points):
        """Move points radially onto the nearest exact circle (curved kinds only)."""
        x = np.array(points, dtype=float, copy=True)
        if not self.curved:
            return x
        c = np.array(self.params[:2])
        d = x - c
        rho = np.hypot(d[:, 0], d[:, 1])
        if self.kind == "disk":
            target = np.full_like(rho, self.params[2])
        else:
            ri, ro = self.params[2], self.params[3]
            target = np.where(np.abs(rho - ri) < np.abs(rho - ro), ri, ro)
        return c + d * (target / rho)[:, None]


# --------------------------------------------------------------------------
# reference shape functions

def shape_functions(dim, order, points):
    """Values ``(n, nloc)`` and reference gradients ``(n, nloc, dim)``.

    Local dof order: vertices first, then edge midpoints (0,1), (1,2), (2,0)
    in 2D or the single midpoint in 1D.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    if dim == 1:
        xi = pts[:, 0]
        lam = np.column_stack([1.0 - xi, xi])
        dlam = np.array([[-1.0], [1.0]])
        edges = [(0, 1)]
    elif dim == 2:
        xi, eta = pts[:, 0], pts[:, 1]
        lam = np.column_stack([1.0 - xi - eta, xi, eta])
        dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        edges = [(0, 1), (1, 2), (2, 0)]
    else:
        raise ValueError(f"unsupported dimension {dim}")
    nv = dim + 1
    if order == 1:
        return lam, np.broadcast_to(dlam, (n, nv, dim)).copy()
    if order != 2:
        raise ValueError(f"unsupported element order {order}")
    vals = np.empty((n, nv + len(edges)))
    grads = np.empty((n, nv + len(edges), dim))
    for i in range(nv):
        vals[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
        grads[:, i, :] = (4.0 * lam[:, i] - 1.0)[:, None] * dlam[i]
    for k, (i, j) in enumerate(edges):
        vals[:, nv + k] = 4.0 * lam[:, i] * lam[:, j]
        grads[:, nv + k, :] = 4.0 * (lam[:, i, None] * dlam[j] + lam[:, j, None] * dlam[i])
    return vals, grads


# --------------------------------------------------------------------------
# mesh container

@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming simplicial mesh with P1 or P2 degrees of freedom.

    Attributes
    ----------
    domain : DomainSpec
    nodes : (n_nodes, dim) array of vertex coordinates
    elements : (n_elements, dim + 1) vertex indices, positively oriented
    boundary_nodes : sorted vertex indices on the boundary
    order : 1 or 2
    dof_map : (n_elements, n_local) global dof indices
    dof_coords : (n_dofs, dim) dof locations (vertices, then edge midpoints)
    boundary_dofs : sorted dof indices constrained to zero
    """

    domain: DomainSpec
    nodes: np.ndarray
    elements: np.ndarray
    boundary_nodes: np.ndarray
    order: int
    dof_map: np.ndarray
    dof_coords: np.ndarray
    boundary_dofs: np.ndarray
    edges: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.nodes.shape[1]

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    @property
    def n_dofs(self):
        return self.dof_coords.shape[0]

    def jacobians(self):
        """Affine element Jacobians, shape (n_elements, dim, dim)."""
        v = self.nodes[self.elements]
        return np.stack([v[:, i + 1] - v[:, 0] for i in range(self.dim)], axis=-1)

    def element_measures(self):
        jac = self.jacobians()
        if self.dim == 1:
            return jac[:, 0, 0]
        return 0.5 * np.linalg.det(jac)

    def element_diameters(self):
        v = self.nodes[self.elements]
        nv = v.shape[1]
        d = [np.linalg.norm(v[:, i] - v[:, j], axis=1)
             for i in range(nv) for j in range(i + 1, nv)]
        return np.max(np.column_stack(d), axis=1)

    @property
    def h(self):
        return float(self.element_diameters().max())

    def with_order(self, order):
        return _build(self.domain, self.nodes, self.elements, order)


def _orient(nodes, elements):
    elements = np.array(elements, dtype=np.int64)
    if nodes.shape[1] == 1:
        flip = nodes[elements[:, 1], 0] < nodes[elements[:, 0], 0]
        elements[flip] = elements[flip][:, ::-1]
        return elements
    v = nodes[elements]
    e1, e2 = v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]
    flip = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
    elements[flip] = elements[flip][:, [0, 2, 1]]
    return elements


def _build(domain, nodes, elements, order):
    if order not in (1, 2):
        raise ValueError(f"element order must be 1 or 2, got {order}")
    nodes = np.asarray(nodes, dtype=float)
    elements = _orient(nodes, elements)
    if elements.min() < 0 or elements.max() >= len(nodes):
        raise ValueError("element references a non-existent node")
    n_nodes = len(nodes)

    if nodes.shape[1] == 1:
        counts = np.bincount(elements.ravel(), minlength=n_nodes)
        boundary_nodes = np.flatnonzero(counts == 1)
        edges = elements.copy()
        elem_edges = np.arange(len(elements))[:, None]
        boundary_edges = np.zeros(len(edges), dtype=bool)
    else:
        local = elements[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 3, 2)
        keys = np.sort(local, axis=2).reshape(-1, 2)
        edges, inverse, counts = np.unique(keys, axis=0, return_inverse=True,
                                           return_counts=True)
        elem_edges = inverse.reshape(-1, 3)
        boundary_edges = counts == 1
        boundary_nodes = np.unique(edges[boundary_edges])

    if order == 1:
        dof_map = elements.copy()
        dof_coords = nodes.copy()
        boundary_dofs = boundary_nodes.copy()
    else:
        dof_map = np.hstack([elements, n_nodes + elem_edges])
        dof_coords = np.vstack([nodes, 0.5 * (nodes[edges[:, 0]] + nodes[edges[:, 1]])])
        boundary_dofs = np.concatenate([boundary_nodes,
                                        n_nodes + np.flatnonzero(boundary_edges)])
    mesh = Mesh(domain=domain, nodes=nodes, elements=elements,
                boundary_nodes=boundary_nodes, order=order, dof_map=dof_map,
                dof_coords=dof_coords, boundary_dofs=np.sort(boundary_dofs),
                edges=edges)
    for arr in (nodes, elements, boundary_nodes, dof_map, dof_coords,
                mesh.boundary_dofs, edges):
        arr.flags.writeable = False
    if np.any(mesh.element_measures() <= 0):
        raise ValueError("mesh contains degenerate elements")
    return mesh


# --------------------------------------------------------------------------
# generators

def _interval(a, b, h):
    n = max(1, math.ceil((b - a) / h - 1e-12))
    x = np.linspace(a, b, n + 1)
    return x[:, None], np.column_stack([np.arange(n), np.arange(1, n + 1)])


def _rectangle(x0, x1, y0, y1, h):
    # crossed triangulation: every cell is split into four by its centre
    nx = max(1, math.ceil((x1 - x0) / h - 1e-12))
    ny = max(1, math.ceil((y1 - y0) / h - 1e-12))
    xs, ys = np.linspace(x0, x1, nx + 1), np.linspace(y0, y1, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    corners = np.column_stack([gx.ravel(), gy.ravel()])
    cx, cy = np.meshgrid(0.5 * (xs[:-1] + xs[1:]), 0.5 * (ys[:-1] + ys[1:]), indexing="ij")
    centres = np.column_stack([cx.ravel(), cy.ravel()])
    nodes = np.vstack([corners, centres])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    i, j = i.ravel(), j.ravel()
    sw, se = i * (ny + 1) + j, (i + 1) * (ny + 1) + j
    nw, ne = sw + 1, se + 1
    c = len(corners) + i * ny + j
    tris = np.vstack([np.column_stack([sw, se, c]), np.column_stack([se, ne, c]),
                      np.column_stack([ne, nw, c]), np.column_stack([nw, sw, c])])
    return nodes, tris


def _zip_rings(inner, inner_ang, outer, outer_ang):
    """Triangulate the band between two closed rings of nodes."""
    m, n = len(inner), len(outer)
    if m == 1:
        return [(inner[0], outer[j], outer[(j + 1) % n]) for j in range(n)]
    a = np.append(inner_ang, 2 * math.pi + inner_ang[0])
    b = np.append(outer_ang, 2 * math.pi + outer_ang[0])
    tris = []
    i = j = 0
    while i < m or j < n:
        advance_inner = j == n or (i < m and a[i + 1] < b[j + 1] - 1e-12)
        if advance_inner:
            tris.append((inner[i], inner[(i + 1) % m], outer[j % n]))
            i += 1
        else:
            tris.append((inner[i % m], outer[(j + 1) % n], outer[j]))
            j += 1
    return tris


def _rings(cx, cy, radii, counts, with_centre):
    nodes, rings, angles = [], [], []
    if with_centre:
        nodes.append((cx, cy))
        rings.append([0])
        angles.append(np.zeros(1))
    for r, n in zip(radii, counts):
        th = 2 * math.pi * np.arange(n) / n
        start = len(nodes)
        nodes.extend(zip(cx + r * np.cos(th), cy + r * np.sin(th)))
        rings.append(list(range(start, start + n)))
        angles.append(th)
    tris = []
    for k in range(1, len(rings)):
        tris += _zip_rings(rings[k - 1], angles[k - 1], rings[k], angles[k])
    return np.array(nodes), np.array(tris)


def _disk(cx, cy, r, h):
    nr = max(1, math.ceil(r / h - 1e-12))
    radii = r * np.arange(1, nr + 1) / nr
    return _rings(cx, cy, radii, [6 * k for k in range(1, nr + 1)], True)


def _annulus(cx, cy, ri, ro, h):
    nr = max(1, math.ceil((ro - ri) / h - 1e-12))
    radii = np.linspace(ri, ro, nr + 1)
    # even counts keep the node set symmetric under x -> -x and x -> -x, y -> -y
    counts = [max(8, 2 * math.ceil(math.pi * rk / h - 1e-12)) for rk in radii]
    return _rings(cx, cy, radii, counts, False)


def generate_mesh(spec, target_h, order=1):
    """Build a structured mesh of ``spec`` with element size about ``target_h``.

    Rectangles use a crossed (four triangles per cell) grid; disks and
    annuli use concentric rings whose node counts grow with the ring
    circumference, with boundary nodes placed on the exact circles.
    """
    if not target_h > 0:
        raise ValueError("target_h must be positive")
    if target_h > spec.diameter:
        raise ValueError(f"target_h={target_h} exceeds the domain diameter "
                         f"{spec.diameter}")
    builder = {"interval": _interval, "rectangle": _rectangle,
               "disk": _disk, "annulus": _annulus}[spec.kind]
    nodes, elements = builder(*spec.params, target_h)
    return _build(spec, nodes, elements, order)


def refine(mesh):
    """Uniform refinement: bisection in 1D, red (1 -> 4) refinement in 2D.

    Midpoints of boundary edges are projected onto curved boundaries.
    """
    nodes, elems = mesh.nodes, mesh.elements
    if mesh.dim == 1:
        mid = 0.5 * (nodes[elems[:, 0]] + nodes[elems[:, 1]])
        m = mesh.n_nodes + np.arange(mesh.n_elements)
        new_nodes = np.vstack([nodes, mid])
        children = np.vstack([np.column_stack([elems[:, 0], m]),
                              np.column_stack([m, elems[:, 1]])])
        return _build(mesh.domain, new_nodes, children, mesh.order)

    local = elems[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 3, 2)
    keys = np.sort(local, axis=2).reshape(-1, 2)
    edges, inverse, counts = np.unique(keys, axis=0, return_inverse=True,
                                       return_counts=True)
    mid = 0.5 * (nodes[edges[:, 0]] + nodes[edges[:, 1]])
    on_boundary = counts == 1
    if mesh.domain.curved:
        mid[on_boundary] = mesh.domain.project_to_boundary(mid[on_boundary])
    e = mesh.n_nodes + inverse.reshape(-1, 3)
    m01, m12, m20 = e[:, 0], e[:, 1], e[:, 2]
    v0, v1, v2 = elems[:, 0], elems[:, 1], elems[:, 2]
    children = np.vstack([np.column_stack([v0, m01, m20]),
                          np.column_stack([v1, m12, m01]),
                          np.column_stack([v2, m20, m12]),
                          np.column_stack([m01, m12, m20])])
    return _build(mesh.domain, np.vstack([nodes, mid]), children, mesh.order)


def eval_basis(mesh, element, ref_point):
    """Shape function values and reference gradients on one element.

    Returns arrays of shape ``(n_local,)`` and ``(n_local, dim)``.
    """
    if not 0 <= element < mesh.n_elements:
        raise IndexError(f"element {element} out of range [0, {mesh.n_elements})")
    pt = np.asarray(ref_point, dtype=float).reshape(1, -1)
    if pt.shape[1] != mesh.dim:
        raise ValueError("reference point has wrong dimension")
    tol = 1e-12
    if np.any(pt < -tol) or pt.sum() > 1 + tol:
        raise ValueError("reference point outside the reference element")
    vals, grads = shape_functions(mesh.dim, mesh.order, pt)
    return vals[0], grads[0]
