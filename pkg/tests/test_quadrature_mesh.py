import math

import numpy as np
import pytest

from pxeig import DomainSpec, FESpace, eval_basis, generate_mesh, refine
from pxeig.io import dump_mesh_text, write_vtk
from pxeig.mesh import shape_functions
from pxeig.quadrature import gauss_interval, interval_rule, triangle_rule


def triangle_monomial(a, b):
    # int_T x^a y^b over the reference triangle = a! b! / (a + b + 2)!
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@pytest.mark.parametrize("degree", [1, 3, 5, 8, 15])
def test_triangle_rule_exact_on_monomials(degree):
    rule = triangle_rule(degree)
    x, y = rule.points.T
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            got = np.dot(rule.weights, x ** a * y ** b)
            assert got == pytest.approx(triangle_monomial(a, b), rel=1e-13, abs=1e-16)


def test_dunavant_rule_shape():
    rule = triangle_rule(5)
    assert len(rule) == 7
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-15)
    assert np.all(rule.weights > 0)


@pytest.mark.parametrize("n", [1, 2, 4, 7])
def test_gauss_interval_exact(n):
    rule = gauss_interval(n)
    for k in range(2 * n):
        assert np.dot(rule.weights, rule.points[:, 0] ** k) == pytest.approx(1 / (k + 1),
                                                                             rel=1e-13)
    assert len(interval_rule()) == 4


def test_bad_rules_rejected():
    with pytest.raises(ValueError):
        gauss_interval(0)
    with pytest.raises(ValueError):
        triangle_rule(-1)


def test_interval_mesh_example():
    m = generate_mesh(DomainSpec.interval(0, 1), 0.25)
    assert m.n_nodes == 5 and m.n_elements == 4
    np.testing.assert_allclose(np.sort(m.nodes[:, 0]), [0, 0.25, 0.5, 0.75, 1.0])
    assert sorted(m.boundary_nodes.tolist()) == [0, 4]


def test_square_mesh_basic():
    m = generate_mesh(DomainSpec.rectangle(), 0.25)
    assert m.h <= 0.25 + 1e-12
    assert m.element_measures().sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(m.element_measures() > 0)
    bn = m.nodes[m.boundary_nodes]
    on_edge = np.min(np.column_stack([bn, 1 - bn]), axis=1)
    assert np.all(np.abs(on_edge) < 1e-14)
    interior = np.setdiff1d(np.arange(m.n_nodes), m.boundary_nodes)
    xi = m.nodes[interior]
    assert np.all((xi > 1e-12) & (xi < 1 - 1e-12))


@pytest.mark.parametrize("n_rings_h", [0.5, 0.25, 0.1])
def test_disk_area_matches_inscribed_polygon(n_rings_h):
    m = generate_mesh(DomainSpec.disk(), n_rings_h)
    nb = len(m.boundary_nodes)
    # the boundary is a regular nb-gon inscribed in the unit circle
    expected = 0.5 * nb * math.sin(2 * math.pi / nb)
    assert m.element_measures().sum() == pytest.approx(expected, rel=1e-12)
    r = np.hypot(*m.nodes[m.boundary_nodes].T)
    np.testing.assert_allclose(r, 1.0, atol=1e-14)
    assert nb % 6 == 0


def test_annulus_mesh():
    d = DomainSpec.annulus(0, 0, 0.25, 1.0)
    m = generate_mesh(d, 0.2)
    assert np.all(m.element_measures() > 0)
    r = np.hypot(*m.nodes[m.boundary_nodes].T)
    assert np.all(np.isclose(r, 0.25, atol=1e-14) | np.isclose(r, 1.0, atol=1e-14))
    assert m.element_measures().sum() == pytest.approx(d.measure, rel=0.05)


def test_domain_validation():
    with pytest.raises(ValueError):
        DomainSpec.interval(1, 0)
    with pytest.raises(ValueError):
        DomainSpec.disk(0, 0, -1)
    with pytest.raises(ValueError):
        DomainSpec.annulus(0, 0, 1.0, 0.5)
    with pytest.raises(ValueError):
        generate_mesh(DomainSpec.rectangle(), 5.0)
    with pytest.raises(ValueError):
        generate_mesh(DomainSpec.rectangle(), 0.0)


def test_refine_quarters_elements_and_projects():
    m = generate_mesh(DomainSpec.disk(), 0.5)
    r = refine(m)
    assert r.n_elements == 4 * m.n_elements
    assert r.h < m.h
    np.testing.assert_allclose(np.hypot(*r.nodes[r.boundary_nodes].T), 1.0, atol=1e-14)
    a0 = m.element_measures().sum()
    assert a0 < r.element_measures().sum() < math.pi
    sq = generate_mesh(DomainSpec.rectangle(), 0.5)
    assert refine(sq).element_measures().sum() == pytest.approx(1.0, abs=1e-14)
    iv = generate_mesh(DomainSpec.interval(), 0.5)
    assert refine(iv).n_elements == 2 * iv.n_elements


@pytest.mark.parametrize("dim,order", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_partition_of_unity(dim, order, rng):
    pts = rng.random((100, dim))
    if dim == 2:
        flip = pts.sum(axis=1) > 1
        pts[flip] = 1 - pts[flip]
    vals, grads = shape_functions(dim, order, pts)
    np.testing.assert_allclose(vals.sum(axis=1), 1.0, atol=1e-14)
    np.testing.assert_allclose(grads.sum(axis=1), 0.0, atol=1e-13)


def test_nodal_property_p2():
    nodes = np.array([[0, 0], [1, 0], [0, 1], [0.5, 0], [0.5, 0.5], [0, 0.5]])
    vals, _ = shape_functions(2, 2, nodes)
    np.testing.assert_allclose(vals, np.eye(6), atol=1e-15)


def test_eval_basis_checks():
    m = generate_mesh(DomainSpec.rectangle(), 0.5, order=2)
    vals, grads = eval_basis(m, 0, [0.2, 0.3])
    assert vals.shape == (6,) and grads.shape == (6, 2)
    assert vals.sum() == pytest.approx(1.0)
    with pytest.raises(IndexError):
        eval_basis(m, m.n_elements, [0.1, 0.1])
    with pytest.raises(ValueError):
        eval_basis(m, 0, [0.9, 0.9])


@pytest.mark.parametrize("order", [1, 2])
def test_linear_function_reproduced(order, rng):
    # sum_i (x_i + y_i) phi_i(xi) = x + y on any element
    m = generate_mesh(DomainSpec.rectangle(), 0.25, order)
    pts = rng.random((100, 2))
    pts[pts.sum(axis=1) > 1] *= 0.5
    vals, _ = shape_functions(2, order, pts)
    for e in (0, m.n_elements // 2, m.n_elements - 1):
        xy = m.dof_coords[m.dof_map[e]]
        phys = m.nodes[m.elements[e, 0]] + pts @ m.jacobians()[e].T
        np.testing.assert_allclose(vals @ xy.sum(axis=1), phys.sum(axis=1), atol=1e-14)


def test_p2_interpolant_exact_for_quadratic(rng):
    space = FESpace(generate_mesh(DomainSpec.interval(), 0.1, 2))
    u = space.interpolate(lambda x: x[:, 0] * (1 - x[:, 0]))
    pts = rng.random((100, 1))
    np.testing.assert_allclose(space.evaluate_at(u.coeffs, pts), pts[:, 0] * (1 - pts[:, 0]),
                               atol=1e-14)
    assert space.integrate(space.V @ u.coeffs) == pytest.approx(1 / 6, rel=1e-14)
    assert space.evaluate_at(u.coeffs, [[1.5]], outside=-1.0)[0] == -1.0


def test_dof_layout_p2():
    m = generate_mesh(DomainSpec.rectangle(), 0.5, order=2)
    assert m.n_dofs == m.n_nodes + len(m.edges)
    np.testing.assert_allclose(m.dof_coords[:m.n_nodes], m.nodes)
    mids = 0.5 * (m.nodes[m.edges[:, 0]] + m.nodes[m.edges[:, 1]])
    np.testing.assert_allclose(m.dof_coords[m.n_nodes:], mids)
    assert np.all(m.edges[:, 0] < m.edges[:, 1])


def test_mesh_arrays_read_only():
    m = generate_mesh(DomainSpec.rectangle(), 0.5)
    with pytest.raises(ValueError):
        m.nodes[0, 0] = 3.0


def test_dump_and_vtk(tmp_path):
    m = generate_mesh(DomainSpec.rectangle(), 0.5, order=2)
    text = dump_mesh_text(m).splitlines()
    assert int(text[0]) == m.n_nodes
    assert int(text[m.n_nodes + 1]) == m.n_elements
    path = tmp_path / "u.vtk"
    write_vtk(path, m, {"u": np.arange(m.n_dofs, dtype=float)})
    body = path.read_text().splitlines()
    assert body[0] == "# vtk DataFile Version 2.0"
    assert f"POINTS {m.n_dofs} double" in body
    assert f"CELLS {m.n_elements} {7 * m.n_elements}" in body
    i = body.index(f"CELL_TYPES {m.n_elements}")
    assert body[i + 1] == "22"
