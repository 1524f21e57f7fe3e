"""Tests for mesh construction, validation, connectivity and file I/O."""

import numpy as np
import pytest

from eigenfem import (MeshError, SimplicialMesh, edge_patches,
                      export_triangle, generate_structured, import_mesh,
                      interior_connectivity, load_triangle, mesh_from_json,
                      mesh_spacing, mesh_to_json)
from eigenfem.element_geometry import element_geometry


def test_structured_counts():
    for J in (2, 3, 5, 9):
        for kind in ("mesh45", "mesh135"):
            m = generate_structured(kind, J)
            assert m.n_vertices == J * J
            assert m.n_elements == 2 * (J - 1) ** 2
            assert m.n_interior == (J - 2) ** 2
            assert m.boundary.sum() == J * J - (J - 2) ** 2


def test_structured_volumes_sum_to_one():
    for kind in ("mesh45", "mesh135"):
        m = generate_structured(kind, 7)
        total = sum(element_geometry(m.vertices[e]).volume for e in m.elements)
        assert abs(total - 1.0) <= 1e-12


def test_structured_orientation_positive():
    # from_arrays repairs orientation, so every stored element must have
    # positive Jacobian determinant
    m = generate_structured("mesh135", 6)
    for e in m.elements:
        X = m.vertices[e]
        V = np.column_stack([X[1] - X[0], X[2] - X[0]])
        assert np.linalg.det(V) > 0


def test_interior_index_layout():
    m = generate_structured("mesh45", 4)
    ii = m.interior_index
    assert ii[m.boundary].max() == -1
    interior = ii[~m.boundary]
    assert sorted(interior) == list(range(m.n_interior))


def test_edge_patches_incidence():
    # every edge of a structured mesh belongs to one element (hull) or two
    m = generate_structured("mesh45", 5)
    patches = edge_patches(m)
    counts = {len(v) for v in patches.values()}
    assert counts == {1, 2}
    n_edges = len(patches)
    # Euler: V - E + F = 1 for a triangulated disk (F counts triangles)
    assert m.n_vertices - n_edges + m.n_elements == 1


def test_interior_connectivity_structured():
    rep = interior_connectivity(generate_structured("mesh45", 5))
    assert rep.connected and rep.has_interior
    assert len(rep.components) == 1


def test_interior_connectivity_vacuous():
    # J=2 has no interior vertices: connected by convention, flagged
    rep = interior_connectivity(generate_structured("mesh45", 2))
    assert rep.connected
    assert not rep.has_interior
    assert rep.components == []


def test_interior_connectivity_disconnected():
    # two unit squares joined at a single boundary vertex: each square has
    # one interior vertex and no interior-interior edge crosses the joint
    def square(offset):
        m = generate_structured("mesh45", 3)
        return m.vertices + offset, m.elements, m.boundary

    v1, e1, b1 = square(np.array([0.0, 0.0]))
    v2, e2, b2 = square(np.array([1.0, 1.0]))
    # vertex (1,1) appears in both; merge by concatenation + dedup by hand
    verts = np.vstack([v1, v2])
    elems = np.vstack([e1, e2 + len(v1)])
    # drop the duplicate of (1,1): index in v2 is 0
    dup_new = len(v1)
    orig = 8  # index of (1,1) in a 3x3 grid, row-major
    assert np.allclose(v1[orig], [1.0, 1.0]) and np.allclose(v2[0], [1.0, 1.0])
    keep = np.ones(len(verts), dtype=bool)
    keep[dup_new] = False
    remap = np.cumsum(keep) - 1
    remap[dup_new] = remap[orig]
    verts = verts[keep]
    elems = remap[elems]
    bnd = np.concatenate([b1, b2[1:]])
    m = SimplicialMesh.from_arrays(2, verts, elems, bnd)
    rep = interior_connectivity(m)
    assert not rep.connected
    assert len(rep.components) == 2


def test_from_arrays_rejects_duplicate_vertices():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    elems = np.array([[0, 1, 2], [1, 3, 2]])
    bnd = np.ones(4, dtype=bool)
    with pytest.raises(MeshError):
        SimplicialMesh.from_arrays(2, verts, elems, bnd)


def test_from_arrays_rejects_degenerate_element():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    elems = np.array([[0, 1, 2]])
    with pytest.raises(MeshError):
        SimplicialMesh.from_arrays(2, verts, elems, np.ones(3, dtype=bool))


def test_from_arrays_rejects_bad_index():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(MeshError):
        SimplicialMesh.from_arrays(2, verts, np.array([[0, 1, 5]]),
                                   np.ones(3, dtype=bool))


def test_from_arrays_rejects_unflagged_hull_vertex():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    elems = np.array([[0, 1, 2]])
    bnd = np.array([True, True, False])  # vertex 2 is on the hull
    with pytest.raises(MeshError):
        SimplicialMesh.from_arrays(2, verts, elems, bnd)


def test_mesh_arrays_are_readonly():
    m = generate_structured("mesh45", 3)
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 42.0


def test_mesh_spacing():
    m = generate_structured("mesh45", 5)
    # longest edge is the cell diagonal
    assert abs(mesh_spacing(m) - np.sqrt(2.0) / 4.0) <= 1e-14


def test_json_roundtrip():
    m = generate_structured("mesh135", 4)
    m2 = mesh_from_json(mesh_to_json(m))
    assert np.array_equal(m.vertices, m2.vertices)
    assert np.array_equal(m.elements, m2.elements)
    assert np.array_equal(m.boundary, m2.boundary)


def test_triangle_roundtrip(tmp_path):
    m = generate_structured("mesh45", 4)
    node_text, ele_text = export_triangle(m)
    node = tmp_path / "m.node"
    ele = tmp_path / "m.ele"
    node.write_text(node_text)
    ele.write_text(ele_text)
    m2 = load_triangle(str(node), str(ele))
    assert np.allclose(m.vertices, m2.vertices)
    assert np.array_equal(np.sort(m.elements, axis=1),
                          np.sort(m2.elements, axis=1))
    assert np.array_equal(m.boundary, m2.boundary)


def test_import_mesh_requires_markers():
    node_text = "4 2 0 0\n1 0 0\n2 1 0\n3 1 1\n4 0 1\n"
    ele_text = "2 3 0\n1 1 2 3\n2 1 3 4\n"
    with pytest.raises(MeshError):
        import_mesh(node_text, ele_text)


def test_import_mesh_zero_based():
    node_text = ("4 2 0 1\n"
                 "0 0.0 0.0 1\n1 1.0 0.0 1\n2 1.0 1.0 1\n3 0.0 1.0 1\n")
    ele_text = "2 3 0\n0 0 1 2\n1 0 2 3\n"
    m = import_mesh(node_text, ele_text)
    assert m.n_vertices == 4 and m.n_elements == 2
    assert m.boundary.all()
