"""Simplicial meshes: construction, structured generators, file formats.

A mesh stores vertices, positively oriented elements, and a boundary flag
per vertex.  Dirichlet problems use only the interior vertices, so every
mesh carries a dense numbering of its interior vertices in ``interior_index``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError

# Vertices closer than this are treated as duplicates on ingestion.
DUPLICATE_TOL = 1e-12
# Relative threshold (against the Hadamard bound of the edge matrix) below
# which an element counts as degenerate.
DEGENERATE_REL_TOL = 1e-14


@dataclass(frozen=True)
class SimplicialMesh:
    """Conforming simplicial mesh in dimension 2 or 3.

    Attributes
    ----------
    dim : int
        Spatial dimension (2 or 3).
    vertices : (n_vertices, dim) float array
    elements : (n_elements, dim+1) int array
        Vertex indices per element, positively oriented.
    boundary : (n_vertices,) bool array
        True for vertices where the homogeneous Dirichlet condition holds.
    interior_index : (n_vertices,) int array
        Dense 0..n_interior-1 numbering of interior vertices, -1 on the
        boundary.  Row/column i of an assembled system corresponds to the
        vertex v with interior_index[v] == i.
    """

    dim: int
    vertices: np.ndarray
    elements: np.ndarray
    boundary: np.ndarray
    interior_index: np.ndarray = field(repr=False)
    label: str = "custom"

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(~self.boundary))

    @property
    def interior_vertices(self) -> np.ndarray:
        """Vertex ids of interior vertices in increasing order."""
        return np.flatnonzero(~self.boundary)

    @classmethod
    def from_arrays(cls, dim, vertices, elements, boundary,
                    label: str = "custom") -> "SimplicialMesh":
        """Validate, orient, and freeze raw mesh arrays.

        Raises MeshError for out-of-range or repeated element indices,
        duplicate vertices, degenerate (zero-volume) elements, and
        boundary flags inconsistent with the element-incidence of facets.
        Negatively oriented elements are repaired by swapping the last
        two vertices.
        """
        if dim not in (2, 3):
            raise MeshError(f"dimension must be 2 or 3, got {dim}")
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        elements = np.ascontiguousarray(elements, dtype=np.int64)
        boundary = np.ascontiguousarray(boundary, dtype=bool)
        if vertices.ndim != 2 or vertices.shape[1] != dim:
            raise MeshError(f"vertices must have shape (n, {dim})")
        if elements.ndim != 2 or elements.shape[1] != dim + 1:
            raise MeshError(f"elements must have shape (n, {dim + 1})")
        if boundary.shape != (vertices.shape[0],):
            raise MeshError("boundary flags must have one entry per vertex")
        if not np.all(np.isfinite(vertices)):
            raise MeshError("vertex coordinates must be finite")

        n_v = vertices.shape[0]
        if elements.size and (elements.min() < 0 or elements.max() >= n_v):
            raise MeshError("element vertex index out of range")
        for k, elem in enumerate(elements):
            if len(set(elem.tolist())) != dim + 1:
                raise MeshError(f"element {k} repeats a vertex index")

        _check_duplicate_vertices(vertices)

        elements = elements.copy()
        for k in range(elements.shape[0]):
            X = vertices[elements[k]]
            V = (X[1:] - X[0]).T
            det = float(np.linalg.det(V))
            scale = float(np.prod(np.linalg.norm(V, axis=0)))
            if abs(det) <= DEGENERATE_REL_TOL * max(scale, 1e-300):
                raise MeshError(f"element {k} is degenerate (zero volume)")
            if det < 0.0:
                elements[k, [dim - 1, dim]] = elements[k, [dim, dim - 1]]

        interior_index = np.full(n_v, -1, dtype=np.int64)
        ids = np.flatnonzero(~boundary)
        interior_index[ids] = np.arange(ids.size)

        for a in (vertices, elements, boundary, interior_index):
            a.setflags(write=False)
        mesh = cls(dim, vertices, elements, boundary, interior_index, label)
        _check_boundary_flags(mesh)
        return mesh


def _check_duplicate_vertices(vertices: np.ndarray) -> None:
    from scipy.spatial import cKDTree

    if vertices.shape[0] < 2:
        return
    tree = cKDTree(vertices)
    pairs = tree.query_pairs(DUPLICATE_TOL)
    if pairs:
        a, b = sorted(next(iter(pairs)))
        raise MeshError(f"vertices {a} and {b} coincide within {DUPLICATE_TOL}")


def _check_boundary_flags(mesh: SimplicialMesh) -> None:
    """Every vertex on a facet incident to a single element must be flagged."""
    counts: dict[tuple, int] = {}
    d = mesh.dim
    for elem in mesh.elements:
        for facet in itertools.combinations(sorted(elem.tolist()), d):
            counts[facet] = counts.get(facet, 0) + 1
    for facet, c in counts.items():
        if c == 1:
            for v in facet:
                if not mesh.boundary[v]:
                    raise MeshError(
                        f"vertex {v} lies on a boundary facet but is not "
                        "flagged as boundary"
                    )
        elif c > 2:
            raise MeshError(f"facet {facet} shared by {c} elements")


# ---------------------------------------------------------------------------
# structured generators on the unit square
# ---------------------------------------------------------------------------

def generate_structured(kind: str, J: int) -> SimplicialMesh:
    """Uniform J x J grid of the unit square split into right triangles.

    kind "mesh45" cuts each cell along the southwest-northeast diagonal,
    "mesh135" along the southeast-northwest diagonal.  J is the number of
    grid points per axis, so the grid spacing is 1/(J-1).
    """
    if not isinstance(J, (int, np.integer)) or isinstance(J, bool):
        raise MeshError("J must be an integer")
    if J < 2:
        raise MeshError("J must be at least 2")
    kind = kind.lower()
    if kind not in ("mesh45", "mesh135"):
        raise MeshError(f"unknown structured mesh kind {kind!r}")

    t = np.linspace(0.0, 1.0, J)
    X, Y = np.meshgrid(t, t, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    elements = []
    for iy in range(J - 1):
        for ix in range(J - 1):
            a = iy * J + ix
            b = a + 1
            c = a + J + 1
            d = a + J
            if kind == "mesh45":
                elements.append((a, b, c))
                elements.append((a, c, d))
            else:
                elements.append((a, b, d))
                elements.append((b, c, d))
    elements = np.asarray(elements, dtype=np.int64)

    ii, jj = np.meshgrid(np.arange(J), np.arange(J), indexing="xy")
    on_edge = (ii == 0) | (ii == J - 1) | (jj == 0) | (jj == J - 1)
    boundary = on_edge.ravel()
    return SimplicialMesh.from_arrays(2, vertices, elements, boundary,
                                      label=f"{kind}-J{J}")


# ---------------------------------------------------------------------------
# adjacency
# ---------------------------------------------------------------------------

def edge_patches(mesh: SimplicialMesh) -> dict[tuple[int, int], list[int]]:
    """Map each mesh edge (sorted vertex pair) to the elements containing it."""
    patches: dict[tuple[int, int], list[int]] = {}
    for k, elem in enumerate(mesh.elements):
        for a, b in itertools.combinations(sorted(elem.tolist()), 2):
            patches.setdefault((a, b), []).append(k)
    return patches


@dataclass(frozen=True)
class InteriorConnectivity:
    """Connectivity of the graph of interior vertices joined by mesh edges."""

    connected: bool
    components: list
    has_interior: bool


def interior_connectivity(mesh: SimplicialMesh) -> InteriorConnectivity:
    """Breadth-first search over edges with both endpoints interior.

    A mesh with no interior vertices is vacuously connected; has_interior
    is False there so callers can tell the vacuous case apart.
    """
    interior = mesh.interior_vertices
    if interior.size == 0:
        return InteriorConnectivity(True, [], False)

    adj: dict[int, set[int]] = {int(v): set() for v in interior}
    for (a, b) in edge_patches(mesh):
        if not mesh.boundary[a] and not mesh.boundary[b]:
            adj[a].add(b)
            adj[b].add(a)

    seen: set[int] = set()
    components: list[list[int]] = []
    for start in interior:
        start = int(start)
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        queue = [start]
        while queue:
            v = queue.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        components.append(sorted(comp))
    components.sort(key=lambda c: c[0])
    return InteriorConnectivity(len(components) == 1, components, True)


# ---------------------------------------------------------------------------
# Triangle .node / .ele text format (2D only, boundary markers required)
# ---------------------------------------------------------------------------

def _data_lines(text: str):
    for line in text.splitlines():
        body = line.split("#", 1)[0].strip()
        if body:
            yield body.split()


def parse_node(text: str):
    """Parse .node text into (vertices, boundary, index_base)."""
    lines = _data_lines(text)
    try:
        header = next(lines)
    except StopIteration:
        raise MeshError(".node file is empty") from None
    if len(header) != 4:
        raise MeshError(".node header must have 4 fields")
    n_v, dim, n_attr, marker_flag = (int(tok) for tok in header)
    if dim != 2:
        raise MeshError(f".node dimension must be 2, got {dim}")
    if marker_flag != 1:
        raise MeshError(".node file lacks boundary markers; markers are "
                        "required and are never inferred from geometry")
    if n_v < 1:
        raise MeshError(".node vertex count must be positive")

    rows = list(lines)
    if len(rows) != n_v:
        raise MeshError(f".node header promises {n_v} vertices, found {len(rows)}")
    want = 1 + 2 + n_attr + 1
    ids = np.empty(n_v, dtype=np.int64)
    coords = np.empty((n_v, 2), dtype=np.float64)
    markers = np.empty(n_v, dtype=np.int64)
    for r, toks in enumerate(rows):
        if len(toks) != want:
            raise MeshError(f".node line {r + 2}: expected {want} fields, got {len(toks)}")
        ids[r] = int(toks[0])
        coords[r] = [float(toks[1]), float(toks[2])]
        markers[r] = int(toks[-1])

    base = int(ids.min())
    if base not in (0, 1):
        raise MeshError(f".node indices must start at 0 or 1, not {base}")
    if sorted(ids.tolist()) != list(range(base, base + n_v)):
        raise MeshError(".node vertex numbering must be consecutive")
    order = np.argsort(ids)
    return coords[order], markers[order] != 0, base


def parse_ele(text: str, n_vertices: int, base: int) -> np.ndarray:
    """Parse .ele text into a 0-based (n, 3) element array."""
    lines = _data_lines(text)
    try:
        header = next(lines)
    except StopIteration:
        raise MeshError(".ele file is empty") from None
    if len(header) != 3:
        raise MeshError(".ele header must have 3 fields")
    n_e, nodes_per, n_attr = (int(tok) for tok in header)
    if nodes_per != 3:
        raise MeshError(f"only 3-node triangles are supported, got {nodes_per}")
    if n_e < 1:
        raise MeshError(".ele element count must be positive")

    rows = list(lines)
    if len(rows) != n_e:
        raise MeshError(f".ele header promises {n_e} elements, found {len(rows)}")
    want = 1 + 3 + n_attr
    elems = np.empty((n_e, 3), dtype=np.int64)
    for r, toks in enumerate(rows):
        if len(toks) != want:
            raise MeshError(f".ele line {r + 2}: expected {want} fields, got {len(toks)}")
        elems[r] = [int(toks[1]) - base, int(toks[2]) - base, int(toks[3]) - base]
    if elems.min() < 0 or elems.max() >= n_vertices:
        raise MeshError(".ele references a vertex outside the .node file")
    return elems


def import_mesh(node_text: str, ele_text: str) -> SimplicialMesh:
    vertices, boundary, base = parse_node(node_text)
    elements = parse_ele(ele_text, vertices.shape[0], base)
    return SimplicialMesh.from_arrays(2, vertices, elements, boundary,
                                      label="imported-triangle")


def load_triangle(node_path, ele_path) -> SimplicialMesh:
    with open(node_path, "r", encoding="utf-8") as fh:
        node_text = fh.read()
    with open(ele_path, "r", encoding="utf-8") as fh:
        ele_text = fh.read()
    return import_mesh(node_text, ele_text)


def export_triangle(mesh: SimplicialMesh) -> tuple[str, str]:
    """Render a 2D mesh as 1-based .node/.ele text with boundary markers."""
    if mesh.dim != 2:
        raise MeshError("Triangle export is 2D only")
    out = [f"{mesh.n_vertices} 2 0 1"]
    for i, (x, y) in enumerate(mesh.vertices):
        out.append(f"{i + 1} {x:.17g} {y:.17g} {1 if mesh.boundary[i] else 0}")
    node_text = "\n".join(out) + "\n"

    out = [f"{mesh.n_elements} 3 0"]
    for k, (a, b, c) in enumerate(mesh.elements):
        out.append(f"{k + 1} {a + 1} {b + 1} {c + 1}")
    ele_text = "\n".join(out) + "\n"
    return node_text, ele_text


# ---------------------------------------------------------------------------
# JSON round-trip (works in 2D and 3D)
# ---------------------------------------------------------------------------

def mesh_to_json(mesh: SimplicialMesh) -> str:
    payload = {
        "dim": mesh.dim,
        "vertices": mesh.vertices.tolist(),
        "elements": mesh.elements.tolist(),
        "boundary": [int(b) for b in mesh.boundary],
    }
    return json.dumps(payload)


def mesh_from_json(text: str) -> SimplicialMesh:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MeshError(f"invalid mesh JSON: {exc}") from exc
    for key in ("dim", "vertices", "elements", "boundary"):
        if key not in payload:
            raise MeshError(f"mesh JSON is missing field {key!r}")
    return SimplicialMesh.from_arrays(
        payload["dim"],
        np.asarray(payload["vertices"], dtype=np.float64),
        np.asarray(payload["elements"], dtype=np.int64),
        np.asarray(payload["boundary"], dtype=bool),
        label="imported-json",
    )


def mesh_spacing(mesh: SimplicialMesh) -> float:
    """Largest element diameter (the mesh size h)."""
    h = 0.0
    for elem in mesh.elements:
        X = mesh.vertices[elem]
        for a, b in itertools.combinations(range(mesh.dim + 1), 2):
            h = max(h, float(np.linalg.norm(X[a] - X[b])))
    return h
