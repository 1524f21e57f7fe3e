"""Per-element geometry: barycentric gradients, altitudes, metric angles.

The dihedral angle between two faces of a simplex, measured in the geometry
induced by the inverse of a constant SPD matrix D, is computed from the face
normals q_j via

    cos(angle_jk) = -(q_j' D q_k) / sqrt((q_j' D q_j)(q_k' D q_k)),

which equals the Euclidean dihedral angle of the image of the simplex under
the map x -> D^{-1/2} x.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CoefficientError, MeshError

# Angles are clamped to [ANGLE_CLAMP, pi - ANGLE_CLAMP] so that degenerate
# metric data cannot produce 0 or pi exactly.
ANGLE_CLAMP = 1e-12
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class ElementGeometry:
    """Affine geometry of a single positively oriented simplex.

    Attributes
    ----------
    volume : float
        d-dimensional measure.
    diameter : float
        Longest edge.
    jacobian : (d, d) array
        Edge matrix with columns v_i - v_0, i = 1..d.
    grad_basis : (d+1, d) array
        Constant gradients of the barycentric (hat) basis functions.
    inner_normals : (d+1, d) array
        Unit face normals; row j is normal to the face opposite vertex j
        and oriented so that grad_basis[j] == -inner_normals[j] / altitude[j].
    altitudes_euclid : (d+1,) array
        Euclidean distance from vertex j to its opposite face,
        equal to 1 / |grad_basis[j]|.
    """

    volume: float
    diameter: float
    jacobian: np.ndarray
    grad_basis: np.ndarray
    inner_normals: np.ndarray
    altitudes_euclid: np.ndarray


def element_geometry(X: np.ndarray) -> ElementGeometry:
    """Geometry of the simplex with vertex rows X ((d+1, d), positive orientation)."""
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    if X.shape != (d + 1, d):
        raise MeshError(f"expected {d + 1} vertices of dimension {d}")
    V = (X[1:] - X[0]).T
    det = float(np.linalg.det(V))
    if det <= 0.0:
        raise MeshError("element is degenerate or negatively oriented")
    volume = det / math.factorial(d)

    # Barycentric coordinates lam_{1..d} solve V lam = x - v0, so their
    # gradients are the rows of V^{-1}; lam_0 = 1 - sum of the others.
    Vinv = np.linalg.inv(V)
    grads = np.empty((d + 1, d))
    grads[1:] = Vinv
    grads[0] = -Vinv.sum(axis=0)

    norms = np.linalg.norm(grads, axis=1)
    altitudes = 1.0 / norms
    normals = -grads / norms[:, None]

    diameter = 0.0
    for a, b in itertools.combinations(range(d + 1), 2):
        diameter = max(diameter, float(np.linalg.norm(X[a] - X[b])))

    for arr in (V, grads, normals, altitudes):
        arr.setflags(write=False)
    return ElementGeometry(volume, diameter, V, grads, normals, altitudes)


def check_spd(D: np.ndarray, what: str = "diffusion matrix") -> np.ndarray:
    """Validate symmetry (within 1e-12 relative) and positive definiteness."""
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise CoefficientError(f"{what} must be square, got shape {D.shape}")
    scale = max(1.0, float(np.abs(D).max()))
    if float(np.abs(D - D.T).max()) > SYMMETRY_TOL * scale:
        raise CoefficientError(f"{what} is not symmetric")
    try:
        np.linalg.cholesky(0.5 * (D + D.T))
    except np.linalg.LinAlgError:
        raise CoefficientError(f"{what} is not positive definite") from None
    return D


def metric_angle_cosines(geom: ElementGeometry, D: np.ndarray) -> np.ndarray:
    """(d+1, d+1) matrix of metric dihedral-angle cosines between face pairs.

    Entry (j, k), j != k, is the cosine of the angle between faces j and k
    in the D^{-1} geometry; the diagonal is set to 1.
    """
    D = check_spd(D)
    Q = geom.inner_normals
    G = Q @ D @ Q.T
    s = np.sqrt(np.diag(G))
    C = -G / np.outer(s, s)
    np.fill_diagonal(C, 1.0)
    return np.clip(C, -1.0, 1.0)


def _clamp_angle(a: float) -> float:
    return min(max(a, ANGLE_CLAMP), math.pi - ANGLE_CLAMP)


def metric_dihedral_angle(geom: ElementGeometry, D: np.ndarray, j: int, k: int) -> float:
    """Angle between faces j and k of the simplex in the D^{-1} geometry."""
    d = geom.grad_basis.shape[1]
    if not (0 <= j <= d and 0 <= k <= d) or j == k:
        raise ValueError(f"face indices must be distinct and in 0..{d}")
    C = metric_angle_cosines(geom, D)
    return _clamp_angle(math.acos(float(C[j, k])))


def max_metric_angle(geom: ElementGeometry, D: np.ndarray) -> float:
    """Largest dihedral angle of the element in the D^{-1} geometry."""
    C = metric_angle_cosines(geom, D)
    d = geom.grad_basis.shape[1]
    c_min = min(float(C[j, k]) for j in range(d + 1) for k in range(j + 1, d + 1))
    return _clamp_angle(math.acos(c_min))


def metric_altitudes(geom: ElementGeometry, D: np.ndarray) -> np.ndarray:
    """Altitudes of the element in the D^{-1} geometry.

    The altitude from vertex j scales like the Euclidean one divided by the
    length of the unit gradient direction under D, so that the stiffness
    identity below holds exactly.
    """
    D = check_spd(D)
    Q = geom.inner_normals
    stretch = np.sqrt(np.einsum("jd,de,je->j", Q, D, Q))
    return geom.altitudes_euclid / stretch


def stiffness_kernel(geom: ElementGeometry, D: np.ndarray, j: int, k: int) -> float:
    """grad(phi_j)' D grad(phi_k) for the hat functions of the element.

    For j != k this equals -cos(angle_jk) / (alt_j * alt_k) with the metric
    angle and metric altitudes, which is the identity the certification
    bounds are built on.
    """
    g = geom.grad_basis
    return float(g[j] @ np.asarray(D, dtype=np.float64) @ g[k])


# ---------------------------------------------------------------------------
# degree-2 quadrature on simplices
# ---------------------------------------------------------------------------

_TET_A = (5.0 + 3.0 * math.sqrt(5.0)) / 20.0
_TET_B = (5.0 - math.sqrt(5.0)) / 20.0

_BARY_2D = np.array([
    [0.5, 0.5, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
])
_BARY_3D = np.array([
    [_TET_A, _TET_B, _TET_B, _TET_B],
    [_TET_B, _TET_A, _TET_B, _TET_B],
    [_TET_B, _TET_B, _TET_A, _TET_B],
    [_TET_B, _TET_B, _TET_B, _TET_A],
])


def quadrature_barycentric(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric nodes and reference weights of the degree-2 rule.

    2D: the three edge midpoints with weight 1/3 each.  3D: the symmetric
    four-point rule with weight 1/4 each.  Weights sum to 1 and multiply the
    element volume.
    """
    if dim == 2:
        return _BARY_2D, np.full(3, 1.0 / 3.0)
    if dim == 3:
        return _BARY_3D, np.full(4, 0.25)
    raise ValueError(f"no quadrature rule for dimension {dim}")


def quadrature_points(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Physical quadrature nodes and weights for the simplex with vertices X.

    Weights include the element volume, so sum(w * f(nodes)) approximates
    the integral of f over the element and is exact for quadratics.
    """
    X = np.asarray(X, dtype=np.float64)
    dim = X.shape[1]
    bary, w = quadrature_barycentric(dim)
    geom_vol = element_geometry(X).volume
    return bary @ X, w * geom_vol
