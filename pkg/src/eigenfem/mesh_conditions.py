"""Sufficient mesh conditions for the stiffness matrix to be an M-matrix.

Two conditions are evaluated per problem and mesh:

* nonobtuse: for every element, the largest dihedral angle in the D^{-1}
  metric must stay below arccos(h_K b_sup / (lam_min (d+1))
  + h_K^2 c_sup / (lam_min (d+1)(d+2))); weak means <=, strict means <.
  A strict pass on an interiorly connected mesh certifies an irreducible
  M-matrix.

* Delaunay-type (2D): for every internal edge, half the sum of the two
  facing angles and two arccot correction terms (with the convection and
  reaction entering through Theta) must stay below pi.

Both are evaluated exactly as printed, including the asymmetry of Theta:
all four of its norm factors are taken over the first element K of the
edge pair, not K'.  Element order (by element id) fixes which is K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coefficients import ElementCoefficientStats, ProblemCoefficients, element_stats
from .element_geometry import (
    ElementGeometry,
    check_spd,
    element_geometry,
    metric_altitudes,
    metric_angle_cosines,
    quadrature_points,
)
from .mesh import SimplicialMesh, edge_patches, interior_connectivity

ANGLE_CLAMP = 1e-12
# Slack used when comparing assembled entries against their analytic bounds.
BOUND_SLACK = 1e-10


def _arccot(x: float) -> float:
    """Inverse cotangent with range (0, pi), continuous at x = 0."""
    return 0.5 * math.pi - math.atan(x)


def _cot_from_cos(c: float) -> float:
    """Cotangent of an angle in (0, pi) given its cosine.

    Computed directly from the cosine so that a right angle (c = 0) yields
    an exact zero; the sine is floored to keep degenerate angles finite.
    """
    s = math.sqrt(max(1.0 - c * c, 0.0))
    return c / max(s, ANGLE_CLAMP)


def _angle_from_cos(c: float) -> float:
    a = math.acos(min(max(c, -1.0), 1.0))
    return min(max(a, ANGLE_CLAMP), math.pi - ANGLE_CLAMP)


@dataclass(frozen=True)
class ElementCondition:
    """Nonobtuse-condition record for one element."""

    element: int
    alpha_max: float
    rhs_bound: float | None
    pass_weak: bool
    pass_strict: bool
    reason: str = ""


@dataclass(frozen=True)
class EdgeCondition:
    """Delaunay-type record for one internal edge."""

    edge: tuple[int, int]
    elements: tuple[int, int]
    lhs: float
    theta: float
    lhs_theta_free: float
    pass_weak: bool
    pass_strict: bool


@dataclass(frozen=True)
class NonobtuseReport:
    per_element: list
    alpha_max_metric: float
    passed_weak: bool
    passed_strict: bool


@dataclass(frozen=True)
class DelaunayReport:
    per_edge: list
    alpha_sum_metric: float
    passed_weak: bool
    passed_strict: bool


@dataclass(frozen=True)
class ConditionReport:
    """Combined verdicts of both mesh conditions plus connectivity."""

    per_element: list
    per_edge: list
    alpha_max_metric: float
    alpha_sum_metric: float | None
    nonobtuse_weak: bool
    nonobtuse_strict: bool
    delaunay_weak: bool | None
    delaunay_strict: bool | None
    interiorly_connected: bool

    @property
    def strict_pass(self) -> bool:
        """Certified path: a strict condition plus interior connectivity."""
        cond = self.nonobtuse_strict or bool(self.delaunay_strict)
        return cond and self.interiorly_connected

    @property
    def weak_pass(self) -> bool:
        return self.nonobtuse_weak or bool(self.delaunay_weak)


class _ElementData:
    """Geometry and coefficient stats for every element, computed once."""

    def __init__(self, mesh: SimplicialMesh, coeffs: ProblemCoefficients):
        self.geoms: list[ElementGeometry] = []
        self.stats: list[ElementCoefficientStats] = []
        self.cosines: list[np.ndarray] = []
        for K in range(mesh.n_elements):
            geom = element_geometry(mesh.vertices[mesh.elements[K]])
            st = element_stats(coeffs, mesh, K)
            self.geoms.append(geom)
            self.stats.append(st)
            self.cosines.append(metric_angle_cosines(geom, st.D_K))


def _nonobtuse_from_data(mesh: SimplicialMesh, data: _ElementData) -> NonobtuseReport:
    d = mesh.dim
    per_element = []
    alpha_max_all = 0.0
    weak = True
    strict = True
    for K in range(mesh.n_elements):
        geom = data.geoms[K]
        st = data.stats[K]
        C = data.cosines[K]
        c_min = min(float(C[j, k]) for j in range(d + 1) for k in range(j + 1, d + 1))
        alpha = _angle_from_cos(c_min)
        alpha_max_all = max(alpha_max_all, alpha)

        h = geom.diameter
        arg = (h * st.b_sup / (st.lambda_min_DK * (d + 1))
               + h * h * st.c_sup / (st.lambda_min_DK * (d + 1) * (d + 2)))
        if arg > 1.0:
            rec = ElementCondition(K, alpha, None, False, False,
                                   "convection/reaction dominates at this h")
            weak = strict = False
        else:
            bound = math.acos(arg)
            rec = ElementCondition(K, alpha, bound, alpha <= bound, alpha < bound)
            weak = weak and rec.pass_weak
            strict = strict and rec.pass_strict
        per_element.append(rec)
    return NonobtuseReport(per_element, alpha_max_all, weak, strict)


def check_nonobtuse(mesh: SimplicialMesh, coeffs: ProblemCoefficients) -> NonobtuseReport:
    """Evaluate the metric nonobtuse angle condition for every element."""
    return _nonobtuse_from_data(mesh, _ElementData(mesh, coeffs))


def _facing_cosine(mesh: SimplicialMesh, K: int, edge: tuple[int, int],
                   data: _ElementData) -> float:
    """Cosine of the metric angle of element K at the vertex facing the edge.

    That angle is the dihedral angle between the two faces opposite the
    edge's endpoints (the faces meeting at the third vertex).
    """
    elem = mesh.elements[K].tolist()
    la = elem.index(edge[0])
    lb = elem.index(edge[1])
    return float(data.cosines[K][la, lb])


def _theta(stK: ElementCoefficientStats, hK: float, hKp: float, d: int) -> float:
    """Convection/reaction perturbation of the Delaunay-type condition.

    All four norms are taken over the first element K, as printed in the
    source inequality (the companion entry bound uses K' norms instead).
    """
    t = (hK * stK.b_sup / (d + 1)
         + hK * hK * stK.c_sup / ((d + 1) * (d + 2))
         + hKp * stK.b_sup / (d + 1)
         + hKp * hKp * stK.c_sup / ((d + 1) * (d + 2)))
    return t


def _delaunay_lhs(aK: float, cotK: float, detK: float,
                  aKp: float, cotKp: float, detKp: float, theta: float) -> float:
    t1 = _arccot(math.sqrt(detKp / detK) * cotKp - 2.0 * theta / math.sqrt(detK))
    t2 = _arccot(math.sqrt(detK / detKp) * cotK - 2.0 * theta / math.sqrt(detKp))
    return 0.5 * (aK + aKp + t1 + t2)


def _delaunay_from_data(mesh: SimplicialMesh, data: _ElementData) -> DelaunayReport:
    if mesh.dim != 2:
        raise NotImplementedError("the Delaunay-type condition is 2D only")
    d = 2
    per_edge = []
    alpha_sum_all = 0.0
    weak = True
    strict = True
    for edge, elems in sorted(edge_patches(mesh).items()):
        if len(elems) != 2:
            continue
        K, Kp = elems
        cK = _facing_cosine(mesh, K, edge, data)
        cKp = _facing_cosine(mesh, Kp, edge, data)
        aK, aKp = _angle_from_cos(cK), _angle_from_cos(cKp)
        cotK, cotKp = _cot_from_cos(cK), _cot_from_cos(cKp)
        detK = float(np.linalg.det(data.stats[K].D_K))
        detKp = float(np.linalg.det(data.stats[Kp].D_K))
        theta = _theta(data.stats[K], data.geoms[K].diameter,
                       data.geoms[Kp].diameter, d)
        lhs = _delaunay_lhs(aK, cotK, detK, aKp, cotKp, detKp, theta)
        lhs_free = _delaunay_lhs(aK, cotK, detK, aKp, cotKp, detKp, 0.0)
        alpha_sum_all = max(alpha_sum_all, lhs_free)
        rec = EdgeCondition(edge, (K, Kp), lhs, theta, lhs_free,
                            lhs <= math.pi, lhs < math.pi)
        weak = weak and rec.pass_weak
        strict = strict and rec.pass_strict
        per_edge.append(rec)
    return DelaunayReport(per_edge, alpha_sum_all, weak, strict)


def check_delaunay_type(mesh: SimplicialMesh, coeffs: ProblemCoefficients) -> DelaunayReport:
    """Evaluate the Delaunay-type condition on every internal edge (2D)."""
    return _delaunay_from_data(mesh, _ElementData(mesh, coeffs))


def evaluate_conditions(mesh: SimplicialMesh, coeffs: ProblemCoefficients) -> ConditionReport:
    """Run both mesh conditions and interior connectivity in one pass."""
    data = _ElementData(mesh, coeffs)
    nob = _nonobtuse_from_data(mesh, data)
    if mesh.dim == 2:
        del_rep = _delaunay_from_data(mesh, data)
        per_edge = del_rep.per_edge
        alpha_sum = del_rep.alpha_sum_metric
        dweak: bool | None = del_rep.passed_weak
        dstrict: bool | None = del_rep.passed_strict
    else:
        per_edge = []
        alpha_sum = None
        dweak = None
        dstrict = None
    conn = interior_connectivity(mesh)
    return ConditionReport(
        per_element=nob.per_element,
        per_edge=per_edge,
        alpha_max_metric=nob.alpha_max_metric,
        alpha_sum_metric=alpha_sum,
        nonobtuse_weak=nob.passed_weak,
        nonobtuse_strict=nob.passed_strict,
        delaunay_weak=dweak,
        delaunay_strict=dstrict,
        interiorly_connected=conn.connected,
    )


# ---------------------------------------------------------------------------
# per-entry bounds on the assembled off-diagonals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeBound:
    """Assembled entries and analytic bounds for one interior-interior edge."""

    edge: tuple[int, int]
    a_jk: float
    a_kj: float
    bound_general: float
    bound_2d: float | None
    violated: bool


def entry_bound_report(mesh: SimplicialMesh, coeffs: ProblemCoefficients,
                       system) -> list[EdgeBound]:
    """Check assembled off-diagonal entries against their analytic bounds.

    For each mesh edge whose endpoints are both interior vertices, the
    entry a_jk (and a_kj) is bounded by a patch sum involving the worst
    metric angle per element, and in 2D additionally by the sharper
    cotangent form.  Violations indicate an assembly or geometry bug, not
    a mesh-quality problem.
    """
    data = _ElementData(mesh, coeffs)
    d = mesh.dim
    A = system.A
    out = []
    for edge, elems in sorted(edge_patches(mesh).items()):
        j, k = edge
        ij, ik = mesh.interior_index[j], mesh.interior_index[k]
        if ij < 0 or ik < 0:
            continue
        a_jk = float(A[ij, ik])
        a_kj = float(A[ik, ij])

        bound_gen = 0.0
        for K in elems:
            geom = data.geoms[K]
            st = data.stats[K]
            C = data.cosines[K]
            elem = mesh.elements[K].tolist()
            lj, lk = elem.index(j), elem.index(k)
            alt = metric_altitudes(geom, st.D_K)
            c_min = min(float(C[p, q]) for p in range(d + 1)
                        for q in range(p + 1, d + 1))
            h = geom.diameter
            term = (-c_min
                    + h * st.b_sup / ((d + 1) * st.lambda_min_DK)
                    + h * h * st.c_sup / ((d + 1) * (d + 2) * st.lambda_min_DK))
            bound_gen += geom.volume / (alt[lj] * alt[lk]) * term

        bound_2d = None
        if d == 2 and len(elems) == 2:
            K, Kp = elems
            cK = _facing_cosine(mesh, K, edge, data)
            cKp = _facing_cosine(mesh, Kp, edge, data)
            stK, stKp = data.stats[K], data.stats[Kp]
            hK, hKp = data.geoms[K].diameter, data.geoms[Kp].diameter
            bound_2d = (
                -0.5 * math.sqrt(float(np.linalg.det(stK.D_K))) * _cot_from_cos(cK)
                - 0.5 * math.sqrt(float(np.linalg.det(stKp.D_K))) * _cot_from_cos(cKp)
                + hK * stK.b_sup / (d + 1)
                + hK * hK * stK.c_sup / ((d + 1) * (d + 2))
                + hKp * stKp.b_sup / (d + 1)
                + hKp * hKp * stKp.c_sup / ((d + 1) * (d + 2))
            )

        a_max = max(a_jk, a_kj)
        slack = BOUND_SLACK * max(1.0, abs(bound_gen))
        violated = a_max > bound_gen + slack
        if bound_2d is not None:
            violated = violated or a_max > bound_2d + BOUND_SLACK * max(1.0, abs(bound_2d))
        out.append(EdgeBound(edge, a_jk, a_kj, bound_gen, bound_2d, violated))
    return out


# ---------------------------------------------------------------------------
# M-uniformity measures
# ---------------------------------------------------------------------------

_REF_SIMPLEX_2D = np.array([[1.0, 0.5], [0.0, math.sqrt(3.0) / 2.0]])
_REF_SIMPLEX_3D = np.array([
    [1.0, 0.5, 0.5],
    [0.0, math.sqrt(3.0) / 2.0, math.sqrt(3.0) / 6.0],
    [0.0, 0.0, math.sqrt(6.0) / 3.0],
])


@dataclass(frozen=True)
class MUniformity:
    equidistribution_per_K: np.ndarray
    alignment_per_K: np.ndarray


def m_uniformity(mesh: SimplicialMesh, metric) -> MUniformity:
    """Equidistribution and alignment scores of a mesh under a metric field.

    The reference element is the unit-edge equilateral simplex, so a_K = 1
    exactly when the element is equilateral in the metric; e_K = 1 when
    metric volume is equidistributed.  Both are ideal at 1 and a_K >= 1
    always (arithmetic-geometric mean inequality on the eigenvalues of the
    transformed metric).
    """
    d = mesh.dim
    ref = _REF_SIMPLEX_2D if d == 2 else _REF_SIMPLEX_3D
    ref_inv = np.linalg.inv(ref)
    N = mesh.n_elements

    M_K = []
    vols = np.empty(N)
    for K in range(N):
        X = mesh.vertices[mesh.elements[K]]
        pts, w = quadrature_points(X)
        vols[K] = w.sum()
        MK = np.zeros((d, d))
        for p, wq in zip(pts, w):
            MK += wq * check_spd(metric(p), "metric tensor")
        M_K.append(MK / vols[K])

    sqrt_dets = np.array([math.sqrt(float(np.linalg.det(M))) for M in M_K])
    sigma_h = float(np.sum(vols * sqrt_dets))
    e_K = vols * sqrt_dets * N / sigma_h

    a_K = np.empty(N)
    for K in range(N):
        X = mesh.vertices[mesh.elements[K]]
        V = (X[1:] - X[0]).T
        F = V @ ref_inv
        Jm = F.T @ M_K[K] @ F
        a_K[K] = float(np.trace(Jm)) / (d * float(np.linalg.det(Jm)) ** (1.0 / d))
    return MUniformity(e_K, a_K)
