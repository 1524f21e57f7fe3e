"""Assembly of the interior-vertex stiffness and mass matrices.

The discrete problem is A u = lambda B u over interior vertices only
(homogeneous Dirichlet rows and columns are never created).  Per element,
the stiffness contribution is

    |K| grad(phi_j)' D_K grad(phi_k)
      + int_K phi_j (b . grad(phi_k))  +  int_K c phi_j phi_k

with D_K the quadrature average of D over K and both integrals evaluated
by the degree-2 rule.  Mass entries use the exact closed forms
|K|/((d+1)(d+2)) off the diagonal and twice that on it; lumping sums
|K|/(d+1) over the patch of each vertex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from .coefficients import ProblemCoefficients, element_stats
from .element_geometry import element_geometry, quadrature_barycentric
from .errors import CoefficientError
from .mesh import SimplicialMesh
from .sparse_linalg import build_csr, save_matrix_market


@dataclass(frozen=True)
class AssembledSystem:
    """Immutable interior-vertex system A u = lambda B u.

    A_diffusion is the diffusion-only part of A and effective_reaction the
    bilinear form of c - (1/2) div b; together they make the Rayleigh
    functional a pair of quadratic forms instead of an element loop.
    """

    n: int
    A: csr_matrix
    B: csr_matrix
    B_lumped: np.ndarray
    A_diffusion: csr_matrix
    effective_reaction: csr_matrix
    mesh_ref: str
    coeffs_ref: str


def assemble(mesh: SimplicialMesh, coeffs: ProblemCoefficients) -> AssembledSystem:
    """Assemble stiffness and mass matrices over interior vertices."""
    if coeffs.dim != mesh.dim:
        raise CoefficientError(
            f"coefficient dimension {coeffs.dim} != mesh dimension {mesh.dim}"
        )
    d = mesh.dim
    n = mesh.n_interior
    bary, wref = quadrature_barycentric(d)

    rows_A, cols_A, vals_A = [], [], []
    vals_D, vals_R = [], []
    rows_B, cols_B, vals_B = [], [], []
    b_lumped = np.zeros(n)

    mass_off = 1.0 / ((d + 1) * (d + 2))
    for K in range(mesh.n_elements):
        elem = mesh.elements[K]
        X = mesh.vertices[elem]
        geom = element_geometry(X)
        stats = element_stats(coeffs, mesh, K)
        vol = geom.volume
        w = wref * vol
        pts = bary @ X

        G = geom.grad_basis
        local_D = vol * (G @ stats.D_K @ G.T)

        bq = np.array([coeffs.convection(p) for p in pts])
        cq = np.array([float(coeffs.reaction(p)) for p in pts])
        rq = cq - 0.5 * np.array(
            [float(coeffs.convection_divergence(p)) for p in pts]
        )
        # local_C[j, k] = sum_q w_q phi_j(x_q) (b(x_q) . grad phi_k)
        local_C = (bary * w[:, None]).T @ (bq @ G.T)
        local_R = bary.T @ (bary * (w * cq)[:, None])
        local_eff = bary.T @ (bary * (w * rq)[:, None])
        local_A = local_D + local_C + local_R

        local_B = np.full((d + 1, d + 1), vol * mass_off)
        np.fill_diagonal(local_B, 2.0 * vol * mass_off)

        idx = mesh.interior_index[elem]
        for a in range(d + 1):
            ia = idx[a]
            if ia < 0:
                continue
            b_lumped[ia] += vol / (d + 1)
            for b in range(d + 1):
                ib = idx[b]
                if ib < 0:
                    continue
                rows_A.append(ia)
                cols_A.append(ib)
                vals_A.append(local_A[a, b])
                vals_D.append(local_D[a, b])
                vals_R.append(local_eff[a, b])
                rows_B.append(ia)
                cols_B.append(ib)
                vals_B.append(local_B[a, b])

    A = build_csr(n, n, rows_A, cols_A, vals_A)
    A_diff = build_csr(n, n, rows_A, cols_A, vals_D)
    eff = build_csr(n, n, rows_A, cols_A, vals_R)
    B = build_csr(n, n, rows_B, cols_B, vals_B)
    b_lumped.setflags(write=False)
    return AssembledSystem(
        n=n,
        A=A,
        B=B,
        B_lumped=b_lumped,
        A_diffusion=A_diff,
        effective_reaction=eff,
        mesh_ref=mesh.label,
        coeffs_ref=coeffs.label,
    )


def rayleigh(system: AssembledSystem, coeffs: ProblemCoefficients,
             mesh: SimplicialMesh, v: np.ndarray) -> float:
    """Rayleigh functional F(v) of a real interior vector.

    F(v) = (v' A_D v + int (c - 0.5 div b) (v^h)^2) / (v' B v), where A_D
    is the diffusion-only stiffness.  For symmetric problems this is the
    functional whose minimum over nonzero v is the principal eigenvalue.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (system.n,):
        raise ValueError(f"vector must have length {system.n}")
    if not np.any(v):
        raise ValueError("Rayleigh functional is undefined for the zero vector")
    num = float(v @ (system.A_diffusion @ v)) + float(v @ (system.effective_reaction @ v))
    den = float(v @ (system.B @ v))
    return num / den


def export_system(system: AssembledSystem, a_path, b_path) -> None:
    """Write A and B in MatrixMarket coordinate format."""
    save_matrix_market(system.A, a_path)
    save_matrix_market(system.B, b_path)
