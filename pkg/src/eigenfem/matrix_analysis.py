"""Structural certificates for assembled stiffness matrices.

A matrix that is a Z-matrix (nonpositive off-diagonals) with positive
definite symmetric part is a nonsingular M-matrix; if it is additionally
irreducible, its inverse is entrywise strictly positive and the smallest
generalized eigenvalue against a positive-definite mass matrix is real,
simple, and has a positive eigenvector.  This module checks those
hypotheses directly on the sparse matrix and, for small systems, verifies
the conclusion against a dense inverse ("Perron oracle").
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix, issparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from .errors import SingularMatrixError

# Entries within this relative tolerance of zero are treated as zero both
# for sign checks and for the sparsity pattern used by irreducibility.
ZERO_REL_TOL = 1e-14
# Above this dimension the positive-definiteness check switches from a
# dense Cholesky factorization to a sparse symmetric LU.
DENSE_PD_LIMIT = 600


def _as_csr(A) -> csr_matrix:
    assert issparse(A), "expected a scipy sparse matrix"
    # Copy so canonicalization (and any downstream in-place structure
    # edits) can never mutate the caller's matrix.
    M = csr_matrix(A, copy=True)
    M.sum_duplicates()
    M.sort_indices()
    return M


@dataclass(frozen=True)
class ZMatrixReport:
    passed: bool
    scale: float
    violation: tuple[int, int, float] | None


def z_matrix_check(A) -> ZMatrixReport:
    """Check for the Z-matrix sign pattern.

    Off-diagonal entries must be <= 0 and diagonal entries >= 0, up to a
    relative tolerance of 1e-14 times the largest magnitude entry (exact
    zeros from cancellation are accepted).  Returns the first violating
    entry in row-major order, if any.
    """
    M = _as_csr(A)
    n = M.shape[0]
    assert M.shape[0] == M.shape[1], "matrix must be square"
    scale = float(np.abs(M.data).max()) if M.nnz else 0.0
    tol = ZERO_REL_TOL * scale
    indptr, indices, data = M.indptr, M.indices, M.data
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            v = float(data[p])
            if i == j:
                if v < -tol:
                    return ZMatrixReport(False, scale, (i, j, v))
            elif v > tol:
                return ZMatrixReport(False, scale, (i, j, v))
    return ZMatrixReport(True, scale, None)


@dataclass(frozen=True)
class IrreducibilityReport:
    irreducible: bool
    n_components: int


def irreducibility(A) -> IrreducibilityReport:
    """Irreducibility of the sparsity pattern via strongly connected components.

    The directed graph has an arc i -> j whenever |a_ij| exceeds the zero
    tolerance; the matrix is irreducible iff the graph is one strongly
    connected component.  A 1x1 matrix is irreducible by convention.
    """
    M = _as_csr(A)
    n = M.shape[0]
    if n == 1:
        return IrreducibilityReport(True, 1)
    scale = float(np.abs(M.data).max()) if M.nnz else 0.0
    tol = ZERO_REL_TOL * scale
    mask = np.abs(M.data) > tol
    # Copy the index arrays: eliminate_zeros() edits them in place and the
    # constructor would otherwise alias M's structure.
    pattern = csr_matrix((mask.astype(np.int8), M.indices.copy(), M.indptr.copy()),
                         shape=M.shape)
    pattern.eliminate_zeros()
    n_comp, _ = connected_components(pattern, directed=True, connection="strong")
    return IrreducibilityReport(n_comp == 1, int(n_comp))


def _sym_part_positive_definite(A: csr_matrix) -> tuple[bool, str]:
    """Positive definiteness of (A + A^T)/2.

    Small systems use a dense Cholesky factorization; larger ones a sparse
    LU with symmetric permutation and no row pivoting, where all-positive
    U diagonal is equivalent to positive definiteness (Sylvester's law on
    the LDL^T pivots).
    """
    n = A.shape[0]
    S = csr_matrix((A + A.T) * 0.5)
    if n <= DENSE_PD_LIMIT:
        try:
            np.linalg.cholesky(S.toarray())
            return True, "dense Cholesky"
        except np.linalg.LinAlgError:
            return False, "dense Cholesky"
    try:
        fac = splu(S.tocsc(), permc_spec="MMD_AT_PLUS_A",
                   diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    except RuntimeError:
        return False, "sparse symmetric LU (factorization broke down)"
    if not np.array_equal(fac.perm_r, fac.perm_c):
        # Row pivoting kicked in; the pivot-sign argument no longer applies,
        # so fall back to the dense check.
        try:
            np.linalg.cholesky(S.toarray())
            return True, "dense Cholesky (sparse fallback)"
        except np.linalg.LinAlgError:
            return False, "dense Cholesky (sparse fallback)"
    pivots = fac.U.diagonal()
    return bool(np.all(pivots > 0.0)), "sparse symmetric LU"


@dataclass(frozen=True)
class MatrixCertificate:
    """Verdict of the direct M-matrix check on an assembled matrix."""

    is_z_matrix: bool
    z_violation: tuple[int, int, float] | None
    is_irreducible: bool
    n_strong_components: int
    spd_symmetric_part: bool
    is_m_matrix: bool
    method: str

    @property
    def certified_irreducible_m_matrix(self) -> bool:
        return self.is_m_matrix and self.is_irreducible


def m_matrix_certificate(A) -> MatrixCertificate:
    """Certify that A is a (possibly irreducible) nonsingular M-matrix.

    The sufficient test is: Z-matrix sign pattern plus positive definite
    symmetric part.  Irreducibility is reported separately so that a
    reducible M-matrix is still recognized as such.
    """
    M = _as_csr(A)
    z = z_matrix_check(M)
    irr = irreducibility(M)
    spd, how = _sym_part_positive_definite(M)
    return MatrixCertificate(
        is_z_matrix=z.passed,
        z_violation=z.violation,
        is_irreducible=irr.irreducible,
        n_strong_components=irr.n_components,
        spd_symmetric_part=spd,
        is_m_matrix=z.passed and spd,
        method=f"Z-matrix sign pattern + positive definite symmetric part ({how})",
    )


@dataclass(frozen=True)
class PerronOracle:
    """Dense ground truth for the Perron pair of A^{-1} B."""

    inverse_positive: bool
    perron_value: float
    perron_vector_positive: bool
    converged: bool
    iterations: int


def perron_oracle(A, B, n_limit: int = 400, max_iter: int = 20000,
                  tol: float = 1e-12) -> PerronOracle:
    """Compute the Perron pair of A^{-1} B by dense inversion + power iteration.

    Intended as an independent check for small systems only: n above
    n_limit is rejected.  inverse_positive reports whether every entry of
    the dense inverse exceeds 1e-14 times the largest entry magnitude.
    The dominant eigenvalue of A^{-1} B is the reciprocal of the smallest
    generalized eigenvalue of (A, B).
    """
    M = _as_csr(A)
    n = M.shape[0]
    if n > n_limit:
        raise ValueError(f"perron_oracle limited to n <= {n_limit}, got {n}")
    try:
        Ainv = np.linalg.inv(M.toarray())
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("matrix is numerically singular") from exc
    scale = float(np.abs(Ainv).max())
    inverse_positive = bool(Ainv.min() > ZERO_REL_TOL * scale)

    Bd = _as_csr(B).toarray()
    T = Ainv @ Bd

    x = np.ones(n) / np.sqrt(n)
    mu = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        y = T @ x
        mu = float(x @ y)
        norm_y = float(np.linalg.norm(y))
        if norm_y == 0.0:
            break
        resid = float(np.linalg.norm(y - mu * x))
        x = y / norm_y
        if resid <= tol * max(abs(mu), 1e-300):
            converged = True
            break

    amax = float(np.abs(x).max())
    positive = bool(x.min() > ZERO_REL_TOL * amax) or bool((-x).min() > ZERO_REL_TOL * amax)
    return PerronOracle(inverse_positive, mu, positive, converged, it)
