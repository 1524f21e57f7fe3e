"""Sparse CSR matrices, sparse LU, and a dense Hessenberg eigensolver.

Matrices are scipy CSR in canonical form (sorted column indices, no
duplicates); build_csr is the one constructor assembly code should use,
because summing duplicates in a fixed order keeps runs bitwise
reproducible.  The LU path is SuperLU with partial pivoting and a
minimum-degree column ordering on the symmetrized pattern.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.linalg
from scipy.sparse import csc_matrix, csr_matrix
from scipy.sparse.linalg import splu

from .errors import NumericalFailureError, SingularMatrixError

# A pivot this small relative to the largest pivot is treated as singular.
PIVOT_REL_TOL = 1e-12
HESSENBERG_MAX_DIM = 200

SparseMatrix = csr_matrix


def build_csr(n_rows: int, n_cols: int, rows, cols, vals) -> csr_matrix:
    """Assemble COO triplets into canonical CSR, summing duplicates."""
    from scipy.sparse import coo_matrix

    A = coo_matrix(
        (np.asarray(vals, dtype=np.float64),
         (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(n_rows, n_cols),
    ).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def validate_csr(A: csr_matrix) -> None:
    """Assert the canonical-form invariants of a CSR matrix."""
    A.check_format(full_check=True)
    if not A.has_canonical_format:
        raise ValueError("CSR matrix has duplicate or unsorted entries")


@dataclass(frozen=True)
class LUFactors:
    """Sparse LU factorization Pr A Pc = L U.

    perm_r and perm_c are the row and fill-reducing column permutations,
    L is unit lower triangular, U upper triangular, and pivots holds
    |diag(U)|.  The splu handle performs the actual triangular solves.
    """

    n: int
    perm_r: np.ndarray
    perm_c: np.ndarray
    L: csc_matrix
    U: csc_matrix
    pivots: np.ndarray
    _handle: object


def lu_factor(A) -> LUFactors:
    """Factor a square sparse matrix with partial pivoting.

    Uses a minimum-degree ordering of A^T + A for fill reduction.  A pivot
    below 1e-12 of the largest is reported as singular rather than being
    used: the certified path only factors positive definite matrices, so a
    tiny pivot signals an upstream problem.
    """
    A = csc_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    n = A.shape[0]
    if n == 0:
        raise ValueError("matrix must be nonempty")
    try:
        handle = splu(A, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise SingularMatrixError(f"sparse LU failed: {exc}") from exc
    pivots = np.abs(handle.U.diagonal())
    if pivots.min() <= PIVOT_REL_TOL * pivots.max():
        raise SingularMatrixError(
            f"numerically singular: pivot ratio {pivots.min() / pivots.max():.3e}"
        )
    return LUFactors(n, handle.perm_r.copy(), handle.perm_c.copy(),
                     handle.L, handle.U, pivots, handle)


def solve(factors: LUFactors, b: np.ndarray) -> np.ndarray:
    """Solve A x = b with precomputed factors (real or complex b)."""
    b = np.asarray(b)
    if b.shape[0] != factors.n:
        raise ValueError("right-hand side has wrong length")
    if np.iscomplexobj(b):
        return factors._handle.solve(b.real.astype(np.float64)) \
            + 1j * factors._handle.solve(b.imag.astype(np.float64))
    return factors._handle.solve(b.astype(np.float64))


def hessenberg_eigen(H: np.ndarray):
    """Eigenvalues and real Schur form of a dense real matrix.

    Returns (eigenvalues, T, Z) with H = Z T Z^T, T quasi upper triangular.
    Eigenvalues are read off the 1x1 and 2x2 diagonal blocks of T, so
    complex values come out in exact conjugate pairs.  Intended for the
    small projected matrices of the Arnoldi iteration (m <= 200).
    """
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("matrix must be square")
    m = H.shape[0]
    if m > HESSENBERG_MAX_DIM:
        raise ValueError(f"matrix dimension {m} exceeds {HESSENBERG_MAX_DIM}")
    if m == 0:
        return np.zeros(0, dtype=np.complex128), H.copy(), np.eye(0)
    try:
        T, Z = scipy.linalg.schur(H, output="real")
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise NumericalFailureError(f"Schur iteration failed: {exc}") from exc

    eigs = np.empty(m, dtype=np.complex128)
    i = 0
    while i < m:
        if i == m - 1 or T[i + 1, i] == 0.0:
            eigs[i] = T[i, i]
            i += 1
            continue
        a, b = T[i, i], T[i, i + 1]
        c, d = T[i + 1, i], T[i + 1, i + 1]
        mean = 0.5 * (a + d)
        disc = 0.25 * (a - d) ** 2 + b * c
        if disc < 0.0:
            root = np.sqrt(-disc)
            eigs[i] = mean + 1j * root
            eigs[i + 1] = mean - 1j * root
        else:
            root = np.sqrt(disc)
            eigs[i] = mean + root
            eigs[i + 1] = mean - root
        i += 2
    return eigs, T, Z


def save_matrix_market(A, path) -> None:
    scipy.io.mmwrite(str(path), csr_matrix(A))


def load_matrix_market(path) -> csr_matrix:
    A = csr_matrix(scipy.io.mmread(str(path)))
    A.sum_duplicates()
    A.sort_indices()
    return A
