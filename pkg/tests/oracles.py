"""Independent reference implementations used only by the tests.

Everything here deliberately avoids the code paths under test:

* dense_generalized_eigs uses LAPACK's QZ via scipy.linalg.eig on dense
  arrays, never the package's Arnoldi or sparse LU;
* integrate_on_triangle / integrate_on_tet use brute-force subdivision
  sampling, never the package's quadrature rule;
* hessenberg_eigs_deflation finds Hessenberg eigenvalues by shifted
  inverse iteration with Hotelling deflation, never a Schur form.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg


def dense_generalized_eigs(A, B, k: int | None = None) -> np.ndarray:
    """All eigenvalues of A v = lambda B v by dense QZ, sorted by modulus."""
    Ad = A.toarray() if hasattr(A, "toarray") else np.asarray(A)
    Bd = B.toarray() if hasattr(B, "toarray") else np.asarray(B)
    w = scipy.linalg.eig(Ad, Bd, right=False)
    order = np.argsort(np.abs(w), kind="stable")
    w = w[order]
    return w if k is None else w[:k]


def dense_generalized_eigs_cond(A, B, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Smallest-modulus eigenvalues together with their condition numbers.

    kappa_i = ||x_i|| ||y_i|| / |y_i^H B x_i| bounds the first-order
    eigenvalue perturbation: |dlambda| <= kappa * (||dA|| + |lambda| ||dB||).
    Backward-stable computations of badly conditioned (strongly nonnormal)
    pencils can only agree up to this bound times machine epsilon.
    """
    Ad = A.toarray() if hasattr(A, "toarray") else np.asarray(A)
    Bd = B.toarray() if hasattr(B, "toarray") else np.asarray(B)
    w, vl, vr = scipy.linalg.eig(Ad, Bd, left=True, right=True)
    order = np.argsort(np.abs(w), kind="stable")[:k]
    kappas = np.empty(len(order))
    for j, i in enumerate(order):
        x, y = vr[:, i], vl[:, i]
        kappas[j] = (np.linalg.norm(x) * np.linalg.norm(y)
                     / abs(np.vdot(y, Bd @ x)))
    return w[order], kappas


def integrate_on_triangle(f, X, level: int = 64) -> float:
    """Integrate f over a triangle by uniform barycentric subdivision.

    Splits the triangle into level^2 congruent subtriangles and applies
    the centroid rule on each; exact enough (O(level^-2)) for oracle use.
    """
    X = np.asarray(X, dtype=float)
    assert X.shape == (3, 2)
    area = 0.5 * abs(np.linalg.det(np.column_stack([X[1] - X[0], X[2] - X[0]])))
    total = 0.0
    n = level
    sub_area = area / (n * n)
    for i in range(n):
        for j in range(n - i):
            # upward subtriangle centroid in barycentric coordinates
            l1 = (i + 1.0 / 3.0) / n
            l2 = (j + 1.0 / 3.0) / n
            p = X[0] + l1 * (X[1] - X[0]) + l2 * (X[2] - X[0])
            total += f(p) * sub_area
            if j < n - i - 1:
                l1 = (i + 2.0 / 3.0) / n
                l2 = (j + 2.0 / 3.0) / n
                p = X[0] + l1 * (X[1] - X[0]) + l2 * (X[2] - X[0])
                total += f(p) * sub_area
    return total


def hat_function(X, vertex: int):
    """The P1 basis function on a triangle that is 1 at the given vertex."""
    X = np.asarray(X, dtype=float)
    T = np.column_stack([X[1] - X[0], X[2] - X[0]])
    Tinv = np.linalg.inv(T)

    def phi(p):
        lam = Tinv @ (np.asarray(p) - X[0])
        bary = np.array([1.0 - lam[0] - lam[1], lam[0], lam[1]])
        return bary[vertex]

    return phi


def hessenberg_eigs_qr(H, tol: float = 1e-13,
                       max_sweeps: int = 20000) -> np.ndarray:
    """Eigenvalues of a small dense matrix by a hand-written shifted QR.

    Runs the classic single-shift QR iteration in complex arithmetic with
    a Wilkinson shift, deflating whenever the bottom subdiagonal entry of
    the active block is negligible.  Independent of any Schur routine;
    suitable only as a slow cross-check on small matrices.
    """
    A = np.asarray(H, dtype=complex).copy()
    n = A.shape[0]
    eigs = []
    hi = n
    sweeps = 0
    while hi > 0 and sweeps < max_sweeps:
        if hi == 1:
            eigs.append(A[0, 0])
            hi = 0
            break
        m = hi
        if abs(A[m - 1, m - 2]) <= tol * (abs(A[m - 1, m - 1]) + abs(A[m - 2, m - 2])):
            eigs.append(A[m - 1, m - 1])
            hi -= 1
            continue
        # Wilkinson shift: eigenvalue of the trailing 2x2 closest to the corner.
        a, b = A[m - 2, m - 2], A[m - 2, m - 1]
        c, d = A[m - 1, m - 2], A[m - 1, m - 1]
        tr = a + d
        det = a * d - b * c
        disc = np.sqrt(tr * tr / 4.0 - det + 0j)
        mu1, mu2 = tr / 2.0 + disc, tr / 2.0 - disc
        mu = mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2
        Q, R = np.linalg.qr(A[:hi, :hi] - mu * np.eye(hi))
        A[:hi, :hi] = R @ Q + mu * np.eye(hi)
        sweeps += 1
    for i in range(hi):
        eigs.append(A[i, i])
    return np.array(eigs)
