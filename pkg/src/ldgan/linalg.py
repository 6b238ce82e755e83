"""Dense symmetric linear algebra for small matrices.

Everything here operates on plain float64 numpy arrays at desk scale
(dimensions up to a few dozen). The eigensolver is a cyclic Jacobi
iteration rather than a LAPACK call so the whole numeric path of the
package stays self-contained and deterministic; numpy is used only as
the array container.

Symmetric inputs are required to be exactly symmetric (``a[i, j] ==
a[j, i]`` bitwise). Use :func:`symmetrize` at construction points to
restore exact symmetry after matrix products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotPositiveDefinite

# Cyclic Jacobi sweep budget and relative off-diagonal target.
_MAX_SWEEPS = 100
_OFF_DIAG_REL_TOL = 1e-12


@dataclass
class EigenPairs:
    """Eigenvalues (descending) with matching row-stacked eigenvectors.

    ``vectors[i]`` belongs to ``values[i]``. Rows are orthonormal under
    the metric of the problem that produced them: the identity for
    :func:`sym_eig`, the right-hand matrix ``w`` for
    :func:`generalized_eig` (``x_i^T w x_j == delta_ij``).
    """

    values: np.ndarray
    vectors: np.ndarray


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return ``(a + a.T) / 2`` which is exactly symmetric in float64."""
    a = np.asarray(a, dtype=float)
    return (a + a.T) / 2.0


def _check_square_symmetric(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} contains non-finite entries")
    if not np.array_equal(a, a.T):
        raise InvalidInput(f"{name} must be exactly symmetric")
    return a


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # First nonzero component of every eigenvector made positive, so
    # repeated runs and platforms agree on the arbitrary sign.
    out = vectors.copy()
    for i in range(out.shape[0]):
        row = out[i]
        nz = np.nonzero(row)[0]
        if nz.size and row[nz[0]] < 0.0:
            out[i] = -row
    return out


def _off_diagonal_norm(a: np.ndarray) -> float:
    mask = ~np.eye(a.shape[0], dtype=bool)
    return float(np.sqrt(np.sum(a[mask] ** 2)))


def sym_eig(a: np.ndarray) -> EigenPairs:
    """Full eigendecomposition of an exactly symmetric matrix.

    Cyclic Jacobi rotations, sweeping all super-diagonal pivots in row
    order until the off-diagonal Frobenius norm falls below 1e-12 times
    the Frobenius norm of the input (at most 100 sweeps). Eigenvalues
    are returned descending; ties keep the sweep's ordering, and every
    eigenvector has its first nonzero component positive.

    Parameters
    ----------
    a : (n, n) ndarray
        Exactly symmetric, finite.

    Returns
    -------
    EigenPairs
        Rows of ``vectors`` are orthonormal eigenvectors.

    Raises
    ------
    InvalidInput
        Non-square, non-finite, or not exactly symmetric input.
    """
    a = _check_square_symmetric(a, "a")
    n = a.shape[0]
    work = a.copy()
    vecs = np.eye(n)
    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return EigenPairs(values=np.zeros(n), vectors=vecs)
    tol = _OFF_DIAG_REL_TOL * scale
    # Pivots at or below this cannot keep the off-diagonal norm above tol
    # even if every one of them survives the sweep, so they are skipped.
    skip = tol / n

    converged = _off_diagonal_norm(work) <= tol
    for _ in range(_MAX_SWEEPS):
        if converged:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if abs(apq) <= skip:
                    continue
                app = work[p, p]
                aqq = work[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                # work <- J^T work J, row pass then column pass. Matching
                # entries see identical float expressions, so exact symmetry
                # survives; the annihilated pivot is forced to zero.
                row_p = c * work[p] - s * work[q]
                row_q = s * work[p] + c * work[q]
                work[p] = row_p
                work[q] = row_q
                col_p = c * work[:, p] - s * work[:, q]
                col_q = s * work[:, p] + c * work[:, q]
                work[:, p] = col_p
                work[:, q] = col_q
                work[p, q] = 0.0
                work[q, p] = 0.0

                vec_p = c * vecs[:, p] - s * vecs[:, q]
                vecs[:, q] = s * vecs[:, p] + c * vecs[:, q]
                vecs[:, p] = vec_p
        converged = _off_diagonal_norm(work) <= tol
    if not converged:
        raise ArithmeticError("Jacobi sweep budget exhausted before convergence")

    values = np.diag(work).copy()
    order = np.argsort(-values, kind="stable")
    return EigenPairs(values=values[order], vectors=_fix_signs(vecs[:, order].T))


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == a`` and positive diagonal.

    Raises
    ------
    NotPositiveDefinite
        If any pivot is non-positive (``a`` is not positive definite).
    InvalidInput
        Non-square, non-finite, or not exactly symmetric input.
    """
    a = _check_square_symmetric(a, "a")
    n = a.shape[0]
    low = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - np.dot(low[j, :j], low[j, :j])
        if not np.isfinite(pivot) or pivot <= 0.0:
            raise NotPositiveDefinite(f"pivot {j} is {pivot!r}")
        low[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            low[j + 1 :, j] = (a[j + 1 :, j] - low[j + 1 :, :j] @ low[j, :j]) / low[j, j]
    return low


def solve_lower(low: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Forward substitution: solve ``low @ x = rhs`` for lower-triangular ``low``."""
    rhs = np.asarray(rhs, dtype=float)
    x = np.zeros_like(rhs)
    n = low.shape[0]
    for i in range(n):
        x[i] = (rhs[i] - low[i, :i] @ x[:i]) / low[i, i]
    return x


def solve_lower_t(low: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Back substitution: solve ``low.T @ x = rhs`` for lower-triangular ``low``."""
    rhs = np.asarray(rhs, dtype=float)
    x = np.zeros_like(rhs)
    n = low.shape[0]
    for i in range(n - 1, -1, -1):
        x[i] = (rhs[i] - low[i + 1 :, i] @ x[i + 1 :]) / low[i, i]
    return x


def generalized_eig(b: np.ndarray, w: np.ndarray) -> EigenPairs:
    """Solve the symmetric-definite pencil ``b x = lambda w x``.

    Whitening route: ``w = L L^T`` by Cholesky, then the ordinary
    symmetric problem ``L^{-1} b L^{-T} y = lambda y`` by Jacobi, then
    back-transform ``x = L^{-T} y``. The returned rows satisfy
    ``x_i^T w x_j == delta_ij`` (inherited from the orthonormal ``y``)
    and carry the same descending order and sign convention as
    :func:`sym_eig`.

    Raises
    ------
    NotPositiveDefinite
        If ``w`` is not positive definite.
    InvalidInput
        Shape mismatch or invalid symmetric inputs.
    """
    b = _check_square_symmetric(b, "b")
    w = _check_square_symmetric(w, "w")
    if b.shape != w.shape:
        raise InvalidInput(f"shape mismatch: {b.shape} vs {w.shape}")
    low = cholesky(w)
    half = solve_lower(low, b)
    white = symmetrize(solve_lower(low, half.T))
    pairs = sym_eig(white)
    back = solve_lower_t(low, pairs.vectors.T).T
    return EigenPairs(values=pairs.values, vectors=_fix_signs(back))
