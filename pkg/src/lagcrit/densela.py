"""Dense linear algebra for the small systems met here (n up to ~10).

Everything is written out by hand: partial-pivot elimination, modified
Gram-Schmidt null spaces and cyclic Jacobi eigenvalues. Inputs are numpy
arrays; nothing is modified in place.
"""

from __future__ import annotations

import math

import numpy as np

PIVOT_RTOL = 1e-12
RANK_RTOL = 1e-10
SEED_MIN_NORM = 1e-8
SYMMETRY_TOL = 1e-12
JACOBI_RTOL = 1e-12


class LinAlgError(ArithmeticError):
    pass


class SingularMatrixError(LinAlgError):
    pass


class RankDeficiencyError(LinAlgError):
    """Rows of a constraint Jacobian are linearly dependent."""

    def __init__(self, message: str, row: int):
        super().__init__(message)
        self.row = row


def _as_square(A) -> np.ndarray:
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def _eliminate(A: np.ndarray, b: np.ndarray | None):
    """Gaussian elimination with partial pivoting on list copies.

    Returns (U, rhs, sign, singular_at) where singular_at is the first
    column with a negligible pivot, or None. Plain lists beat numpy at the
    sizes used here.
    """
    n = A.shape[0]
    U = A.tolist()
    c = None if b is None else b.tolist()
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    threshold = PIVOT_RTOL * scale
    sign = 1.0
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(U[i][k]))
        if abs(U[p][k]) <= threshold or scale == 0.0:
            return U, c, sign, k
        if p != k:
            U[k], U[p] = U[p], U[k]
            if c is not None:
                c[k], c[p] = c[p], c[k]
            sign = -sign
        pivot_row = U[k]
        pivot = pivot_row[k]
        for i in range(k + 1, n):
            row = U[i]
            f = row[k] / pivot
            if f == 0.0:
                continue
            for j in range(k, n):
                row[j] -= f * pivot_row[j]
            if c is not None:
                c[i] -= f * c[k]
    return U, c, sign, None


def solve_linear(A, b) -> np.ndarray:
    """Solve ``A x = b`` by partial-pivot elimination and back substitution."""
    A = _as_square(A)
    b = np.array(b, dtype=float)
    if b.shape != (A.shape[0],):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({A.shape[0]},)")
    U, c, _, bad = _eliminate(A, b)
    if bad is not None:
        raise SingularMatrixError(f"matrix is singular (negligible pivot in column {bad})")
    n = len(U)
    x = [0.0] * n
    for i in range(n - 1, -1, -1):
        row = U[i]
        acc = c[i]
        for j in range(i + 1, n):
            acc -= row[j] * x[j]
        x[i] = acc / row[i]
    return np.array(x)


def determinant(S) -> float:
    S = _as_square(S)
    U, _, sign, bad = _eliminate(S, None)
    if bad is not None:
        return 0.0
    return float(sign * math.prod(U[i][i] for i in range(len(U))))


def _orthogonalize(v: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    # two MGS sweeps keep orthogonality at roundoff level
    for _ in range(2):
        for q in basis:
            v = v - (q @ v) * q
    return v


def null_space_basis(J) -> list[np.ndarray]:
    """Orthonormal basis of ``{d : J d = 0}`` for an m-by-n ``J`` with m < n.

    The rows of J are orthonormalized first; the basis is then completed by
    projecting coordinate vectors e_1, e_2, ... in order, skipping any whose
    remainder is shorter than 1e-8. Raises :class:`RankDeficiencyError` when a
    row lies in the span of the previous ones (relative tolerance 1e-10).
    """
    J = np.atleast_2d(np.array(J, dtype=float))
    m, n = J.shape
    if m < 1 or n <= m:
        raise ValueError(f"need 1 <= m < n, got a {m}x{n} matrix")
    rows: list[np.ndarray] = []
    for i, row in enumerate(J):
        norm = np.linalg.norm(row)
        r = _orthogonalize(row, rows)
        if norm == 0.0 or np.linalg.norm(r) <= RANK_RTOL * norm:
            raise RankDeficiencyError(f"constraint gradient {i} is dependent on the others", i)
        rows.append(r / np.linalg.norm(r))
    tangent: list[np.ndarray] = []
    for k in range(n):
        if len(tangent) == n - m:
            break
        seed = np.zeros(n)
        seed[k] = 1.0
        r = _orthogonalize(seed, rows + tangent)
        norm = np.linalg.norm(r)
        if norm < SEED_MIN_NORM:
            continue
        tangent.append(r / norm)
    return tangent


def sym_eigenvalues(S) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    A = _as_square(S)
    n = A.shape[0]
    if n == 0:
        return np.zeros(0)
    scale = np.linalg.norm(A)
    if np.max(np.abs(A - A.T)) > SYMMETRY_TOL * max(1.0, scale):
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    target = JACOBI_RTOL * scale

    def off(M: np.ndarray) -> float:
        return float(np.linalg.norm(M - np.diag(np.diag(M))))

    for _sweep in range(100):
        if off(A) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                R = np.eye(n)
                R[p, p] = R[q, q] = c
                R[p, q] = s
                R[q, p] = -s
                A = R.T @ A @ R
                A[p, q] = A[q, p] = 0.0
    else:
        raise LinAlgError("Jacobi iteration did not converge")
    return np.sort(np.diag(A))
