"""Dense complex matrix substrate.

Matrices are ``numpy`` arrays of shape ``(n, n)``; a matrix tuple
``X = (X_1, ..., X_m)`` is a single array of shape ``(m, n, n)``.
"""

from __future__ import annotations

import numpy as np


class DimensionError(ValueError):
    pass


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def as_matrix_tuple(X) -> np.ndarray:
    """Validate and return ``X`` as a complex array of shape (m, n, n)."""
    X = np.asarray(X, dtype=complex)
    if X.ndim != 3 or X.shape[1] != X.shape[2] or X.shape[0] < 1:
        raise DimensionError(f"expected a matrix tuple of shape (m, n, n), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix tuple has non-finite entries")
    return X


def commutator(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape or A.ndim != 2:
        raise DimensionError(f"commutator of shapes {A.shape} and {B.shape}")
    return A @ B - B @ A


def frobenius(A) -> float:
    return float(np.linalg.norm(np.asarray(A), ord=None))


def lstsq_min_norm(M, b, tol: float = 1e-12) -> tuple[np.ndarray, float]:
    """Minimum-norm least-squares solution of ``M v ~ b``.

    Singular directions with singular value below ``tol`` times the largest
    column norm of ``M`` are treated as null. Returns ``(v, ||M v - b||)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = np.asarray(M, dtype=complex)
    b = np.asarray(b, dtype=complex).reshape(-1)
    if M.ndim != 2 or M.shape[0] != b.shape[0]:
        raise DimensionError(f"lstsq of shapes {M.shape} and {b.shape}")
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(b))):
        raise ValueError("lstsq inputs must be finite")
    r, c = M.shape
    if r == 0 or c == 0:
        return np.zeros(c, dtype=complex), float(np.linalg.norm(b))
    colmax = float(np.max(np.linalg.norm(M, axis=0)))
    if colmax == 0.0:
        return np.zeros(c, dtype=complex), float(np.linalg.norm(b))
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    keep = s > tol * colmax
    coef = (U[:, keep].conj().T @ b) / s[keep]
    v = Vh[keep].conj().T @ coef
    residual = float(np.linalg.norm(M @ v - b))
    return v, residual


def numeric_rank(M, rel_tol: float = 1e-9, abs_tol: float = 1e-12) -> int:
    """Rank with a relative singular-value cutoff plus an absolute floor."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] <= abs_tol:
        return 0
    return int(np.sum(s > max(rel_tol * s[0], abs_tol)))


PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
