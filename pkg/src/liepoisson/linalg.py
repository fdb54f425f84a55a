"""Small dense linear algebra helpers: rank, kernels, span comparison.

Matrices are plain numpy arrays; sizes stay tiny (at most ~20), so SVD gives
robust tolerance semantics everywhere a rank decision feeds geometry (leaf
dimension, isotropy kernels, span equality).
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-9

__all__ = ["DEFAULT_TOL", "numerical_rank", "kernel_basis", "span_equal"]


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {a.shape}")
    return a


def numerical_rank(m, tol: float = DEFAULT_TOL) -> int:
    """Number of singular values above ``tol`` relative to the largest one.

    The zero matrix (and any empty matrix) has rank 0.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = _as_matrix(m)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def kernel_basis(m, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormal basis of the null space of ``m`` at tolerance ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = _as_matrix(m)
    cols = a.shape[1]
    if cols == 0:
        return []
    if a.shape[0] == 0 or not a.any():
        return [np.eye(cols)[:, j] for j in range(cols)]
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    rank = int(np.count_nonzero(s > tol * s[0])) if s.size else 0
    return [vh[j] for j in range(rank, cols)]


def span_equal(a, b, tol: float = DEFAULT_TOL) -> bool:
    """True iff the column spans of ``a`` and ``b`` agree at tolerance ``tol``.

    Implemented as rank(a) = rank(b) = rank([a | b]).
    """
    a = _as_matrix(a)
    b = _as_matrix(b)
    if a.shape[0] != b.shape[0]:
        raise ValueError("column vectors live in different ambient spaces")
    ra = numerical_rank(a, tol)
    rb = numerical_rank(b, tol)
    if ra != rb:
        return False
    return numerical_rank(np.hstack([a, b]), tol) == ra
