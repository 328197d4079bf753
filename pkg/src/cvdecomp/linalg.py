"""Orthonormalization and least-squares projection.

Everything is dense float64 numpy. The projection onto the column space of
``X`` is formed as ``W @ W.T`` from a modified Gram-Schmidt basis ``W``; the
textbook ``X (X^T X)^-1 X^T`` form is kept only as a cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import norm as _norm, solve_triangular

__all__ = [
    "RankDeficiencyError",
    "ProjectionMatrix",
    "mgs_qr",
    "gram_schmidt",
    "projection_matrix",
    "projection_matrix_inverse",
    "solve_normal_equations",
]

RANK_TOL = 1e-10


class RankDeficiencyError(ValueError):
    """Columns of a design matrix are numerically linearly dependent."""

    def __init__(self, message: str, column: int | None = None):
        super().__init__(message)
        self.column = column


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.size == 0:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix has non-finite entries")
    return X


def mgs_qr(X, tol: float = RANK_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR factorization ``X = W R`` by modified Gram-Schmidt.

    Parameters
    ----------
    X : array_like, shape (n, r)
    tol : float
        Column ``j`` is declared dependent when its norm after removing the
        earlier directions falls below ``tol`` times its original norm.

    Returns
    -------
    W : ndarray, shape (n, r)
        Orthonormal columns spanning the column space of ``X``.
    R : ndarray, shape (r, r)
        Upper triangular with positive diagonal.

    Raises
    ------
    RankDeficiencyError
        If ``r > n`` or a column is dependent on its predecessors.
    """
    X = _as_matrix(X)
    n, r = X.shape
    if r > n:
        raise RankDeficiencyError(f"{r} columns cannot be independent in {n} dimensions", column=n)
    W = X.copy()
    R = np.zeros((r, r))
    for j in range(r):
        original = _norm(X[:, j])
        # the remaining columns were already orthogonalized against 0..j-1
        norm = _norm(W[:, j])
        if original == 0.0 or norm < tol * original:
            raise RankDeficiencyError(
                f"column {j} is linearly dependent on the preceding columns", column=j
            )
        R[j, j] = norm
        W[:, j] /= norm
        if j + 1 < r:
            proj = W[:, j] @ W[:, j + 1:]
            R[j, j + 1:] = proj
            W[:, j + 1:] -= np.outer(W[:, j], proj)
    return W, R


def gram_schmidt(X, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis ``W`` (``W.T @ W = I``) for the columns of ``X``, in order."""
    return mgs_qr(X, tol)[0]


@dataclass(frozen=True)
class ProjectionMatrix:
    """Orthogonal projector ``P`` onto an ``rank``-dimensional column space."""

    matrix: np.ndarray
    rank: int

    def __matmul__(self, other):
        return self.matrix @ other

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def residual_maker(self) -> np.ndarray:
        """``I - P``, mapping outputs to (negated) training residuals."""
        return np.eye(self.n) - self.matrix


def projection_matrix(X, tol: float = RANK_TOL) -> ProjectionMatrix:
    W = gram_schmidt(X, tol)
    P = W @ W.T
    # symmetric by construction; remove rounding asymmetry
    P = 0.5 * (P + P.T)
    P.setflags(write=False)
    return ProjectionMatrix(P, W.shape[1])


def projection_matrix_inverse(X) -> np.ndarray:
    """``X (X^T X)^-1 X^T`` via an explicit inverse. Reference route for tests."""
    X = _as_matrix(X)
    return X @ np.linalg.inv(X.T @ X) @ X.T


def solve_normal_equations(X, y, tol: float = RANK_TOL) -> np.ndarray:
    """Least-squares coefficients ``b`` minimizing ``||X b - y||``.

    Solved as ``R b = W^T y`` from the Gram-Schmidt factorization, which
    avoids squaring the condition number of ``X``.
    """
    W, R = mgs_qr(X, tol)
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != W.shape[0]:
        raise ValueError(f"X has {W.shape[0]} rows but y has {y.shape[0]} entries")
    qty = W.T @ y
    # one refinement sweep recovers the accuracy MGS loses on ill-conditioned X
    b = solve_triangular(R, qty)
    resid = y - np.asarray(X, dtype=np.float64).reshape(W.shape[0], -1) @ b
    b += solve_triangular(R, W.T @ resid)
    return b
