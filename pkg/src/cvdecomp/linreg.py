"""Least-squares linear models, their training error, and CVC / AIC.

The instability of an r-term least-squares fit under output noise of scale
sigma has expected squared length ``2 sigma^2 r`` regardless of the noise
family, so ``sse + 2 sigma^2 r`` is an unbiased estimate of the expected
squared cross-validation error. With normal noise AIC is an affine function
of that quantity and ranks models identically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import RankDeficiencyError, projection_matrix, solve_normal_equations

__all__ = [
    "PolynomialBasisSpec",
    "LinearModel",
    "TrainingError",
    "polynomial_design_matrix",
    "fit",
    "fit_polynomial",
    "fitted_values",
    "training_error",
    "analytic_instability_sq",
    "upper_bound_norm",
    "cvc",
    "aic_linear",
]


@dataclass(frozen=True)
class PolynomialBasisSpec:
    """Powers ``0 .. n_terms-1`` of input column ``input_index``."""

    n_terms: int
    input_index: int = 0

    def __post_init__(self):
        if int(self.n_terms) < 1:
            raise ValueError(f"a polynomial basis needs at least one term, got {self.n_terms}")

    def describe(self) -> str:
        x = f"x{self.input_index + 1}"
        return " + ".join(["1"] + [f"{x}^{p}" if p > 1 else x for p in range(1, self.n_terms)])


def polynomial_design_matrix(x, spec: PolynomialBasisSpec | int) -> np.ndarray:
    """Columns ``x**0, x**1, ..., x**(r-1)``.

    ``x`` may be a vector or an (n, d) input matrix; in the latter case column
    ``spec.input_index`` is expanded.
    """
    if not isinstance(spec, PolynomialBasisSpec):
        spec = PolynomialBasisSpec(int(spec))
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, spec.input_index]
    return np.vander(x.ravel(), spec.n_terms, increasing=True)


@dataclass(frozen=True)
class LinearModel:
    """Fitted coefficients over a column basis.

    With ``basis=None`` the model consumes design matrices directly;
    otherwise :meth:`predict` expands raw inputs through ``basis`` first.
    """

    coefficients: np.ndarray
    basis: Optional[PolynomialBasisSpec] = None

    @property
    def r(self) -> int:
        return self.coefficients.shape[0]

    def design(self, inputs) -> np.ndarray:
        if self.basis is not None:
            return polynomial_design_matrix(inputs, self.basis)
        D = np.asarray(inputs, dtype=np.float64)
        if D.ndim == 1:
            D = D[:, None]
        return D

    def predict(self, inputs) -> np.ndarray:
        D = self.design(inputs)
        if D.shape[1] != self.r:
            raise ValueError(f"design has {D.shape[1]} columns, model has {self.r} coefficients")
        return D @ self.coefficients


def fit(X, y, basis: Optional[PolynomialBasisSpec] = None) -> LinearModel:
    """Least-squares fit; ``X`` is a design matrix unless ``basis`` is given."""
    y = np.asarray(y, dtype=np.float64).ravel()
    if basis is not None:
        D = polynomial_design_matrix(X, basis)
    else:
        D = np.asarray(X, dtype=np.float64)
        if D.ndim == 1:
            D = D[:, None]
    n, r = D.shape
    if r > n:
        raise RankDeficiencyError(f"linear regression requires r <= n (got r={r}, n={n})", column=n)
    b = solve_normal_equations(D, y)
    b.setflags(write=False)
    return LinearModel(b, basis)


def fit_polynomial(x, y, n_terms: int, input_index: int = 0) -> LinearModel:
    return fit(x, y, PolynomialBasisSpec(n_terms, input_index))


@dataclass(frozen=True)
class TrainingError:
    e_t: np.ndarray
    sse: float
    norm: float


def training_error(model: LinearModel, X, y) -> TrainingError:
    """Residual ``m(X) - y`` of ``model`` on the data it was fit to."""
    y = np.asarray(y, dtype=np.float64).ravel()
    pred = model.predict(X)
    if pred.shape[0] != y.shape[0]:
        raise ValueError(f"model produced {pred.shape[0]} predictions for {y.shape[0]} outputs")
    e_t = pred - y
    sse = float(e_t @ e_t)
    return TrainingError(e_t, sse, math.sqrt(sse))


def fitted_values(X, y) -> np.ndarray:
    """``P y`` for design matrix ``X``."""
    return projection_matrix(X) @ np.asarray(y, dtype=np.float64)


def _check_sigma(sigma):
    if sigma < 0 or not math.isfinite(sigma):
        raise ValueError(f"sigma must be finite and non-negative, got {sigma}")


def analytic_instability_sq(sigma: float, r: int) -> float:
    """Expected squared instability ``2 sigma^2 r`` of an r-term least-squares fit."""
    _check_sigma(sigma)
    if r < 1:
        raise ValueError("r must be at least 1")
    return 2.0 * sigma * sigma * r


def upper_bound_norm(sigma: float, r: int) -> float:
    """Bound ``sigma sqrt(2 r)`` on the expected (unsquared) instability."""
    _check_sigma(sigma)
    if r < 1:
        raise ValueError("r must be at least 1")
    return sigma * math.sqrt(2.0 * r)


def cvc(sse: float, sigma: float, r: int) -> float:
    """Cross-validation criterion ``sse + 2 sigma^2 r``."""
    _check_sigma(sigma)
    if sse < 0 or r < 0:
        raise ValueError("sse and r must be non-negative")
    return sse + 2.0 * sigma * sigma * r


def aic_linear(sse: float, sigma: float, n: int, r: int) -> float:
    """AIC of a least-squares fit under normal noise of known scale.

    ``n log(2 pi sigma^2) + sse / sigma^2 + 2 r``; equal to
    ``n log(2 pi sigma^2) + cvc / sigma^2``.
    """
    if not sigma > 0:
        raise ValueError("AIC is undefined for sigma <= 0")
    s2 = sigma * sigma
    return n * math.log(2.0 * math.pi * s2) + sse / s2 + 2.0 * r
