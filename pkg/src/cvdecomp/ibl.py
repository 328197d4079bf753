"""Instance-based learners: nearest neighbor (m1), k-NN averaging (m2) and
nearest neighbor over a thinned instance store (m3).

Neighbor selection depends only on the stored inputs, so on a fixed set of
query rows each learner is a linear smoother ``y -> A y``; :func:`smoother_matrix`
exposes ``A`` for the simulation harness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import Dataset

__all__ = [
    "SIMILARITIES",
    "WEIGHTINGS",
    "InstabilityInterval",
    "NeighborSet",
    "IblModel",
    "similarity",
    "similarity_matrix",
    "nearest_neighbors",
    "predict_m1",
    "predict_m2",
    "training_error_ibl",
    "reduce_instances",
    "retained_rows",
    "reduced_model",
    "smoother_matrix",
    "analytic_instability_sq_ibl",
    "cvc_ibl",
]

SIMILARITIES = ("sum", "neg-euclidean")
WEIGHTINGS = ("uniform", "similarity")


def _check_measure(measure):
    if measure not in SIMILARITIES:
        raise ValueError(f"unknown similarity {measure!r}; choose from {SIMILARITIES}")


def similarity(u1, u2, measure: str = "sum") -> float:
    """Similarity of two input vectors.

    ``"sum"`` is ``sum_j (1 - |u1_j - u2_j|)``; it goes negative when
    coordinates differ by more than 1, which is harmless for ranking.
    ``"neg-euclidean"`` is minus the Euclidean distance.
    """
    _check_measure(measure)
    u1 = np.atleast_1d(np.asarray(u1, dtype=np.float64))
    u2 = np.atleast_1d(np.asarray(u2, dtype=np.float64))
    if u1.shape != u2.shape:
        raise ValueError(f"dimension mismatch: {u1.shape} vs {u2.shape}")
    if measure == "sum":
        return float(np.sum(1.0 - np.abs(u1 - u2)))
    return -float(np.linalg.norm(u1 - u2))


def similarity_matrix(V, X, measure: str = "sum") -> np.ndarray:
    """``S[i, j] = similarity(V[i], X[j])``."""
    _check_measure(measure)
    V = np.asarray(V, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    if X.ndim == 1:
        X = X[:, None]
    if V.shape[1] != X.shape[1]:
        raise ValueError(f"dimension mismatch: queries have {V.shape[1]} inputs, instances {X.shape[1]}")
    diff = V[:, None, :] - X[None, :, :]
    if measure == "sum":
        return np.sum(1.0 - np.abs(diff), axis=2)
    return -np.sqrt(np.sum(diff * diff, axis=2))


@dataclass(frozen=True)
class NeighborSet:
    """The ``k`` most similar instances to a query, most similar first.

    ``fallback`` is set when similarity weighting was requested but some
    similarity was non-positive, so uniform weights were used instead.
    """

    indices: np.ndarray
    similarities: np.ndarray
    weights: np.ndarray
    fallback: bool = False

    @property
    def k(self) -> int:
        return self.indices.shape[0]


def _weights(sims: np.ndarray, weighting: str) -> tuple[np.ndarray, bool]:
    k = sims.shape[0]
    uniform = np.full(k, 1.0 / k)
    if weighting == "uniform":
        return uniform, False
    total = sims.sum()
    if np.any(sims <= 0) or total <= 0:
        return uniform, True
    return sims / total, False


def _select(sims_row: np.ndarray, k: int, weighting: str) -> NeighborSet:
    # stable sort on -sim: equal similarities keep ascending row order
    order = np.argsort(-sims_row, kind="stable")[:k]
    s = sims_row[order]
    w, fb = _weights(s, weighting)
    return NeighborSet(order, s, w, fb)


@dataclass(frozen=True)
class IblModel:
    """Stored instances plus neighborhood rules.

    Parameters
    ----------
    X, y : stored inputs (n x d) and outputs (n,)
    k : neighborhood size, ``1 <= k <= n``
    weighting : ``"uniform"`` (each neighbor 1/k) or ``"similarity"``
        (proportional to similarity, uniform fallback when any is <= 0)
    measure : similarity measure name, see :func:`similarity`
    """

    X: np.ndarray
    y: np.ndarray
    k: int = 1
    weighting: str = "uniform"
    measure: str = "sum"

    def __post_init__(self):
        ds = Dataset(self.X, self.y)
        object.__setattr__(self, "X", ds.X)
        object.__setattr__(self, "y", ds.y)
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"unknown weighting {self.weighting!r}; choose from {WEIGHTINGS}")
        _check_measure(self.measure)
        _check_k(self.k, ds.n)

    @classmethod
    def from_dataset(cls, dataset: Dataset, k: int = 1, weighting: str = "uniform", measure: str = "sum"):
        return cls(dataset.X, dataset.y, k, weighting, measure)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def neighbors(self, v, k: Optional[int] = None) -> NeighborSet:
        k = self.k if k is None else k
        _check_k(k, self.n)
        v = np.atleast_1d(np.asarray(v, dtype=np.float64))
        sims = similarity_matrix(v[None, :], self.X, self.measure)[0]
        return _select(sims, k, self.weighting)

    def weight_matrix(self, V) -> tuple[np.ndarray, np.ndarray]:
        """Row i holds the weights query ``V[i]`` puts on each stored instance.

        Also returns a boolean array flagging queries that used the uniform
        fallback.
        """
        V = np.asarray(V, dtype=np.float64)
        if V.ndim == 1:
            V = V[:, None] if self.X.shape[1] == 1 else V[None, :]
        S = similarity_matrix(V, self.X, self.measure)
        A = np.zeros((V.shape[0], self.n))
        flags = np.zeros(V.shape[0], dtype=bool)
        for i, row in enumerate(S):
            nb = _select(row, self.k, self.weighting)
            A[i, nb.indices] = nb.weights
            flags[i] = nb.fallback
        return A, flags

    def predict(self, V) -> np.ndarray:
        """Predictions for each row of ``V`` (a 1-d ``V`` is a column of scalar inputs
        when the instances have one input)."""
        return self.weight_matrix(V)[0] @ self.y


def _check_k(k, n):
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= n):
        raise ValueError(f"k must be an integer in [1, {n}], got {k!r}")


def nearest_neighbors(model: IblModel, v, k: Optional[int] = None) -> NeighborSet:
    return model.neighbors(v, k)


def predict_m1(model: IblModel, v) -> float:
    """Output of the single most similar stored row (ties: lowest index)."""
    if model.n == 0:
        raise ValueError("empty instance store")
    return float(model.y[model.neighbors(v, 1).indices[0]])


def predict_m2(model: IblModel, v) -> float:
    """Weighted average of the outputs of the ``model.k`` most similar rows."""
    nb = model.neighbors(v)
    return float(nb.weights @ model.y[nb.indices])


@dataclass(frozen=True)
class IblTrainingError:
    e_t: np.ndarray
    sse: float
    norm: float


def training_error_ibl(model: IblModel, dataset: Optional[Dataset] = None) -> IblTrainingError:
    """Residuals on the stored rows; each row is in its own neighborhood."""
    if dataset is None:
        dataset = Dataset(model.X, model.y)
    e_t = model.predict(dataset.X) - dataset.y
    sse = float(e_t @ e_t)
    return IblTrainingError(e_t, sse, math.sqrt(sse))


def retained_rows(X, threshold: float, measure: str = "sum") -> np.ndarray:
    """Row indices kept by greedy thinning of ``X``.

    Rows are scanned in order; a row is dropped when its similarity to any
    already-kept row exceeds ``threshold``. Outputs are never consulted.
    """
    if math.isnan(threshold):
        raise ValueError("threshold must not be NaN")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    S = similarity_matrix(X, X, measure)
    kept: list[int] = []
    for i in range(X.shape[0]):
        if not kept or not np.any(S[i, kept] > threshold):
            kept.append(i)
    return np.array(kept, dtype=int)


def reduce_instances(dataset: Dataset, threshold: float, measure: str = "sum") -> Dataset:
    return dataset.subset(retained_rows(dataset.X, threshold, measure))


def reduced_model(dataset: Dataset, threshold: float, measure: str = "sum") -> IblModel:
    """Model m3: nearest neighbor over the thinned instance store."""
    return IblModel.from_dataset(reduce_instances(dataset, threshold, measure), 1, "uniform", measure)


def smoother_matrix(X, k: int = 1, weighting: str = "uniform", measure: str = "sum",
                    threshold: Optional[float] = None) -> np.ndarray:
    """Matrix ``A`` with ``A @ y`` = fitted values on the rows of ``X``.

    With ``threshold`` set, this is m3 (thinning, then k=1) evaluated at all
    original rows; otherwise m2 with the given ``k`` and weighting.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if threshold is None:
        model = IblModel(X, np.zeros(n), k, weighting, measure)
        return model.weight_matrix(X)[0]
    keep = retained_rows(X, threshold, measure)
    model = IblModel(X[keep], np.zeros(keep.shape[0]), 1, "uniform", measure)
    A = np.zeros((n, n))
    A[:, keep] = model.weight_matrix(X)[0]
    return A


@dataclass(frozen=True)
class InstabilityInterval:
    lower: float
    upper: float

    @property
    def is_point(self) -> bool:
        return self.lower == self.upper

    @property
    def value(self) -> float:
        if not self.is_point:
            raise ValueError("instability is only known up to an interval")
        return self.lower


def analytic_instability_sq_ibl(sigma: float, n: int, k: int = 1, weighting: str = "uniform",
                                reduced: bool = False) -> InstabilityInterval:
    """Expected squared instability of m1/m2/m3 over ``n`` stored rows.

    Uniform weights give exactly ``2 sigma^2 n / k``; similarity weights only
    bound it to ``[2 sigma^2 n / k, 2 sigma^2 n]``. The thinned nearest
    neighbor (``reduced=True``) gives ``2 sigma^2 n`` however many rows it
    keeps.
    """
    if sigma < 0 or not math.isfinite(sigma):
        raise ValueError(f"sigma must be finite and non-negative, got {sigma}")
    _check_k(k, n)
    top = 2.0 * sigma * sigma * n
    if reduced:
        return InstabilityInterval(top, top)
    low = top / k
    if weighting == "uniform" or k == 1:
        return InstabilityInterval(low, low)
    if weighting != "similarity":
        raise ValueError(f"unknown weighting {weighting!r}")
    return InstabilityInterval(low, top)


def cvc_ibl(sse: float, sigma: float, n: int, k: int, weighting: str = "uniform") -> float:
    """``sse + 2 sigma^2 n / k``; only defined for uniform weights."""
    if weighting != "uniform" and k != 1:
        raise ValueError("with similarity weighting only bounds on the instability are known; "
                         "use analytic_instability_sq_ibl")
    return sse + analytic_instability_sq_ibl(sigma, n, k).value
