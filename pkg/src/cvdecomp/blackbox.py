"""Simulated black boxes: a deterministic function plus scaled standardized noise.

Every random draw in the package goes through :func:`stream`, which maps a
master seed and an optional replicate/trial index to an independent numpy
generator. Replicate ``k`` therefore depends only on ``(seed, k)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .data import Dataset

__all__ = [
    "DISTRIBUTIONS",
    "NoiseSpec",
    "BlackBox",
    "stream",
    "generate_outputs",
    "generate_dataset",
    "replicate_outputs",
    "average_outputs",
    "parse_blackbox",
    "uniform_inputs",
]

DISTRIBUTIONS = ("normal", "uniform", "rademacher")
_SQRT3 = math.sqrt(3.0)


def stream(seed, *index: int) -> np.random.Generator:
    """Independent generator for ``(seed, *index)``.

    ``stream(s)`` and ``stream(s, k)`` never share state, and ``stream(s, k)``
    is the same no matter how many other indices were used before it.
    """
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + index)
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=index)
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise ``sigma * z`` with ``z`` from a mean-0, variance-1 family.

    ``distribution`` is one of ``"normal"``, ``"uniform"`` (on
    [-sqrt(3), sqrt(3)]) or ``"rademacher"`` (+1/-1 with equal probability).
    """

    sigma: float = 1.0
    distribution: str = "normal"

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}; choose from {DISTRIBUTIONS}")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be finite and non-negative, got {self.sigma}")
        object.__setattr__(self, "sigma", float(self.sigma))

    def standardized(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw standardized samples (before scaling by sigma)."""
        if self.distribution == "normal":
            return rng.standard_normal(size)
        if self.distribution == "uniform":
            return rng.uniform(-_SQRT3, _SQRT3, size)
        return rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.sigma * self.standardized(rng, size)


@dataclass(frozen=True)
class BlackBox:
    """Deterministic part ``f`` of an experiment with ``input_dim`` inputs.

    ``f`` receives an (n, input_dim) array and returns the n outputs, one per
    row. Use :meth:`from_scalar` to wrap a function of a single row.
    """

    f: Callable[[np.ndarray], np.ndarray]
    input_dim: int = 1
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if int(self.input_dim) < 1:
            raise ValueError("input_dim must be a positive integer")

    @classmethod
    def from_scalar(cls, fn: Callable[[np.ndarray], float], input_dim: int = 1, name: str = "custom"):
        def rowwise(X):
            return np.array([fn(row) for row in X], dtype=np.float64)

        return cls(rowwise, input_dim, name)

    def evaluate(self, X) -> np.ndarray:
        X = _as_inputs(X)
        if X.shape[1] != self.input_dim:
            raise ValueError(f"black box {self.name!r} takes {self.input_dim} inputs, X has {X.shape[1]} columns")
        out = np.asarray(self.f(X), dtype=np.float64).reshape(-1)
        if out.shape[0] != X.shape[0]:
            raise ValueError("f must return one output per row of X")
        return out


def _as_inputs(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return X


def generate_outputs(box: BlackBox, X, noise: NoiseSpec, seed) -> np.ndarray:
    """One set of noisy outputs ``f(X) + sigma * z`` for the n rows of ``X``."""
    fx = box.evaluate(X)
    return fx + noise.sample(stream(seed), fx.shape[0])


def generate_dataset(box: BlackBox, X, noise: NoiseSpec, seed) -> Dataset:
    X = _as_inputs(X)
    return Dataset(X, generate_outputs(box, X, noise, seed))


def replicate_outputs(box: BlackBox, X, noise: NoiseSpec, m: int, seed) -> list[np.ndarray]:
    """``m`` independent repetitions of the whole experiment with ``X`` fixed.

    Replicate ``k`` equals ``generate_outputs(box, X, noise, SeedSequence(seed, spawn_key=(k,)))``.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    fx = box.evaluate(X)
    return [fx + noise.sample(stream(seed, k), fx.shape[0]) for k in range(m)]


def average_outputs(replicates: Sequence) -> np.ndarray:
    """Component-wise mean of a sequence of equal-length output vectors."""
    if len(replicates) == 0:
        raise ValueError("cannot average an empty sequence of replicates")
    lengths = {len(np.ravel(r)) for r in replicates}
    if len(lengths) != 1:
        raise ValueError(f"replicates have differing lengths {sorted(lengths)}")
    return np.mean(np.stack([np.ravel(np.asarray(r, dtype=np.float64)) for r in replicates]), axis=0)


def uniform_inputs(n: int) -> np.ndarray:
    """Midpoints of ``n`` equal cells on [0, 1], as an (n, 1) input matrix.

    Pairwise distances stay below 1, so the sum-of-(1 - |d|) similarity is
    strictly positive for every pair.
    """
    return ((np.arange(n) + 0.5) / n)[:, None]


def _poly(coefs):
    def f(X):
        return np.polynomial.polynomial.polyval(X[:, 0], coefs)

    return f


def parse_blackbox(spec: str) -> BlackBox:
    """Build one of the named boxes: ``zero``, ``sin`` or ``poly:c0,c1,...``."""
    spec = spec.strip()
    if spec == "zero":
        return BlackBox(lambda X: np.zeros(X.shape[0]), 1, "zero")
    if spec == "sin":
        return BlackBox(lambda X: np.sin(2.0 * np.pi * X[:, 0]), 1, "sin")
    if spec.startswith("poly:"):
        try:
            coefs = [float(c) for c in spec[5:].split(",")]
        except ValueError:
            raise ValueError(f"bad polynomial coefficients in {spec!r}") from None
        if not coefs:
            raise ValueError("polynomial needs at least one coefficient")
        return BlackBox(_poly(np.array(coefs)), 1, spec)
    raise ValueError(f"unknown black box {spec!r}; expected zero, sin or poly:c0,c1,...")
