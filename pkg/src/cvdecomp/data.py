"""Datasets: an input matrix paired with an output vector, plus CSV I/O.

CSV layout is a header row ``x1,...,xr,y`` followed by one experiment per
line. Only plain decimal notation is accepted.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from os import PathLike
from typing import Union

import numpy as np

__all__ = ["DataError", "Dataset", "read_csv", "write_csv", "four_point_example"]

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class Dataset:
    """Inputs ``X`` (n x r, one row per experiment) and outputs ``y`` (n,)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if X.ndim != 2:
            raise DataError(f"X must be 2-dimensional, got shape {X.shape}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DataError(f"X must have n >= 1 rows and r >= 1 columns, got {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains non-finite values")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def r(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.X[rows], self.y[rows])


def four_point_example() -> Dataset:
    """The four-point, one-input training set used for the worked example."""
    x = np.array([0.20, 0.35, 0.60, 0.80])
    y = np.array([0.15, 0.85, 0.55, 0.75])
    return Dataset(x[:, None], y)


def _parse_float(token: str, line: int) -> float:
    token = token.strip()
    if not _DECIMAL.match(token):
        raise DataError(f"line {line}: not a decimal number: {token!r}")
    return float(token)


def read_csv(source: Union[str, PathLike, io.TextIOBase]) -> Dataset:
    """Read a dataset from a path or an open text stream."""
    if isinstance(source, io.TextIOBase):
        text = source.read()
    else:
        with open(source, newline="") as fh:
            text = fh.read()
    rows = [row for row in csv.reader(io.StringIO(text)) if any(c.strip() for c in row)]
    if not rows:
        raise DataError("empty CSV: expected a header row x1,...,xr,y")
    header = [h.strip() for h in rows[0]]
    r = len(header) - 1
    expected = [f"x{j}" for j in range(1, r + 1)] + ["y"]
    if r < 1 or header != expected:
        raise DataError(f"bad header {header!r}; expected {expected!r}")
    if len(rows) < 2:
        raise DataError("CSV has a header but no data rows")
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != r + 1:
            raise DataError(f"line {lineno}: expected {r + 1} fields, got {len(row)}")
        values.append([_parse_float(tok, lineno) for tok in row])
    arr = np.array(values, dtype=np.float64)
    return Dataset(arr[:, :r], arr[:, r])


def write_csv(dataset: Dataset, target: Union[str, PathLike, io.TextIOBase]) -> None:
    """Write ``dataset`` using ``repr`` floats so a re-read is bit-identical."""
    header = [f"x{j}" for j in range(1, dataset.r + 1)] + ["y"]

    def _emit(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row, yi in zip(dataset.X, dataset.y):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(yi))])

    if isinstance(target, io.TextIOBase):
        _emit(target)
    else:
        with open(target, "w", newline="") as fh:
            _emit(fh)
