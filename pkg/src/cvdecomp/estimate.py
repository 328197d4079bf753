"""Error decomposition, Monte-Carlo instability, noise estimation and
model selection by the cross-validation criterion.

A *fit function* is any callable ``fit_fn(X, y)`` returning an object with a
``predict(X)`` method. :class:`LinearSpec` and :class:`IblSpec` are fit
functions, and also know their analytic instability, which is what
:func:`select_model` needs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import ibl, linreg
from .blackbox import NoiseSpec, stream
from .data import Dataset
from .ibl import InstabilityInterval

__all__ = [
    "ErrorDecomposition",
    "MonteCarloInstability",
    "LinearSpec",
    "IblSpec",
    "FixedModel",
    "fixed_fit",
    "memorizer",
    "parse_model_spec",
    "decompose",
    "monte_carlo_instability",
    "estimate_sigma_sq_residual",
    "CandidateRow",
    "SelectionReport",
    "select_model",
]


# -- predictors ------------------------------------------------------------

@dataclass(frozen=True)
class FixedModel:
    """Predicts the same values whatever data it was given."""

    values: np.ndarray

    def predict(self, X):
        return np.asarray(self.values, dtype=np.float64).copy()


def fixed_fit(values) -> Callable:
    """Fit function that ignores the outputs and always returns ``values``."""
    values = np.asarray(values, dtype=np.float64)

    def fit_fn(X, y):
        return FixedModel(values)

    return fit_fn


def memorizer(X, y):
    """Fit function whose fitted values on the training rows are the outputs themselves."""
    return FixedModel(np.asarray(y, dtype=np.float64))


@dataclass(frozen=True)
class LinearSpec:
    """Polynomial least squares with ``n_terms`` terms in one input column."""

    n_terms: int
    input_index: int = 0

    @property
    def id(self) -> str:
        return f"LR{self.n_terms}"

    @property
    def basis(self) -> linreg.PolynomialBasisSpec:
        return linreg.PolynomialBasisSpec(self.n_terms, self.input_index)

    def __call__(self, X, y) -> linreg.LinearModel:
        return linreg.fit(X, y, self.basis)

    def instability_coefficient(self, n: int) -> InstabilityInterval:
        """Expected squared instability divided by sigma^2."""
        return InstabilityInterval(2.0 * self.n_terms, 2.0 * self.n_terms)


@dataclass(frozen=True)
class IblSpec:
    """Instance-based learner: m2 with ``k`` neighbors, or m3 when ``threshold`` is set."""

    k: int = 1
    weighting: str = "uniform"
    measure: str = "sum"
    threshold: Optional[float] = None

    @property
    def id(self) -> str:
        if self.threshold is not None:
            return f"M3(t={self.threshold:g})"
        suffix = "" if self.weighting == "uniform" else "-sim"
        return f"IBL{self.k}{suffix}"

    def __call__(self, X, y) -> ibl.IblModel:
        ds = Dataset(X, y)
        if self.threshold is not None:
            return ibl.reduced_model(ds, self.threshold, self.measure)
        return ibl.IblModel.from_dataset(ds, self.k, self.weighting, self.measure)

    def instability_coefficient(self, n: int) -> InstabilityInterval:
        if self.threshold is not None:
            return ibl.analytic_instability_sq_ibl(1.0, n, 1, reduced=True)
        return ibl.analytic_instability_sq_ibl(1.0, n, self.k, self.weighting)


def parse_model_spec(text: str):
    """Parse ``lr:R``, ``ibl:K``, ``ibl:k=K,WEIGHTING[,measure]`` or ``m3:THRESHOLD``."""
    kind, _, rest = text.strip().partition(":")
    kind = kind.lower()
    try:
        if kind == "lr":
            return LinearSpec(int(rest))
        if kind == "ibl":
            k, weighting, measure = 1, "uniform", "sum"
            for part in filter(None, (p.strip() for p in rest.split(","))):
                key, eq, val = part.partition("=")
                if eq and key == "k" or not eq and part.isdigit():
                    k = int(val if eq else part)
                elif part in ibl.WEIGHTINGS or key == "weighting" and val in ibl.WEIGHTINGS:
                    weighting = val if eq else part
                elif part in ibl.SIMILARITIES or key == "measure" and val in ibl.SIMILARITIES:
                    measure = val if eq else part
                else:
                    raise ValueError(f"unrecognized option {part!r}")
            return IblSpec(k, weighting, measure)
        if kind == "m3":
            val = rest.split("=", 1)[-1]
            return IblSpec(1, "uniform", "sum", float(val))
    except ValueError as exc:
        raise ValueError(f"bad model spec {text!r}: {exc}") from None
    raise ValueError(f"bad model spec {text!r}: expected lr:R, ibl:k=K[,weighting] or m3:T")


# -- decomposition -----------------------------------------------------------

@dataclass(frozen=True)
class ErrorDecomposition:
    """Training error, cross-validation error, instability and their sum.

    ``e_omega`` is computed as ``e_t + e_s``; for a symmetric experiment it has
    the same distribution as ``e_c``.
    """

    e_t: np.ndarray
    e_s: np.ndarray
    e_c: np.ndarray
    e_omega: np.ndarray

    def norm(self, name: str) -> float:
        return float(np.linalg.norm(getattr(self, name)))

    def norm_sq(self, name: str) -> float:
        v = getattr(self, name)
        return float(v @ v)

    @property
    def cos_angle(self) -> float:
        """Cosine of the angle between ``e_t`` and ``e_s`` (NaN when either is zero)."""
        a, b = self.norm("e_t"), self.norm("e_s")
        if a == 0.0 or b == 0.0:
            return math.nan
        return float(self.e_t @ self.e_s) / (a * b)


def decompose(fit_fn: Callable, X, y1, y2) -> ErrorDecomposition:
    """Fit on ``y1`` and on ``y2`` at the same inputs and split the errors."""
    y1 = np.asarray(y1, dtype=np.float64).ravel()
    y2 = np.asarray(y2, dtype=np.float64).ravel()
    n = np.shape(X)[0]
    if y1.shape[0] != n or y2.shape[0] != n:
        raise ValueError(f"X has {n} rows but outputs have lengths {y1.shape[0]} and {y2.shape[0]}")
    fit1 = np.asarray(fit_fn(X, y1).predict(X), dtype=np.float64)
    fit2 = np.asarray(fit_fn(X, y2).predict(X), dtype=np.float64)
    e_t = fit1 - y1
    e_s = fit2 - fit1
    return ErrorDecomposition(e_t=e_t, e_s=e_s, e_c=fit1 - y2, e_omega=e_t + e_s)


# -- Monte-Carlo instability -------------------------------------------------

@dataclass(frozen=True)
class MonteCarloInstability:
    mean_norm: float
    mean_sq: float
    se_norm: float
    se_sq: float
    trials: int


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    m = float(values.mean())
    if values.shape[0] < 2:
        return m, math.nan
    return m, float(values.std(ddof=1) / math.sqrt(values.shape[0]))


def monte_carlo_instability(fit_fn: Callable, X, y1, noise: NoiseSpec, trials: int = 1000,
                            seed=0) -> MonteCarloInstability:
    """Estimate expected instability by re-fitting on perturbed outputs.

    Each trial fits ``y1 + sigma * sqrt(2) * zeta`` with fresh standardized
    ``zeta``: given ``y1``, a second independent replicate differs from it by
    noise of variance ``2 sigma^2``. This is exact in second moments for
    smoothers that are linear in ``y`` and an approximation otherwise.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    y1 = np.asarray(y1, dtype=np.float64).ravel()
    base = np.asarray(fit_fn(X, y1).predict(X), dtype=np.float64)
    scale = noise.sigma * math.sqrt(2.0)
    norms = np.empty(trials)
    for t in range(trials):
        y2 = y1 + scale * noise.standardized(stream(seed, t), y1.shape[0])
        d = np.asarray(fit_fn(X, y2).predict(X), dtype=np.float64) - base
        norms[t] = math.sqrt(float(d @ d))
    m1, s1 = _mean_se(norms)
    m2, s2 = _mean_se(norms * norms)
    return MonteCarloInstability(m1, m2, s1, s2, trials)


def estimate_sigma_sq_residual(X, y, r: Optional[int] = None) -> float:
    """Residual mean square ``||e_t||^2 / (n - r)`` of a least-squares fit.

    If ``r`` is None, ``X`` is the design matrix and ``r`` its column count;
    otherwise ``X`` holds raw inputs and an ``r``-term polynomial in its first
    column is fit.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if r is None:
        D = np.asarray(X, dtype=np.float64)
        D = D[:, None] if D.ndim == 1 else D
        model = linreg.fit(D, y)
    else:
        D = X
        model = linreg.fit(X, y, linreg.PolynomialBasisSpec(r))
    n = y.shape[0]
    if n <= model.r:
        raise ValueError(f"need n > r to estimate sigma^2 (n={n}, r={model.r})")
    return linreg.training_error(model, D, y).sse / (n - model.r)


# -- model selection -------------------------------------------------------

_REL_TIE = 1e-9
_ABS_TIE = 1e-12


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=_REL_TIE, abs_tol=_ABS_TIE)


@dataclass(frozen=True)
class CandidateRow:
    id: str
    sse: float
    instability_coef: InstabilityInterval
    instability: InstabilityInterval
    cvc: InstabilityInterval
    aic: Optional[float]
    eligible: bool

    def to_dict(self) -> dict:
        def iv(x: InstabilityInterval):
            return x.lower if x.is_point else [x.lower, x.upper]

        return {
            "model": self.id,
            "sse": self.sse,
            "instability_coefficient": iv(self.instability_coef),
            "instability": iv(self.instability),
            "cvc": iv(self.cvc),
            "aic": self.aic,
            "eligible": self.eligible,
        }


@dataclass(frozen=True)
class SelectionReport:
    rows: list
    chosen: str
    tied: list
    sigma_sq_used: float
    sigma_sq_source: str = "given"
    n: int = 0

    def row(self, model_id: str) -> CandidateRow:
        for r in self.rows:
            if r.id == model_id:
                return r
        raise KeyError(model_id)

    def to_dict(self) -> dict:
        return {
            "sigma_sq": self.sigma_sq_used,
            "sigma_sq_source": self.sigma_sq_source,
            "n": self.n,
            "chosen": self.chosen,
            "tied": list(self.tied),
            "candidates": [r.to_dict() for r in self.rows],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_table(self) -> str:
        def fmt_coef(iv: InstabilityInterval) -> str:
            if iv.is_point:
                return f"{iv.lower:.4g}*s2"
            return f"[{iv.lower:.4g}, {iv.upper:.4g}]*s2"

        def fmt(iv: InstabilityInterval) -> str:
            if iv.is_point:
                return f"{iv.lower:.4f}"
            return f"[{iv.lower:.4f}, {iv.upper:.4f}]"

        header = ("model", "sse", "instability", "cvc", "aic", "")
        lines = []
        for r in self.rows:
            mark = "*" if r.id == self.chosen else ("=" if r.id in self.tied else "")
            aic = "-" if r.aic is None else f"{r.aic:.4f}"
            lines.append((r.id, f"{r.sse:.4f}", fmt_coef(r.instability_coef), fmt(r.cvc), aic, mark))
        widths = [max(len(str(row[i])) for row in [header] + lines) for i in range(len(header))]
        out = [f"sigma^2 = {self.sigma_sq_used:g} ({self.sigma_sq_source}); s2 denotes sigma^2"]
        for row in [header] + lines:
            out.append("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip())
        tie_note = f" (tied: {', '.join(self.tied)})" if len(self.tied) > 1 else ""
        out.append(f"chosen: {self.chosen}{tie_note}")
        return "\n".join(out)


def _pick(values: Sequence[float], instabilities: Sequence[float]) -> tuple[int, list[int]]:
    """Argmin with tolerance; ties go to the smaller instability, then the earlier index.

    Returns the chosen index and every index whose value ties the minimum.
    """
    best = min(values)
    tied = [i for i, v in enumerate(values) if _close(v, best)]
    least = min(instabilities[i] for i in tied)
    stable = [i for i in tied if _close(instabilities[i], least)]
    return stable[0], tied


def select_model(candidates: Sequence, dataset: Dataset, sigma_sq: float,
                 sigma_sq_source: str = "given") -> SelectionReport:
    """Fit every candidate and choose the one with the smallest CVC.

    ``CVC = sse + (expected squared instability)``. Candidates whose
    instability is only bounded (similarity-weighted k-NN) compete with their
    upper-bound CVC, and only when it beats every point-valued CVC.
    """
    if not sigma_sq >= 0 or not math.isfinite(sigma_sq):
        raise ValueError(f"sigma_sq must be finite and non-negative, got {sigma_sq}")
    if not candidates:
        raise ValueError("no candidates to select from")
    n = dataset.n
    rows = []
    for spec in candidates:
        try:
            model = spec(dataset.X, dataset.y)
        except ValueError:
            continue
        e_t = np.asarray(model.predict(dataset.X)) - dataset.y
        sse = float(e_t @ e_t)
        coef = spec.instability_coefficient(n)
        inst = InstabilityInterval(coef.lower * sigma_sq, coef.upper * sigma_sq)
        crit = InstabilityInterval(sse + inst.lower, sse + inst.upper)
        aic = None
        if isinstance(spec, LinearSpec) and sigma_sq > 0:
            aic = linreg.aic_linear(sse, math.sqrt(sigma_sq), n, spec.n_terms)
        rows.append(CandidateRow(spec.id, sse, coef, inst, crit, aic, inst.is_point))
    if not rows:
        raise ValueError("none of the candidates could be fit to the dataset")

    point = [r for r in rows if r.instability.is_point]
    best_point = min((r.cvc.lower for r in point), default=math.inf)
    rows = [r if r.eligible else
            CandidateRow(r.id, r.sse, r.instability_coef, r.instability, r.cvc, r.aic,
                         r.cvc.upper < best_point)
            for r in rows]
    pool = [r for r in rows if r.eligible]
    values = [r.cvc.upper for r in pool]
    insts = [r.instability.upper for r in pool]
    i, tied = _pick(values, insts)
    return SelectionReport(rows, pool[i].id, [pool[j].id for j in tied], float(sigma_sq),
                           sigma_sq_source, n)
