"""Replicated simulation checks of the expected-error identities.

Each check draws ``trials`` independent pairs of output replicates
``(y1, y2)`` at fixed inputs, decomposes the errors of one modeling
procedure, and compares trial means against the analytic expectation.

Every procedure used here is a linear smoother on the training rows
(fitted values ``A @ y + c``), so trials are processed as one batch. The
first few trials are re-run through the real fit functions and the two
routes must agree.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import ibl, linalg, linreg
from .blackbox import DISTRIBUTIONS, BlackBox, NoiseSpec, parse_blackbox, stream, uniform_inputs
from .estimate import FixedModel, IblSpec, decompose, fixed_fit, memorizer

__all__ = [
    "REL_TOL",
    "TheoremCheck",
    "AngleDiagnostic",
    "HarnessConfig",
    "check_theorem2",
    "check_theorem3",
    "check_theorem6",
    "check_theorem7",
    "check_theorem8",
    "check_theorem10",
    "check_theorem11",
    "angle_diagnostic_m2",
    "run_suite",
    "CHECK_NAMES",
]

REL_TOL = 0.05
_CROSS_CHECK_TRIALS = 3


@dataclass
class TheoremCheck:
    """Outcome of one simulated check.

    ``kind`` is ``"equality"``, ``"lower_bound"`` or ``"interval"``; for the
    interval kind ``analytic`` is ``[lower, upper]``. ``details`` carries the
    auxiliary per-trial and aggregate checks; each ``*_ok`` entry there must
    also hold for ``passed``.
    """

    theorem: str
    kind: str
    analytic: object
    empirical: float
    standard_error: float
    trials: int
    passed: bool
    config: dict
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict
        return _jsonable(d)

    def summary(self) -> str:
        a = self.analytic
        a = f"[{a[0]:.4g}, {a[1]:.4g}]" if isinstance(a, (list, tuple)) else f"{a:.4g}"
        return (f"{self.theorem:<5} {self.verdict.upper():<4}  analytic {a:<18} "
                f"empirical {self.empirical:.4g} +/- {self.standard_error:.2g}  ({self.trials} trials)")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    m = float(values.mean())
    if values.shape[0] < 2:
        return m, 0.0
    return m, float(values.std(ddof=1) / math.sqrt(values.shape[0]))


def _slack(se: float, reference: float, rel_tol: float) -> float:
    return max(3.0 * se, rel_tol * abs(reference))


def _verdict(kind: str, analytic, empirical: float, se: float, rel_tol: float) -> bool:
    if kind == "equality":
        return abs(empirical - analytic) <= _slack(se, analytic, rel_tol)
    if kind == "lower_bound":
        return empirical >= analytic - _slack(se, analytic, rel_tol)
    if kind == "interval":
        lo, hi = analytic
        return lo - _slack(se, lo, rel_tol) <= empirical <= hi + _slack(se, hi, rel_tol)
    raise ValueError(kind)


# -- batch simulation ------------------------------------------------------

@dataclass
class _Batch:
    Y1: np.ndarray
    Y2: np.ndarray
    E_t: np.ndarray
    E_s: np.ndarray
    E_c: np.ndarray
    E_w: np.ndarray

    def sq(self, name):
        E = getattr(self, name)
        return np.einsum("ij,ij->i", E, E)

    def norm(self, name):
        return np.sqrt(self.sq(name))


def _paired_outputs(box: BlackBox, X, noise: NoiseSpec, trials: int, seed):
    fx = box.evaluate(X)
    n = fx.shape[0]
    Z = np.empty((trials, 2 * n))
    for t in range(trials):
        Z[t] = noise.standardized(stream(seed, t), 2 * n)
    Y1 = fx + noise.sigma * Z[:, :n]
    Y2 = fx + noise.sigma * Z[:, n:]
    return Y1, Y2


def _simulate(A: np.ndarray, offset, Y1: np.ndarray, Y2: np.ndarray) -> _Batch:
    F1 = Y1 @ A.T + offset
    F2 = Y2 @ A.T + offset
    E_t = F1 - Y1
    E_s = F2 - F1
    return _Batch(Y1, Y2, E_t, E_s, F1 - Y2, E_t + E_s)


def _cross_check(batch: _Batch, fit_fn: Callable, X) -> float:
    """Largest deviation between batch errors and ``decompose`` through ``fit_fn``."""
    worst = 0.0
    for t in range(min(_CROSS_CHECK_TRIALS, batch.Y1.shape[0])):
        d = decompose(fit_fn, X, batch.Y1[t], batch.Y2[t])
        for name, E in (("e_t", batch.E_t), ("e_s", batch.E_s), ("e_c", batch.E_c)):
            scale = 1.0 + np.max(np.abs(batch.Y1[t]))
            worst = max(worst, float(np.max(np.abs(getattr(d, name) - E[t]))) / scale)
    return worst


def _common_details(batch: _Batch, fit_fn: Callable, X) -> dict:
    """Triangle inequality per trial, its aggregate form, and mean-vs-RMS bounds."""
    nt, ns, nc, nw = (batch.norm(k) for k in ("E_t", "E_s", "E_c", "E_w"))
    triangle = bool(np.all(nw <= (nt + ns) * (1.0 + 1e-12) + 1e-300))
    mc, sec = _mean_se(nc)
    mt, _ = _mean_se(nt)
    ms, _ = _mean_se(ns)
    lemma = {}
    for name, v in (("e_t", nt), ("e_s", ns), ("e_c", nc), ("e_omega", nw)):
        m, se = _mean_se(v)
        rms = math.sqrt(float(np.mean(v * v)))
        lemma[name] = {"mean_norm": m, "rms_norm": rms, "ok": bool(m <= rms + 3.0 * se + 1e-15)}
    route = _cross_check(batch, fit_fn, X)
    return {
        "mean_norm_e_t": mt,
        "mean_norm_e_s": ms,
        "mean_norm_e_c": mc,
        "mean_sq_e_t": float(np.mean(nt * nt)),
        "mean_sq_e_s": float(np.mean(ns * ns)),
        "mean_sq_e_c": float(np.mean(nc * nc)),
        "triangle_per_trial_ok": triangle,
        "theorem1_aggregate_ok": bool(mc <= mt + ms + 3.0 * sec + 1e-15),
        "lemma1": lemma,
        "lemma1_ok": all(v["ok"] for v in lemma.values()),
        "route_deviation": route,
        "route_agreement_ok": bool(route <= 1e-9),
    }


def _finish(theorem, kind, analytic, empirical, se, trials, config, details, rel_tol) -> TheoremCheck:
    ok = _verdict(kind, analytic, empirical, se, rel_tol)
    ok = ok and all(v for k, v in details.items() if k.endswith("_ok"))
    return TheoremCheck(theorem, kind, analytic, empirical, se, trials, bool(ok), config, details)


def _config(box, X, noise, **extra) -> dict:
    cfg = {"f": box.name, "n": int(np.shape(X)[0]), "sigma": noise.sigma,
           "distribution": noise.distribution}
    cfg.update(extra)
    return cfg


def _inputs(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return X[:, None] if X.ndim == 1 else X


# -- checks ----------------------------------------------------------------

def check_theorem2(box: BlackBox, X, noise: NoiseSpec, trials: int = 10_000, seed=0,
                   rel_tol: float = REL_TOL) -> TheoremCheck:
    """Model fixed to the true function: squared CV error averages sigma^2 n, instability is zero."""
    X = _inputs(X)
    fx = box.evaluate(X)
    n = X.shape[0]
    Y1, Y2 = _paired_outputs(box, X, noise, trials, seed)
    batch = _simulate(np.zeros((n, n)), fx, Y1, Y2)
    details = _common_details(batch, fixed_fit(fx), X)
    details["e_s_zero_ok"] = bool(np.all(batch.E_s == 0.0))
    m, se = _mean_se(batch.norm("E_c"))
    details["norm_bound"] = noise.sigma * math.sqrt(n)
    details["norm_bound_ok"] = bool(m <= details["norm_bound"] + 3.0 * se + 1e-15)
    emp, se2 = _mean_se(batch.sq("E_c"))
    return _finish("T2", "equality", noise.sigma ** 2 * n, emp, se2, trials,
                   _config(box, X, noise, model="true f"), details, rel_tol)


def check_theorem3(box: BlackBox, X, noise: NoiseSpec, trials: int = 10_000, seed=0,
                   rel_tol: float = REL_TOL) -> TheoremCheck:
    """Memorizing the outputs: zero training error, squared CV error averages 2 sigma^2 n."""
    X = _inputs(X)
    n = X.shape[0]
    Y1, Y2 = _paired_outputs(box, X, noise, trials, seed)
    batch = _simulate(np.eye(n), 0.0, Y1, Y2)
    details = _common_details(batch, memorizer, X)
    details["e_t_zero_ok"] = bool(np.all(batch.E_t == 0.0))
    details["norm_e_s_equals_norm_e_c_ok"] = bool(np.array_equal(batch.norm("E_s"), batch.norm("E_c")))
    emp, se = _mean_se(batch.sq("E_c"))
    return _finish("T3", "equality", 2.0 * noise.sigma ** 2 * n, emp, se, trials,
                   _config(box, X, noise, model="memorizer"), details, rel_tol)


def _design(X, r, design):
    if design is not None:
        return np.asarray(design, dtype=np.float64)
    return linreg.polynomial_design_matrix(X, r)


def _lr_fit_fn(D):
    """Fit function for least squares on a fixed design matrix ``D``."""
    def fit_fn(_, y):
        return FixedModel(linreg.fit(D, y).predict(D))

    return fit_fn


def _lr_batch(box, X, noise, r, trials, seed, design):
    D = _design(X, r, design)
    P = linalg.projection_matrix(D)
    Y1, Y2 = _paired_outputs(box, X, noise, trials, seed)
    return D, P, _simulate(P.matrix, 0.0, Y1, Y2)


def check_theorem6(box: BlackBox, X, noise: NoiseSpec, r: int = 3, trials: int = 10_000, seed=0,
                   rel_tol: float = REL_TOL, distributions: Optional[Sequence[str]] = DISTRIBUTIONS,
                   design=None) -> TheoremCheck:
    """Least squares with r independent columns: squared instability averages 2 sigma^2 r.

    The headline numbers use ``noise``; the same check is repeated for every
    family in ``distributions`` and all of them must pass.
    """
    X = _inputs(X)
    D, P, batch = _lr_batch(box, X, noise, r, trials, seed, design)
    rank = P.rank
    analytic = 2.0 * noise.sigma ** 2 * rank
    details = _common_details(batch, _lr_fit_fn(D), X)
    emp, se = _mean_se(batch.sq("E_s"))
    per_dist = {}
    for dist in distributions or ():
        if dist == noise.distribution:
            e, s = emp, se
        else:
            Y1, Y2 = _paired_outputs(box, X, NoiseSpec(noise.sigma, dist), trials, seed)
            e, s = _mean_se(_simulate(P.matrix, 0.0, Y1, Y2).sq("E_s"))
        per_dist[dist] = {"empirical": e, "standard_error": s,
                          "ok": _verdict("equality", analytic, e, s, rel_tol)}
    details["distributions"] = per_dist
    details["all_distributions_ok"] = all(v["ok"] for v in per_dist.values())
    return _finish("T6", "equality", analytic, emp, se, trials,
                   _config(box, X, noise, model=f"LR{rank}", r=rank), details, rel_tol)


def check_theorem7(box: BlackBox, X, noise: NoiseSpec, r: int = 2, trials: int = 10_000, seed=0,
                   rel_tol: float = REL_TOL, design=None, identity_tol: float = 1e-8) -> TheoremCheck:
    """Least squares: squared CV error equals squared training error plus squared instability.

    Per trial the identity holds for ``e_omega = e_t + e_s`` because the
    residual is orthogonal to the column space; across trials it holds for
    ``e_c`` in expectation.
    """
    X = _inputs(X)
    D, P, batch = _lr_batch(box, X, noise, r, trials, seed, design)
    st, ss, sw = batch.sq("E_t"), batch.sq("E_s"), batch.sq("E_w")
    rel = np.abs(sw - (st + ss)) / np.maximum(sw, np.finfo(float).tiny)
    rel[sw == 0.0] = 0.0
    inner = np.abs(np.einsum("ij,ij->i", batch.E_t, batch.E_s))
    # when e_t is at rounding level (interpolating fits) orthogonality is vacuous
    rounding = 16 * np.linalg.cond(D) * np.finfo(float).eps * np.linalg.norm(batch.Y1, axis=1)
    nt, ns = np.sqrt(st), np.sqrt(ss)
    ortho_bound = np.where(nt <= rounding, nt * ns, identity_tol * nt * ns)
    details_rounding_trials = int(np.sum(nt <= rounding))
    details = _common_details(batch, _lr_fit_fn(D), X)
    details["max_pythagoras_rel_error"] = float(rel.max())
    details["pythagoras_per_trial_ok"] = bool(np.all(rel <= identity_tol))
    ratio = np.divide(inner, nt * ns, out=np.zeros_like(inner), where=(st * ss > 0) & (nt > rounding))
    details["max_orthogonality_ratio"] = float(np.max(ratio))
    details["orthogonality_per_trial_ok"] = bool(np.all(inner <= ortho_bound + 1e-300))
    details["rounding_level_trials"] = details_rounding_trials
    diff = batch.sq("E_c") - st - ss
    gap, se = _mean_se(diff)
    rhs = float(st.mean() + ss.mean())
    details["mean_sq_e_t_plus_e_s"] = rhs
    details["aggregate_gap"] = gap
    details["aggregate_ok"] = bool(abs(gap) <= _slack(se, rhs, rel_tol))
    emp = float(batch.sq("E_c").mean())
    return _finish("T7", "equality", rhs, emp, se, trials,
                   _config(box, X, noise, model=f"LR{P.rank}", r=P.rank), details, rel_tol)


def check_theorem8(box: BlackBox, X, noise: NoiseSpec, r: int = 2, trials: int = 10_000, seed=0,
                   rel_tol: float = REL_TOL, design=None) -> TheoremCheck:
    """Least squares: squared CV error averages at least 2 sigma^2 r."""
    X = _inputs(X)
    D, P, batch = _lr_batch(box, X, noise, r, trials, seed, design)
    details = _common_details(batch, _lr_fit_fn(D), X)
    emp, se = _mean_se(batch.sq("E_c"))
    return _finish("T8", "lower_bound", 2.0 * noise.sigma ** 2 * P.rank, emp, se, trials,
                   _config(box, X, noise, model=f"LR{P.rank}", r=P.rank), details, rel_tol)


def check_theorem10(box: BlackBox, X, noise: NoiseSpec, k: int = 6, weighting: str = "uniform",
                    trials: int = 10_000, seed=0, rel_tol: float = REL_TOL,
                    measure: str = "sum") -> TheoremCheck:
    """k-NN averaging: squared instability is 2 sigma^2 n / k for uniform weights and
    lies in [2 sigma^2 n / k, 2 sigma^2 n] for similarity weights."""
    X = _inputs(X)
    n = X.shape[0]
    spec = IblSpec(k, weighting, measure)
    model = spec(X, np.zeros(n))
    A, flags = model.weight_matrix(X)
    Y1, Y2 = _paired_outputs(box, X, noise, trials, seed)
    batch = _simulate(A, 0.0, Y1, Y2)
    details = _common_details(batch, spec, X)
    w2 = np.sum(A * A, axis=1)
    details["sum_w_sq_min"] = float(w2.min())
    details["sum_w_sq_max"] = float(w2.max())
    details["weight_bounds_ok"] = bool(np.all(w2 >= 1.0 / k - 1e-12) and np.all(w2 <= 1.0 + 1e-12)
                                       and np.allclose(A.sum(axis=1), 1.0, atol=1e-12) and np.all(A >= 0))
    details["fallback_rows"] = int(flags.sum())
    details["exact_expectation"] = 2.0 * noise.sigma ** 2 * float(w2.sum())
    emp, se = _mean_se(batch.sq("E_s"))
    bounds = ibl.analytic_instability_sq_ibl(noise.sigma, n, k, weighting)
    if bounds.is_point:
        kind, analytic = "equality", bounds.value
    else:
        kind, analytic = "interval", [bounds.lower, bounds.upper]
    return _finish("T10", kind, analytic, emp, se, trials,
                   _config(box, X, noise, model=spec.id, k=k, weighting=weighting), details, rel_tol)


def check_theorem11(box: BlackBox, X, noise: NoiseSpec, threshold: float = 0.5, trials: int = 10_000,
                    seed=0, rel_tol: float = REL_TOL, measure: str = "sum") -> TheoremCheck:
    """Nearest neighbor over a thinned store: squared instability stays 2 sigma^2 n."""
    X = _inputs(X)
    n = X.shape[0]
    kept = ibl.retained_rows(X, threshold, measure)
    A = ibl.smoother_matrix(X, measure=measure, threshold=threshold)
    Y1, Y2 = _paired_outputs(box, X, noise, trials, seed)
    batch = _simulate(A, 0.0, Y1, Y2)
    spec = IblSpec(1, "uniform", measure, threshold)
    details = _common_details(batch, spec, X)
    details["retained_rows"] = int(kept.shape[0])
    emp, se = _mean_se(batch.sq("E_s"))
    return _finish("T11", "equality", 2.0 * noise.sigma ** 2 * n, emp, se, trials,
                   _config(box, X, noise, model=spec.id, threshold=threshold), details, rel_tol)


@dataclass
class AngleDiagnostic:
    """Empirical angle between training error and instability for k-NN averaging.

    Descriptive only: no expected value is asserted. ``gap`` is
    ``||e_omega||^2 - ||e_t||^2 - ||e_s||^2 = 2 e_t . e_s``.
    """

    angles: np.ndarray
    mean_cos: float
    se_cos: float
    histogram: np.ndarray
    bin_edges: np.ndarray
    gap_mean: float
    gap_se: float
    excluded: int
    trials: int
    config: dict

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "angles"}
        d["used"] = int(self.angles.shape[0])
        return _jsonable(d)

    def summary(self) -> str:
        return (f"angle m2: mean cos = {self.mean_cos:.4f} +/- {self.se_cos:.2g}, "
                f"gap = {self.gap_mean:.4g} +/- {self.gap_se:.2g}, "
                f"{self.excluded} of {self.trials} trials excluded")


def angle_diagnostic_m2(box: BlackBox, X, noise: NoiseSpec, k: int = 4, trials: int = 10_000, seed=0,
                        weighting: str = "uniform", measure: str = "sum", bins: int = 18) -> AngleDiagnostic:
    X = _inputs(X)
    n = X.shape[0]
    A, _ = IblSpec(k, weighting, measure)(X, np.zeros(n)).weight_matrix(X)
    Y1, Y2 = _paired_outputs(box, X, noise, trials, seed)
    batch = _simulate(A, 0.0, Y1, Y2)
    nt, ns = batch.norm("E_t"), batch.norm("E_s")
    dots = np.einsum("ij,ij->i", batch.E_t, batch.E_s)
    ok = (nt > 0) & (ns > 0)
    cos = np.clip(dots[ok] / (nt[ok] * ns[ok]), -1.0, 1.0)
    angles = np.arccos(cos)
    hist, edges = np.histogram(angles, bins=bins, range=(0.0, math.pi))
    mc, sc = _mean_se(cos) if cos.size else (math.nan, math.nan)
    gap = batch.sq("E_w") - batch.sq("E_t") - batch.sq("E_s")
    gm, gs = _mean_se(gap)
    return AngleDiagnostic(angles, mc, sc, hist, edges, gm, gs, int((~ok).sum()), trials,
                           _config(box, X, noise, model=f"IBL{k}", k=k))


# -- suite -----------------------------------------------------------------

CHECK_NAMES = ("T2", "T3", "T6", "T7", "T8", "T10", "T11", "angle")


@dataclass
class HarnessConfig:
    """Default experiment for the verification suite; every field can be overridden."""

    blackbox: str = "poly:0.2,0.6,-0.3"
    n: int = 24
    sigma: float = 0.5
    distribution: str = "normal"
    trials: int = 10_000
    seed: int = 0
    r: int = 2
    k: int = 6
    weighting: str = "uniform"
    threshold: float = 0.5
    angle_k: int = 4

    def noise(self) -> NoiseSpec:
        return NoiseSpec(self.sigma, self.distribution)

    def inputs(self) -> np.ndarray:
        return uniform_inputs(self.n)


def run_suite(config: Optional[HarnessConfig] = None, which: Sequence[str] = CHECK_NAMES):
    """Run the selected checks; returns ``(checks, angle_diagnostic_or_None)``."""
    c = config or HarnessConfig()
    unknown = set(which) - set(CHECK_NAMES)
    if unknown:
        raise ValueError(f"unknown checks {sorted(unknown)}; choose from {CHECK_NAMES}")
    box, X, noise = parse_blackbox(c.blackbox), c.inputs(), c.noise()
    common = dict(trials=c.trials, seed=c.seed)
    runners = {
        "T2": lambda: check_theorem2(box, X, noise, **common),
        "T3": lambda: check_theorem3(box, X, noise, **common),
        "T6": lambda: check_theorem6(box, X, noise, r=c.r, **common),
        "T7": lambda: check_theorem7(box, X, noise, r=c.r, **common),
        "T8": lambda: check_theorem8(box, X, noise, r=c.r, **common),
        "T10": lambda: check_theorem10(box, X, noise, k=c.k, weighting=c.weighting, **common),
        "T11": lambda: check_theorem11(box, X, noise, threshold=c.threshold, **common),
    }
    checks = [runners[name]() for name in CHECK_NAMES if name in which and name != "angle"]
    angle = angle_diagnostic_m2(box, X, noise, k=c.angle_k, **common) if "angle" in which else None
    return checks, angle


def suite_to_json(checks: Sequence[TheoremCheck], **kwargs) -> str:
    return json.dumps([c.to_dict() for c in checks], **kwargs)
