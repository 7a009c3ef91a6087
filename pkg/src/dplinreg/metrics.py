"""Empirical error bounds and ratio CDFs over repeated DP trials."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import X_HIGH, X_LOW, PredictionPair, exact
from .errors import AllFailures, InvalidValue, ZeroStandardError


@dataclass(frozen=True, eq=False)
class TrialReport:
    """Outputs of repeated runs of one algorithm on one dataset.

    A ``None`` entry in ``trials`` is a failed run.
    """

    dataset_id: str
    algorithm: str
    trials: tuple[PredictionPair | None, ...]
    ols_baseline: PredictionPair
    sigma_hat: tuple[float, float]
    truth: PredictionPair | None = None
    epsilon: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "trials", tuple(self.trials))
        if not self.trials:
            raise InvalidValue("a report needs at least one trial")
        if any(not s >= 0 for s in self.sigma_hat):
            raise InvalidValue(f"standard errors must be non-negative, got {self.sigma_hat}")

    @property
    def failure_rate(self) -> float:
        return sum(t is None for t in self.trials) / len(self.trials)

    def sigma(self, which) -> float:
        if which == "p25":
            return self.sigma_hat[0]
        if which == "p75":
            return self.sigma_hat[1]
        raise InvalidValue(f"no stored standard error for {which!r}")


def _x_of(which) -> float:
    if which == "p25":
        return X_LOW
    if which == "p75":
        return X_HIGH
    x = float(which)
    if not 0 <= x <= 1:
        raise InvalidValue(f"x_new must lie in [0, 1], got {which!r}")
    return x


def prediction_errors(report: TrialReport, which="p25", vs="ols") -> np.ndarray:
    """Absolute errors per trial; failed trials give ``inf``.

    ``which`` is ``"p25"``, ``"p75"`` or a numeric x_new. ``vs`` is ``"ols"``
    or ``"truth"``.
    """
    x = _x_of(which)
    if vs == "ols":
        ref = report.ols_baseline.at(x)
    elif vs == "truth":
        if report.truth is None:
            raise InvalidValue(f"report {report.dataset_id}/{report.algorithm} has no ground truth")
        ref = report.truth.at(x)
    else:
        raise InvalidValue(f"vs must be 'ols' or 'truth', got {vs!r}")
    return np.array([math.inf if t is None else abs(t.at(x) - ref) for t in report.trials])


def error_bound(errors: Iterable[float], q: float) -> float:
    """Smallest c with at least q% of ``errors`` at most c (``inf`` entries never qualify)."""
    errs = np.sort(np.asarray(list(errors), dtype=float))
    if errs.size == 0:
        raise InvalidValue("no errors to summarise")
    if not 0 <= q <= 100:
        raise InvalidValue(f"q must lie in [0, 100], got {q}")
    need = math.ceil(exact(q) * errs.size / 100)
    if need == 0:
        return 0.0
    return float(errs[need - 1])


def empirical_error_bound(report: TrialReport, q: float, which="p25", vs="ols") -> float:
    """q% empirical error bound of ``report`` against OLS or the ground truth.

    Returns ``inf`` when too many trials failed for q% of them to be covered.
    """
    errs = prediction_errors(report, which, vs)
    if q > 0 and np.isinf(errs).all():
        raise AllFailures(f"every trial of {report.algorithm} on {report.dataset_id} failed")
    return error_bound(errs, q)


@dataclass(frozen=True)
class RatioCdf:
    """Sorted ratios Ĉ(q)/σ̂ with their empirical CDF ordinates."""

    points: tuple[tuple[float, float], ...]
    excluded: tuple[str, ...] = ()

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r for r, _ in self.points])

    @property
    def excluded_count(self) -> int:
        return len(self.excluded)

    def median(self) -> float:
        return float(np.median(self.ratios)) if self.points else math.nan

    def fraction_below(self, x: float) -> float:
        r = self.ratios
        return float(np.mean(r <= x)) if r.size else math.nan


def ratio(report: TrialReport, q: float, which="p25", vs="ols") -> float:
    sigma = report.sigma(which)
    if sigma <= 0:
        raise ZeroStandardError(f"standard error is zero for dataset {report.dataset_id}")
    try:
        c = empirical_error_bound(report, q, which, vs)
    except AllFailures:
        c = math.inf
    return c / sigma


def ratio_cdf(reports: Sequence[TrialReport], q: float = 68, which="p25", vs="ols") -> RatioCdf:
    """Empirical CDF of Ĉ(q)/σ̂ across datasets.

    Datasets with zero standard error are left out and listed in ``excluded``.
    """
    ratios, excluded = [], []
    for r in reports:
        try:
            ratios.append(ratio(r, q, which, vs))
        except ZeroStandardError:
            excluded.append(r.dataset_id)
    ratios.sort()
    m = len(ratios)
    points = tuple((v, (i + 1) / m) for i, v in enumerate(ratios))
    return RatioCdf(points, tuple(excluded))


def mean_ratio(reports: Sequence[TrialReport], q: float = 68, which="p25", vs="truth") -> float:
    vals = []
    for r in reports:
        try:
            vals.append(ratio(r, q, which, vs))
        except ZeroStandardError:
            continue
    return float(np.mean(vals)) if vals else math.nan


def metric_rows(report: TrialReport, qs: Sequence[float], vs_list=("ols",)) -> list[dict]:
    """Flat rows (one per q, prediction point and reference) for CSV output."""
    rows = []
    for vs in vs_list:
        if vs == "truth" and report.truth is None:
            continue
        for q in qs:
            for which in ("p25", "p75"):
                sigma = report.sigma(which)
                try:
                    c = empirical_error_bound(report, q, which, vs)
                except AllFailures:
                    c = math.inf
                rows.append({
                    "dataset_id": report.dataset_id,
                    "algorithm": report.algorithm,
                    "epsilon": report.epsilon,
                    "q": q,
                    "which": which,
                    "vs": vs,
                    "c_hat": c,
                    "sigma_hat": sigma,
                    "ratio": c / sigma if sigma > 0 else math.nan,
                    "failure_rate": report.failure_rate,
                })
    return rows

