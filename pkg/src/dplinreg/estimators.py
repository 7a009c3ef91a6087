"""Non-private baselines: OLS and Theil-Sen over a matching decomposition of K_n."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .core import X_HIGH, X_LOW, Dataset, PredictionPair, as_generator
from .errors import DegenerateX, InvalidValue, NoValidPairs, TooFewPoints


@dataclass(frozen=True)
class SufficientStats:
    xbar: float
    ybar: float
    nvar: float
    ncov: float
    n: int


@dataclass(frozen=True)
class OlsFit:
    alpha_hat: float
    beta_hat: float
    residual_norm: float
    n: int

    def predict(self, x_new: float) -> float:
        return self.alpha_hat * x_new + self.beta_hat

    @property
    def predictions(self) -> PredictionPair:
        return PredictionPair(self.predict(X_LOW), self.predict(X_HIGH))


def sufficient_stats(d: Dataset) -> SufficientStats:
    """Means, nvar(x) and ncov(x, y) by two-pass summation."""
    x, y = d.x, d.y
    xbar = math.fsum(x) / x.size
    ybar = math.fsum(y) / y.size
    dx = x - xbar
    dy = y - ybar
    nvar = math.fsum(dx * dx)
    ncov = math.fsum(dx * dy)
    return SufficientStats(xbar, ybar, nvar, ncov, d.n)


def ols_fit(d: Dataset) -> OlsFit:
    s = sufficient_stats(d)
    if s.nvar <= 0:
        raise DegenerateX("nvar(x) is zero; the OLS slope is undefined")
    alpha = s.ncov / s.nvar
    beta = s.ybar - alpha * s.xbar
    resid = d.y - alpha * d.x - beta
    return OlsFit(alpha, beta, math.sqrt(math.fsum(resid * resid)), d.n)


def ols_standard_error(fit: OlsFit, stats: SufficientStats, x_new: float) -> float:
    """Standard error of the OLS prediction at ``x_new`` under Gaussian noise."""
    n = fit.n
    if n < 3:
        raise TooFewPoints("the standard error needs n >= 3")
    if stats.nvar <= 0:
        raise DegenerateX("nvar(x) is zero")
    return fit.residual_norm / math.sqrt(n - 2) * math.sqrt(
        1.0 / n + (x_new - stats.xbar) ** 2 / stats.nvar
    )


@dataclass(frozen=True)
class MatchingSchedule:
    """Decomposition of K_n into (near-)perfect matchings.

    ``matchings`` has shape ``(num_matchings, n // 2, 2)`` and holds point indices.
    """

    n: int
    matchings: np.ndarray

    def __len__(self):
        return len(self.matchings)


@functools.lru_cache(maxsize=32)
def matching_schedule(n: int) -> MatchingSchedule:
    """Round-robin 1-factorization of K_n.

    Even n gives n - 1 perfect matchings. Odd n gets a phantom vertex, and the
    pairs involving it are dropped, giving n matchings that each leave one point
    out. The result is cached and read-only.
    """
    if n < 2:
        raise TooFewPoints("a matching schedule needs n >= 2")
    m = n if n % 2 == 0 else n + 1
    fixed = m - 1
    r = np.arange(m - 1)[:, None]
    i = np.arange(1, m // 2)[None, :]
    left = (r + i) % (m - 1)
    right = (r - i) % (m - 1)
    rotating = np.stack([left, right], axis=2)
    if m == n:
        anchor = np.stack([r[:, 0], np.full(m - 1, fixed)], axis=1)[:, None, :]
        matchings = np.concatenate([anchor, rotating], axis=1)
    else:
        # the anchor pair is the one holding the phantom vertex
        matchings = rotating
    matchings = np.ascontiguousarray(matchings, dtype=np.int64)
    matchings.setflags(write=False)
    return MatchingSchedule(n, matchings)


@dataclass(frozen=True, eq=False)
class PairwiseEstimates:
    z25: np.ndarray
    z75: np.ndarray
    k: int
    n: int

    def at(self, x_new: float) -> np.ndarray:
        """Pairwise estimates at another x_new (linear in x_new)."""
        return self.z25 + (self.z75 - self.z25) * (x_new - X_LOW) / (X_HIGH - X_LOW)


def _pair_estimates(x, y, j, l, x_new):
    dx = x[l] - x[j]
    keep = dx != 0
    j, l, dx = j[keep], l[keep], dx[keep]
    s = (y[l] - y[j]) / dx
    xm = (x[l] + x[j]) / 2
    ym = (y[l] + y[j]) / 2
    return s * (x_new - xm) + ym


def pairwise_estimates(d: Dataset, schedule: MatchingSchedule, k: int, rng) -> PairwiseEstimates:
    """Estimates from ``k`` matchings sampled without replacement.

    Vertical pairs (equal x) are skipped.
    """
    if schedule.n != d.n:
        raise InvalidValue(f"schedule is for n={schedule.n}, dataset has n={d.n}")
    if not 1 <= k <= len(schedule):
        raise InvalidValue(f"k must be in [1, {len(schedule)}], got {k}")
    g = as_generator(rng)
    chosen = g.choice(len(schedule), size=k, replace=False)
    pairs = schedule.matchings[np.sort(chosen)].reshape(-1, 2)
    j, l = pairs[:, 0], pairs[:, 1]
    z25 = _pair_estimates(d.x, d.y, j, l, X_LOW)
    z75 = _pair_estimates(d.x, d.y, j, l, X_HIGH)
    return PairwiseEstimates(z25, z75, k, d.n)


def all_pairs_estimates(d: Dataset) -> PairwiseEstimates:
    """Every unordered pair, i.e. the complete Theil-Sen estimate set."""
    j, l = np.triu_indices(d.n, k=1)
    return PairwiseEstimates(
        _pair_estimates(d.x, d.y, j, l, X_LOW),
        _pair_estimates(d.x, d.y, j, l, X_HIGH),
        d.n - 1,
        d.n,
    )


def median(z) -> float:
    """Median; midpoint of the two middle order statistics for even sizes."""
    z = np.sort(np.asarray(z, dtype=float))
    if z.size == 0:
        raise NoValidPairs("no estimates to take the median of")
    mid = z.size // 2
    if z.size % 2:
        return float(z[mid])
    return float((z[mid - 1] + z[mid]) / 2)


def theilsen_fit(estimates: PairwiseEstimates) -> PredictionPair:
    if estimates.z25.size == 0:
        raise NoValidPairs("all matched pairs share an x value")
    return PredictionPair(median(estimates.z25), median(estimates.z75))


def theilsen(d: Dataset, k: int | None = None, rng=0) -> PredictionPair:
    """Theil-Sen predictions from ``k`` matchings (all pairs when ``k`` is None)."""
    if k is None:
        return theilsen_fit(all_pairs_estimates(d))
    sched = matching_schedule(d.n)
    return theilsen_fit(pairwise_estimates(d, sched, min(k, len(sched)), rng))
