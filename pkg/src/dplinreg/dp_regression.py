"""DP simple linear regression: NoisyStats, DP Theil-Sen, DP gradient descent,
NoisyIntercept, and the (non-DP) maximum-observed-sensitivity baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    X_HIGH,
    X_LOW,
    Dataset,
    Flavor,
    PredictionPair,
    PrivacyBudget,
    as_generator,
    exact,
)
from .dp_median import (
    MedianMechParams,
    SmoothSensParams,
    exp_mech_median,
    smooth_sens_median,
    widened_exp_mech_median,
)
from .errors import EmptyFamily, InvalidBudget, InvalidRange, InvalidValue, NoValidPairs
from .estimators import matching_schedule, pairwise_estimates, sufficient_stats
from .noise import LaplaceParams, sample_gaussian, sample_laplace

DEFAULT_DELTA = 2.0**-30


@dataclass(frozen=True)
class Release:
    """Output of one DP run: the predictions (``None`` on failure) and the budget spent."""

    pair: PredictionPair | None
    spent: tuple[tuple[str, PrivacyBudget], ...] = ()

    @property
    def failed(self) -> bool:
        return self.pair is None


@dataclass(frozen=True)
class NoisyStatsOutput(Release):
    noisy_nvar: float = math.nan
    noisy_ncov: float = math.nan
    alpha_tilde: float = math.nan
    beta_tilde: float = math.nan


def _check_eps(epsilon):
    if not epsilon > 0:
        raise InvalidValue(f"epsilon must be positive, got {epsilon}")


def _half(epsilon):
    return exact(epsilon) / 2


def noisy_stats(d: Dataset, epsilon: float, rng) -> NoisyStatsOutput:
    """Laplace-perturbed sufficient statistics plugged into the OLS closed form.

    Returns a failed release when the noisy nvar(x) is not positive.
    """
    _check_eps(epsilon)
    g = as_generator(rng)
    n = d.n
    s = sufficient_stats(d)
    sens = 1.0 - 1.0 / n
    lap = LaplaceParams(0.0, 3 * sens / epsilon)
    l1 = sample_laplace(lap, g)
    l2 = sample_laplace(lap, g)
    spent = (("noisy_stats", PrivacyBudget.pure(epsilon)),)
    noisy_ncov = s.ncov + l1
    noisy_nvar = s.nvar + l2
    if not noisy_nvar > 0:
        return NoisyStatsOutput(None, spent, noisy_nvar, noisy_ncov)
    alpha = noisy_ncov / noisy_nvar
    sens3 = (1.0 + abs(alpha)) / n
    l3 = sample_laplace(LaplaceParams(0.0, 3 * sens3 / epsilon), g)
    beta = s.ybar - alpha * s.xbar + l3
    pair = PredictionPair(X_LOW * alpha + beta, X_HIGH * alpha + beta)
    return NoisyStatsOutput(pair, spent, noisy_nvar, noisy_ncov, alpha, beta)


def noisy_stats_failure_probability(d: Dataset, epsilon: float) -> float:
    """P[nvar(x) + Lap(0, 3(1 - 1/n)/eps) <= 0]."""
    b = 3 * (1 - 1 / d.n) / epsilon
    return 0.5 * math.exp(-sufficient_stats(d).nvar / b)


@dataclass(frozen=True)
class MedianVariant:
    """Which DP median DP Theil-Sen uses: ``exp``, ``wide`` or ``ss``."""

    kind: str = "exp"
    theta: float = 0.01
    d: int = 3
    beta: float = 0.5

    def __post_init__(self):
        if self.kind not in ("exp", "wide", "ss"):
            raise InvalidValue(f"unknown median variant {self.kind!r}")

    @classmethod
    def exp(cls):
        return cls("exp", theta=0.0)

    @classmethod
    def wide(cls, theta=0.01):
        return cls("wide", theta=theta)

    @classmethod
    def ss(cls, d=3, beta=0.5):
        return cls("ss", d=d, beta=beta)


def dp_median(z, epsilon, k, variant: MedianVariant, r_l, r_u, rng):
    """Release one DP median of estimates from ``k`` matchings with budget ``epsilon``.

    The exponential mechanisms run at ``epsilon / k`` (Lipschitz composition).
    The smooth-sensitivity mechanism already bounds the effect of one data
    point on ``k`` estimates, so it runs at ``epsilon`` directly.
    """
    if variant.kind == "ss":
        p = SmoothSensParams(epsilon, k=k, d=variant.d, beta=variant.beta, r_l=r_l, r_u=r_u)
        return smooth_sens_median(z, p, rng)
    p = MedianMechParams(epsilon / k, r_l=r_l, r_u=r_u,
                         theta=variant.theta if variant.kind == "wide" else 0.0)
    if variant.kind == "wide":
        return widened_exp_mech_median(z, p, rng)
    return exp_mech_median(z, p, rng)


def dp_theilsen(
    d: Dataset,
    epsilon: float,
    k: int | None = None,
    variant: MedianVariant | None = None,
    r_l: float = -0.5,
    r_u: float = 1.5,
    rng=0,
) -> Release:
    """DP Theil-Sen over ``k`` matchings; ``k=None`` uses every matching.

    Half the budget releases p25 and half releases p75.
    """
    _check_eps(epsilon)
    if not r_l < r_u:
        raise InvalidRange(f"need r_l < r_u, got [{r_l}, {r_u}]")
    variant = variant or MedianVariant.exp()
    g = as_generator(rng)
    sched = matching_schedule(d.n)
    k = len(sched) if k is None else k
    if not 1 <= k <= len(sched):
        raise InvalidValue(f"k must be in [1, {len(sched)}] for n={d.n}, got {k}")
    est = pairwise_estimates(d, sched, k, g)
    if est.z25.size == 0:
        raise NoValidPairs("every sampled pair shares an x value")
    half = _half(epsilon)
    p25 = dp_median(est.z25, float(half), k, variant, r_l, r_u, g)
    p75 = dp_median(est.z75, float(half), k, variant, r_l, r_u, g)
    spent = (
        (f"dp_theilsen[{variant.kind}].p25", PrivacyBudget.pure(half)),
        (f"dp_theilsen[{variant.kind}].p75", PrivacyBudget.pure(half)),
    )
    return Release(PredictionPair(p25, p75), spent)


def zcdp_to_approx_epsilon(rho: float, delta: float) -> float:
    """epsilon such that rho-zCDP implies (epsilon, delta)-DP."""
    log_term = math.log(math.sqrt(math.pi * rho) / delta)
    return rho + math.sqrt(4 * rho * max(log_term, 0.0))


def approx_to_zcdp(epsilon: float, delta: float) -> float:
    """Largest rho whose (epsilon, delta) guarantee is within ``epsilon``, by bisection."""
    if not epsilon > 0:
        raise InvalidBudget(f"epsilon must be positive, got {epsilon}")
    if not 0 < delta < 1:
        raise InvalidBudget(f"delta must lie in (0, 1), got {delta}")
    lo = delta * delta / math.pi
    hi = max(epsilon, lo)
    while zcdp_to_approx_epsilon(hi, delta) < epsilon:
        hi *= 2
    if zcdp_to_approx_epsilon(lo, delta) >= epsilon:
        return lo
    # bisect down to adjacent floats
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if zcdp_to_approx_epsilon(mid, delta) <= epsilon:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class GradDescentParams:
    T: int = 80
    tau: float = 1.0
    init: PredictionPair = field(default_factory=lambda: PredictionPair(0.5, 0.5))

    def __post_init__(self):
        if self.T < 2 or self.T % 2:
            raise InvalidValue(f"T must be even and at least 2, got {self.T}")
        if not self.tau > 0:
            raise InvalidValue(f"tau must be positive, got {self.tau}")


def clipped_directions(p25: float, p75: float, x: np.ndarray, y: np.ndarray, tau: float) -> np.ndarray:
    """Per-point update directions, shape ``(n, 2)``.

    Unclipped, each row is minus one half of the gradient of
    ``(y_i - yhat_i)**2`` with respect to ``(p25, p75)``.
    """
    yhat = 2 * (p25 * (0.75 - x) + p75 * (x - 0.25))
    r = y - yhat
    g = np.stack([2 * r * (0.75 - x), 2 * r * (x - 0.25)], axis=1)
    return np.clip(g, -tau, tau)


def dp_grad_descent(
    d: Dataset,
    budget: PrivacyBudget,
    params: GradDescentParams | None = None,
    rng=0,
    step: str = "coordinate",
) -> Release:
    """Noisy full-batch gradient descent on the (p25, p75) parameterisation.

    Pure budgets use Laplace noise, zCDP budgets use Gaussian noise, and
    approximate budgets are converted to zCDP first. ``step`` selects the
    AdaGrad-style per-coordinate step (default) or a scalar-norm step.
    """
    params = params or GradDescentParams()
    if step not in ("coordinate", "norm"):
        raise InvalidValue(f"unknown step rule {step!r}")
    T, tau = params.T, params.tau
    flavor = budget.flavor
    if flavor is Flavor.PURE:
        if not budget.epsilon > 0:
            raise InvalidBudget("pure DP gradient descent needs epsilon > 0")
        eps_t = float(budget.epsilon) / T
        spent = tuple(
            (f"dpgd_pure[{t}]", PrivacyBudget.pure(exact(budget.epsilon) / T)) for t in range(T)
        )
    else:
        if flavor is Flavor.APPROX:
            if not budget.delta > 0:
                raise InvalidBudget("approximate DP needs delta > 0")
            rho = approx_to_zcdp(float(budget.epsilon), float(budget.delta))
            spent = (("dpgd_approx", budget),)
        else:
            if not budget.rho > 0:
                raise InvalidBudget("zCDP needs rho > 0")
            rho = float(budget.rho)
            spent = tuple(
                (f"dpgd_zcdp[{t}]", PrivacyBudget.zcdp(exact(budget.rho) / T)) for t in range(T)
            )
        sigma = 2 * tau / math.sqrt(rho / T)

    g = as_generator(rng)
    x, y = d.x, d.y
    p = np.array([params.init.p25, params.init.p75], dtype=float)
    acc = np.zeros(2)
    iterates = np.empty((T, 2))
    for t in range(T):
        iterates[t] = p
        delta = clipped_directions(p[0], p[1], x, y, tau).sum(axis=0)
        if flavor is Flavor.PURE:
            delta = delta + sample_laplace(LaplaceParams(0.0, 4 * tau / eps_t), g, size=2)
        else:
            delta = delta + sample_gaussian(0.0, sigma, g, size=2)
        if step == "coordinate":
            acc += delta**2
            gamma = np.divide(1.0, np.sqrt(acc), out=np.zeros(2), where=acc > 0)
        else:
            acc += float(delta @ delta)
            gamma = 1.0 / math.sqrt(acc[0]) if acc[0] > 0 else 0.0
        # ascend along delta: it points down the squared loss
        p = p + gamma * delta
    avg = iterates[T // 2:].mean(axis=0)
    return Release(PredictionPair(float(avg[0]), float(avg[1])), spent)


def noisy_intercept(d: Dataset, epsilon: float, rng) -> Release:
    """Noisy mean of y released as both predictions."""
    _check_eps(epsilon)
    ybar = math.fsum(d.y) / d.n
    yt = ybar + sample_laplace(LaplaceParams(0.0, 1.0 / (epsilon * d.n)), rng)
    return Release(PredictionPair(yt, yt), (("noisy_intercept", PrivacyBudget.pure(epsilon)),))


# -- maximum observed sensitivity (heuristic, not differentially private) --

GRID = np.linspace(0.0, 1.0, 11)


@dataclass(frozen=True)
class TractFamily:
    tracts: tuple[tuple[str, Dataset], ...]
    state_id: str = "state"

    def __post_init__(self):
        object.__setattr__(self, "tracts", tuple(self.tracts))

    def __len__(self):
        return len(self.tracts)


@dataclass(frozen=True)
class TractRelease:
    tract_id: str
    pair: PredictionPair | None
    eligible: bool
    local_sensitivity: tuple[float, float] = (math.nan, math.nan)

    @property
    def suppressed(self) -> bool:
        return self.pair is None


@dataclass(frozen=True)
class MosRelease:
    tracts: tuple[TractRelease, ...]
    mos: tuple[float, float]
    spent: tuple[tuple[str, PrivacyBudget], ...]

    def by_id(self) -> dict[str, TractRelease]:
        return {t.tract_id: t for t in self.tracts}


def grid_sensitivity(d: Dataset) -> tuple[float, float]:
    """Largest change in the OLS (p25, p75) from adding one 11x11 grid point."""
    n = d.n
    sx, sy = d.x.sum(), d.y.sum()
    sxx, sxy = (d.x * d.x).sum(), (d.x * d.y).sum()

    def preds(n, sx, sy, sxx, sxy):
        nvar = sxx - sx * sx / n
        ncov = sxy - sx * sy / n
        a = ncov / nvar
        b = sy / n - a * sx / n
        return a * X_LOW + b, a * X_HIGH + b

    base25, base75 = preds(n, sx, sy, sxx, sxy)
    gx, gy = np.meshgrid(GRID, GRID, indexing="ij")
    gx, gy = gx.ravel(), gy.ravel()
    new25, new75 = preds(n + 1, sx + gx, sy + gy, sxx + gx * gx, sxy + gx * gy)
    return float(np.max(np.abs(new25 - base25))), float(np.max(np.abs(new75 - base75)))


def mos_eligible(d: Dataset, state_median: float) -> bool:
    if d.n < 20:
        return False
    above = np.mean(d.x > state_median)
    below = np.mean(d.x < state_median)
    return bool(above >= 0.1 and below >= 0.1 and sufficient_stats(d).nvar > 0)


def mos_release(family: TractFamily, epsilon: float, rng) -> MosRelease:
    """Release OLS predictions per tract with Laplace noise scaled by the state-wide
    maximum of n * (grid-observed local sensitivity).

    Ineligible tracts are suppressed. This is the heuristic baseline; it is
    not differentially private.
    """
    if len(family) == 0:
        raise EmptyFamily("tract family is empty")
    _check_eps(epsilon)
    g = as_generator(rng)
    state_median = float(np.median(np.concatenate([d.x for _, d in family.tracts])))
    info = []
    for tid, d in family.tracts:
        if mos_eligible(d, state_median):
            info.append((tid, d, grid_sensitivity(d)))
        else:
            info.append((tid, d, None))
    scaled = [(d.n * ls[0], d.n * ls[1]) for _, d, ls in info if ls is not None]
    mos = (max(s[0] for s in scaled), max(s[1] for s in scaled)) if scaled else (math.nan, math.nan)
    eps_cell = epsilon / 2
    out = []
    for tid, d, ls in info:
        if ls is None:
            out.append(TractRelease(tid, None, False))
            continue
        s = sufficient_stats(d)
        a = s.ncov / s.nvar
        b = s.ybar - a * s.xbar
        n25 = sample_laplace(LaplaceParams(0.0, max(mos[0], 1e-300) / (d.n * eps_cell)), g)
        n75 = sample_laplace(LaplaceParams(0.0, max(mos[1], 1e-300) / (d.n * eps_cell)), g)
        pair = PredictionPair(a * X_LOW + b + n25, a * X_HIGH + b + n75)
        out.append(TractRelease(tid, pair, True, ls))
    half = _half(epsilon)
    spent = (
        ("mos.p25 (heuristic, not DP)", PrivacyBudget.pure(half)),
        ("mos.p75 (heuristic, not DP)", PrivacyBudget.pure(half)),
    )
    return MosRelease(tuple(out), mos, spent)


def mos_noise_scales(release: MosRelease, family: TractFamily, epsilon: float) -> dict[str, tuple[float, float]]:
    sizes = {tid: d.n for tid, d in family.tracts}
    return {
        t.tract_id: (release.mos[0] / (sizes[t.tract_id] * epsilon / 2),
                     release.mos[1] / (sizes[t.tract_id] * epsilon / 2))
        for t in release.tracts
        if t.eligible
    }


def record(ledger, releases: Sequence[Release]):
    """Fold the spends of several releases into ``ledger``."""
    for r in releases:
        ledger = ledger.record(r.spent)
    return ledger
