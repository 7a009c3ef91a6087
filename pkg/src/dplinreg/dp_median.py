"""Differentially private medians used inside DP Theil-Sen.

All mechanisms here take the *already divided* privacy parameter: the caller
applies the k-fold Lipschitz split (and the p25/p75 split) before calling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import as_generator
from .errors import EmptyInput, InvalidRange, InvalidValue
from .estimators import median
from .noise import StudentsTParams, open_uniform, sample_gumbel, sample_students_t


@dataclass(frozen=True)
class MedianMechParams:
    epsilon: float
    r_l: float = -0.5
    r_u: float = 1.5
    theta: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidValue(f"epsilon must be positive, got {self.epsilon}")
        if not self.r_l < self.r_u:
            raise InvalidRange(f"need r_l < r_u, got [{self.r_l}, {self.r_u}]")
        if not self.theta >= 0:
            raise InvalidValue(f"theta must be non-negative, got {self.theta}")


@dataclass(frozen=True)
class SmoothSensParams:
    epsilon: float
    k: int = 1
    d: int = 3
    beta: float = 0.5
    r_l: float = -0.5
    r_u: float = 1.5

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidValue(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.beta < 1:
            raise InvalidValue(f"beta must lie in (0, 1), got {self.beta}")
        if not self.r_l < self.r_u:
            raise InvalidRange(f"need r_l < r_u, got [{self.r_l}, {self.r_u}]")
        StudentsTParams(self.d)

    @property
    def t(self) -> float:
        return self.beta * self.epsilon / (self.d + 1)

    @property
    def s(self) -> float:
        return 2 * math.sqrt(self.d) * (self.epsilon - self.t * (self.d + 1)) / (self.d + 1)


def interval_weights(edges: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Log-weights of the intervals between consecutive sorted ``edges``.

    ``edges`` already includes the range endpoints. Returns ``(index, score)``
    for the intervals of positive length, where ``index`` i names the interval
    ``[edges[i-1], edges[i]]``.
    """
    n = edges.size
    i = np.arange(1, n)
    length = np.diff(edges)
    dist = np.ceil(np.abs(i - n / 2))
    keep = length > 0
    if not keep.any():
        raise InvalidRange("every candidate interval has zero length")
    score = np.log(length[keep]) - (epsilon / 2) * dist[keep]
    return i[keep], score


def _sample_intervals(edges, epsilon, rng, size):
    g = as_generator(rng)
    idx, score = interval_weights(edges, epsilon)
    shape = (1 if size is None else size, idx.size)
    noisy = score + sample_gumbel(g, size=shape)
    pick = idx[np.argmax(noisy, axis=1)]
    left, right = edges[pick - 1], edges[pick]
    out = left + (right - left) * open_uniform(g, size=pick.size)
    return float(out[0]) if size is None else out


def _prepare(z, r_l, r_u):
    z = np.asarray(z, dtype=float).ravel()
    if z.size == 0:
        raise EmptyInput("median of an empty multiset")
    return np.clip(np.sort(z), r_l, r_u)


def exp_mech_median(z, p: MedianMechParams, rng, size=None):
    """Exponential mechanism for the median, sampled by Gumbel-max over intervals."""
    z = _prepare(z, p.r_l, p.r_u)
    edges = np.concatenate(([p.r_l], z, [p.r_u]))
    return _sample_intervals(edges, p.epsilon, rng, size)


def widen(z, theta: float, r_l: float, r_u: float) -> np.ndarray:
    """Sorted, clipped estimates with the halves pushed ``theta`` away from the median.

    Even-sized inputs first get their midpoint median inserted so that a single
    central value exists.
    """
    z = _prepare(z, r_l, r_u)
    if z.size % 2 == 0:
        z = np.sort(np.append(z, median(z)))
    mid = z.size // 2
    out = z.copy()
    out[:mid] = np.maximum(r_l, z[:mid] - theta)
    out[mid + 1:] = np.minimum(r_u, z[mid + 1:] + theta)
    return out


def widened_exp_mech_median(z, p: MedianMechParams, rng, size=None):
    """θ-widened exponential mechanism; θ = 0 is the plain mechanism."""
    if p.theta == 0:
        return exp_mech_median(z, p, rng, size)
    w = widen(z, p.theta, p.r_l, p.r_u)
    edges = np.concatenate(([p.r_l], w, [p.r_u]))
    return _sample_intervals(edges, p.epsilon, rng, size)


def _smooth_sens_at(z: np.ndarray, m: int, k: int, t: float, r_l: float, r_u: float) -> float:
    # z is sorted; m is a 1-based index. Out-of-range indices read as r_l / r_u.
    N = z.size
    padded = np.concatenate(([r_l], z, [r_u]))

    def at(idx):
        return padded[np.clip(idx, 0, N + 1)]

    best = 0.0
    l = 0
    while True:
        w = k * (l + 1)
        s = np.arange(w + 1)
        window = float(np.max(at(m + s) - at(m - w + s)))
        best = max(best, math.exp(-l * t) * window)
        # once the window spans the whole padded array every later term is
        # (r_u - r_l) times a smaller decay factor
        if w >= N + 1:
            break
        l += 1
    return float(best)


def smooth_sensitivity_oracle(z, k: int, t: float, r_l: float, r_u: float) -> float:
    """Direct evaluation of max_l e^{-lt} * max_s (z[m+s] - z[m-(l+1)k+s]).

    Plain loops over every l up to n + 1, used to cross-check
    :func:`smooth_sensitivity`.
    """
    zs = sorted(min(r_u, max(r_l, float(v))) for v in z)
    N = len(zs)

    def at(i):
        if i < 1:
            return r_l
        if i > N:
            return r_u
        return zs[i - 1]

    centres = [(N + 1) // 2] if N % 2 else [N // 2, N // 2 + 1]
    best = 0.0
    for m in centres:
        for l in range(N + 2):
            w = (l + 1) * k
            for s in range(w + 1):
                best = max(best, math.exp(-l * t) * (at(m + s) - at(m - w + s)))
    return best


def smooth_sensitivity(z, k: int, t: float, r_l: float, r_u: float) -> float:
    """t-smooth upper bound on the local sensitivity of the median of estimates.

    Each data point influences up to ``k`` entries of ``z``. For even sizes the
    bound is taken over both middle order statistics, so it also covers the
    midpoint median that is released.
    """
    if not t > 0:
        raise InvalidValue(f"t must be positive, got {t}")
    z = _prepare(z, r_l, r_u)
    N = z.size
    if N % 2:
        return _smooth_sens_at(z, (N + 1) // 2, k, t, r_l, r_u)
    return max(
        _smooth_sens_at(z, N // 2, k, t, r_l, r_u),
        _smooth_sens_at(z, N // 2 + 1, k, t, r_l, r_u),
    )


def smooth_sens_median(z, p: SmoothSensParams, rng, size=None):
    """Median plus Student's-T noise scaled by the smooth sensitivity.

    The output is clipped to ``[r_l, r_u]``.
    """
    zc = _prepare(z, p.r_l, p.r_u)
    sens = smooth_sensitivity(zc, p.k, p.t, p.r_l, p.r_u)
    noise = sample_students_t(StudentsTParams(p.d), rng, size)
    out = np.clip(median(zc) + sens / p.s * noise, p.r_l, p.r_u)
    return float(out) if size is None else out
