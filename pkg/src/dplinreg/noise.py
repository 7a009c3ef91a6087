"""Seeded samplers for the noise distributions used by the mechanisms.

Every sampler takes its randomness from ``rng`` (a :class:`~dplinreg.core.RandomSeed`,
an int or a numpy ``Generator``) and returns a float, or an array when ``size``
is given.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_generator
from .errors import InvalidValue


@dataclass(frozen=True)
class LaplaceParams:
    location: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise InvalidValue(f"Laplace scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class StudentsTParams:
    d: int = 3

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise InvalidValue(f"degrees of freedom must be a positive integer, got {self.d}")


def _out(a, size):
    return float(a) if size is None else a


def open_uniform(rng, size=None):
    """Uniform draws on the open interval (0, 1)."""
    g = as_generator(rng)
    k = g.integers(0, 2**53, size=size, dtype=np.int64)
    return _out((k + 0.5) * 2.0**-53, size)


def sample_laplace(p: LaplaceParams, rng, size=None):
    u = open_uniform(rng, size) - 0.5
    draw = p.location - p.scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    return _out(draw, size)


def sample_gumbel(rng, size=None):
    """Standard Gumbel(0, 1)."""
    u = open_uniform(rng, size)
    return _out(-np.log(-np.log(u)), size)


def sample_students_t(p: StudentsTParams, rng, size=None):
    g = as_generator(rng)
    z = g.standard_normal(size)
    chi2 = g.chisquare(p.d, size)
    return _out(z / np.sqrt(chi2 / p.d), size)


def sample_uniform(lo: float, hi: float, rng, size=None):
    if not hi > lo:
        raise InvalidValue(f"uniform needs hi > lo, got [{lo}, {hi}]")
    u = open_uniform(rng, size)
    return _out(lo + (hi - lo) * u, size)


def sample_gaussian(mu: float, sigma: float, rng, size=None):
    if not sigma >= 0:
        raise InvalidValue(f"sigma must be non-negative, got {sigma}")
    g = as_generator(rng)
    return _out(mu + sigma * g.standard_normal(size), size)


def sample_exponential(scale: float, rng, size=None):
    if not scale > 0:
        raise InvalidValue(f"exponential scale must be positive, got {scale}")
    u = open_uniform(rng, size)
    return _out(-scale * np.log(u), size)
