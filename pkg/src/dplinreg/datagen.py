"""Synthetic data: the uniform-x linear model and a simulator for census-tract
income-rank data. Also CSV reading and writing for datasets."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .core import Dataset, PredictionPair, X_HIGH, X_LOW, RandomSeed, as_generator
from .dp_regression import TractFamily
from .errors import InvalidValue, ParseError
from .noise import sample_exponential, sample_gaussian, sample_uniform


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    sigma_x2: float
    sigma_e2: float
    alpha: float = 0.5
    beta: float = 0.2
    xbar: float = 0.5

    def __post_init__(self):
        if self.n < 2:
            raise InvalidValue(f"n must be at least 2, got {self.n}")
        if not self.sigma_x2 > 0:
            raise InvalidValue(f"sigma_x2 must be positive, got {self.sigma_x2}")
        if not self.sigma_e2 >= 0:
            raise InvalidValue(f"sigma_e2 must be non-negative, got {self.sigma_e2}")

    @property
    def half_width(self) -> float:
        return math.sqrt(3 * self.sigma_x2)

    @property
    def truth(self) -> PredictionPair:
        return PredictionPair(self.alpha * X_LOW + self.beta, self.alpha * X_HIGH + self.beta)

    def prediction_sd(self, x_new: float = X_LOW) -> float:
        """Sampling standard deviation of the OLS prediction at ``x_new`` under this model."""
        return math.sqrt(self.sigma_e2) * math.sqrt(
            1 / self.n + (x_new - self.xbar) ** 2 / (self.n * self.sigma_x2)
        )


class SyntheticSample(NamedTuple):
    dataset: Dataset
    truth: PredictionPair
    clipped_fraction: float


def gen_synthetic(spec: SyntheticSpec, seed) -> SyntheticSample:
    """x uniform with the given mean and variance, y = alpha x + beta + N(0, sigma_e2),
    both clipped to [0, 1]. The truth is taken before clipping."""
    lo, hi = spec.xbar - spec.half_width, spec.xbar + spec.half_width
    if lo < 0 or hi > 1:
        warnings.warn(
            f"x support [{lo:.3f}, {hi:.3f}] leaves [0, 1]; values will be clipped",
            stacklevel=2,
        )
    g = as_generator(seed)
    x = sample_uniform(lo, hi, g, size=spec.n)
    e = sample_gaussian(0.0, math.sqrt(spec.sigma_e2), g, size=spec.n)
    y = spec.alpha * x + spec.beta + e
    outside = (x < 0) | (x > 1) | (y < 0) | (y > 1)
    return SyntheticSample(Dataset(x, y), spec.truth, float(outside.mean()))


# -- census-tract simulator --

TRACT_SIZE_SCALE = 52.0
TRACT_SIZE_MIN = 20
CHILD_NOISE_SD = 0.20


@dataclass(frozen=True)
class TractSpec:
    """Public inputs for one simulated tract.

    ``mu`` is the mean parent income and ``var_mu`` the sampling variance of
    that mean; the within-tract income variance is ``4 * var_mu``.
    """

    mu: float
    alpha_tm: float
    beta_tm: float
    var_mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidValue(f"mu must be positive, got {self.mu}")
        if not self.var_mu > 0:
            raise InvalidValue(f"var_mu must be positive, got {self.var_mu}")

    @property
    def income_variance(self) -> float:
        return 4 * self.var_mu

    @property
    def log_income_mean(self) -> float:
        return 2 * math.log(self.mu) - 0.5 * math.log(self.income_variance + self.mu**2)

    @property
    def log_income_variance(self) -> float:
        return -2 * math.log(self.mu) + math.log(self.income_variance + self.mu**2)


def sample_tract_size(rng, size=None):
    draw = sample_exponential(TRACT_SIZE_SCALE, rng, size) + TRACT_SIZE_MIN
    return int(math.floor(draw)) if size is None else np.floor(draw).astype(np.int64)


def sample_log_parent_income(spec: TractSpec, n: int, rng) -> np.ndarray:
    return sample_gaussian(spec.log_income_mean, math.sqrt(spec.log_income_variance), rng, size=n)


def sample_tract_incomes(spec: TractSpec, rng) -> tuple[np.ndarray, np.ndarray]:
    """(parent income, child income) for a tract of random size."""
    g = as_generator(rng)
    n = sample_tract_size(g)
    log_parent = sample_log_parent_income(spec, n, g)
    log_child = spec.alpha_tm + spec.beta_tm * log_parent + sample_gaussian(0.0, CHILD_NOISE_SD, g, size=n)
    return np.exp(log_parent), np.exp(log_child)


def percentile_ranks(values: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Share of ``reference`` at or below each value, rounded up to 2 decimals."""
    ref = np.sort(reference)
    share = np.searchsorted(ref, values, side="right") / ref.size
    # the small offset stops exact hundredths from being pushed up by float noise
    return np.minimum(1.0, np.ceil(share * 100 - 1e-9) / 100)


def gen_oi_tract(spec: TractSpec, seed) -> Dataset:
    """A lone tract with ranks computed within the tract itself."""
    parent, child = sample_tract_incomes(spec, seed)
    return Dataset(percentile_ranks(parent, parent), percentile_ranks(child, child))


def default_tract_specs(count: int, seed) -> list[TractSpec]:
    """Plausible public inputs for ``count`` tracts in one state.

    Tract mean incomes are lognormal around 60,000; ``var_mu`` is the
    between-tract variance of those means, so within-tract spread is twice
    the between-tract spread. The log-log slope varies between 0.2 and 0.6
    and the intercept keeps child incomes on the parent scale.
    """
    if count < 1:
        raise InvalidValue(f"need at least one tract, got {count}")
    g = as_generator(seed)
    mus = np.exp(sample_gaussian(math.log(60_000), 0.35, g, size=count))
    var_mu = float(np.var(mus)) if count > 1 else float((0.35 * mus[0]) ** 2)
    slopes = sample_uniform(0.2, 0.6, g, size=count)
    shifts = sample_gaussian(0.0, 0.1, g, size=count)
    return [
        TractSpec(float(mu), float((1 - b) * math.log(mu) + s), float(b), var_mu)
        for mu, b, s in zip(mus, slopes, shifts)
    ]


def gen_oi_family(specs: Sequence[TractSpec], seed, state_id: str = "state") -> TractFamily:
    """Tracts ranked against the pooled state distribution of parents and of children."""
    root = seed if isinstance(seed, RandomSeed) else RandomSeed(int(seed))
    raw = [sample_tract_incomes(s, root.spawn("tract", i)) for i, s in enumerate(specs)]
    parents = np.concatenate([p for p, _ in raw])
    children = np.concatenate([c for _, c in raw])
    tracts = tuple(
        (f"{state_id}-t{i:04d}", Dataset(percentile_ranks(p, parents), percentile_ranks(c, children)))
        for i, (p, c) in enumerate(raw)
    )
    return TractFamily(tracts, state_id)


# -- CSV interchange --

def read_dataset_csv(path, strict: bool = False) -> Dataset:
    """Read a two-column ``x,y`` CSV with a header row.

    Malformed numbers raise :class:`ParseError` with the 1-based line and
    column. With ``strict``, values outside [0, 1] are errors instead of being
    clipped.
    """
    path = Path(path)
    xs, ys = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path}: empty file", line=1)
        if [h.strip().lower() for h in header] != ["x", "y"]:
            raise ParseError(f"{path}: expected header 'x,y', got {','.join(header)!r}", line=1)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}: expected 2 fields, got {len(row)}", line=line)
            vals = []
            for col, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"{path}: not a number: {cell.strip()!r}", line=line, column=col) from None
                if math.isnan(v):
                    raise ParseError(f"{path}: NaN value", line=line, column=col)
                if strict and not 0 <= v <= 1:
                    raise ParseError(f"{path}: value {v} outside [0, 1]", line=line, column=col)
                vals.append(v)
            xs.append(vals[0])
            ys.append(vals[1])
    if len(xs) < 2:
        raise ParseError(f"{path}: need at least 2 data rows, got {len(xs)}")
    return Dataset(np.array(xs), np.array(ys))


def write_dataset_csv(d: Dataset, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y"])
        for a, b in zip(d.x, d.y):
            w.writerow([repr(float(a)), repr(float(b))])
