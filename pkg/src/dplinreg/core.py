"""Domain types, privacy-budget accounting and the seeded randomness contract."""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded, InvalidBudget, InvalidValue, TooFewPoints

# Floats are snapped to the nearest rational with a bounded denominator before
# accumulation, so 1/3 + 1/3 + 1/3 sums to exactly 1.
_MAX_DENOMINATOR = 10**12

X_LOW, X_HIGH = 0.25, 0.75


def clip_unit(v: float) -> float:
    """Clamp ``v`` to the unit interval."""
    if v is None or math.isnan(v):
        raise InvalidValue(f"cannot clip non-numeric value {v!r}")
    return min(1.0, max(0.0, float(v)))


@dataclass(frozen=True)
class DataPoint:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", clip_unit(self.x))
        object.__setattr__(self, "y", clip_unit(self.y))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Paired observations on the unit square.

    Coordinates are clipped to [0, 1] on construction unless ``strict`` is set,
    in which case out-of-range values raise :class:`InvalidValue`.
    """

    x: np.ndarray
    y: np.ndarray
    strict: bool = field(default=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise InvalidValue(f"x and y lengths differ: {x.size} != {y.size}")
        if x.size < 2:
            raise TooFewPoints(f"a dataset needs at least 2 points, got {x.size}")
        if np.isnan(x).any() or np.isnan(y).any():
            raise InvalidValue("dataset contains NaN")
        if self.strict:
            bad = np.flatnonzero((x < 0) | (x > 1) | (y < 0) | (y > 1))
            if bad.size:
                raise InvalidValue(f"value outside [0, 1] at row {int(bad[0])}")
        x = np.clip(x, 0.0, 1.0)
        y = np.clip(y, 0.0, 1.0)
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_points(cls, points: Iterable, strict: bool = False) -> "Dataset":
        pts = [(p.x, p.y) if isinstance(p, DataPoint) else tuple(p) for p in points]
        if not pts:
            raise TooFewPoints("empty dataset")
        arr = np.asarray(pts, dtype=float)
        return cls(arr[:, 0], arr[:, 1], strict=strict)

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def points(self) -> list[DataPoint]:
        return [DataPoint(a, b) for a, b in zip(self.x, self.y)]

    def __len__(self):
        return self.n

    def replace(self, index: int, x: float, y: float) -> "Dataset":
        """Neighbouring dataset with row ``index`` swapped for ``(x, y)``."""
        xs, ys = self.x.copy(), self.y.copy()
        xs[index], ys[index] = x, y
        return Dataset(xs, ys)

    def append(self, x: float, y: float) -> "Dataset":
        return Dataset(np.append(self.x, x), np.append(self.y, y))


@dataclass(frozen=True)
class PredictionPair:
    """Predicted responses at x_new = 0.25 and x_new = 0.75."""

    p25: float
    p75: float

    def at(self, x_new: float) -> float:
        """Value of the line through both predictions at ``x_new``."""
        slope = (self.p75 - self.p25) / (X_HIGH - X_LOW)
        return self.p25 + slope * (x_new - X_LOW)

    def as_tuple(self) -> tuple[float, float]:
        return (self.p25, self.p75)


class Flavor(str, enum.Enum):
    PURE = "pure"
    APPROX = "approx"
    ZCDP = "zcdp"


def exact(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    return Fraction(float(v)).limit_denominator(_MAX_DENOMINATOR)


@dataclass(frozen=True)
class PrivacyBudget:
    flavor: Flavor
    epsilon: Real = 0
    delta: Real = 0
    rho: Real = 0

    def __post_init__(self):
        object.__setattr__(self, "flavor", Flavor(self.flavor))
        for name in ("epsilon", "delta", "rho"):
            v = getattr(self, name)
            if v is None or math.isnan(v) or v < 0:
                raise InvalidBudget(f"{name} must be non-negative, got {v!r}")
        if self.delta > 1:
            raise InvalidBudget(f"delta must be at most 1, got {self.delta}")
        if self.flavor is Flavor.PURE and self.delta != 0:
            raise InvalidBudget("pure DP requires delta = 0")
        if self.flavor is Flavor.APPROX and not self.delta > 0:
            raise InvalidBudget("approximate DP requires delta > 0")
        if self.flavor is Flavor.ZCDP and not self.rho > 0:
            raise InvalidBudget("zCDP requires rho > 0")

    @classmethod
    def pure(cls, epsilon) -> "PrivacyBudget":
        return cls(Flavor.PURE, epsilon=epsilon)

    @classmethod
    def approx(cls, epsilon, delta) -> "PrivacyBudget":
        return cls(Flavor.APPROX, epsilon=epsilon, delta=delta)

    @classmethod
    def zcdp(cls, rho) -> "PrivacyBudget":
        return cls(Flavor.ZCDP, rho=rho)

    def to_dict(self) -> dict:
        return {
            "flavor": self.flavor.value,
            "epsilon": float(self.epsilon),
            "delta": float(self.delta),
            "rho": float(self.rho),
        }


@dataclass(frozen=True)
class LedgerEntry:
    name: str
    amount: PrivacyBudget
    note: str = ""


@dataclass(frozen=True)
class BudgetLedger:
    """Basic-composition accounting. Updates return a new ledger."""

    total: PrivacyBudget
    entries: tuple[LedgerEntry, ...] = ()
    _spent: tuple[Fraction, Fraction, Fraction] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if self._spent is None:
            totals = (Fraction(0),) * 3
            for e in self.entries:
                totals = _add(totals, e.amount)
            object.__setattr__(self, "_spent", totals)

    def spent(self) -> tuple[Fraction, Fraction, Fraction]:
        return self._spent

    def remaining(self) -> tuple[Fraction, Fraction, Fraction]:
        eps, delta, rho = self.spent()
        t = self.total
        return exact(t.epsilon) - eps, exact(t.delta) - delta, exact(t.rho) - rho

    def spend(self, name: str, amount: PrivacyBudget, note: str = "") -> "BudgetLedger":
        return spend(self, name, amount, note)

    def record(self, spends: Sequence[tuple[str, PrivacyBudget]]) -> "BudgetLedger":
        ledger = self
        for name, amount in spends:
            ledger = spend(ledger, name, amount)
        return ledger

    def to_dict(self) -> dict:
        eps, delta, rho = self.spent()
        return {
            "total": self.total.to_dict(),
            "spent": {"epsilon": float(eps), "delta": float(delta), "rho": float(rho)},
            "entries": [
                {"name": e.name, **e.amount.to_dict(), "note": e.note} for e in self.entries
            ],
        }


def _add(totals, amount: PrivacyBudget):
    return (
        totals[0] + exact(amount.epsilon),
        totals[1] + exact(amount.delta),
        totals[2] + exact(amount.rho),
    )


def spend(ledger: BudgetLedger, name: str, amount: PrivacyBudget, note: str = "") -> BudgetLedger:
    """Append a spend, refusing any that would overrun the ledger total."""
    after = _add(ledger.spent(), amount)
    t = ledger.total
    caps = (exact(t.epsilon), exact(t.delta), exact(t.rho))
    for label, a, cap in zip(("epsilon", "delta", "rho"), after, caps):
        if a > cap:
            raise BudgetExceeded(
                f"{name}: cumulative {label} {float(a):g} would exceed total {float(cap):g}"
            )
    entries = ledger.entries + (LedgerEntry(name, amount, note),)
    return BudgetLedger(ledger.total, entries, after)


def _stream_key(parent: int, keys: Sequence) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(repr((parent, tuple(keys))).encode())
    return int.from_bytes(h.digest(), "little") >> 1


@dataclass(frozen=True)
class RandomSeed:
    """Identifies one independent random stream.

    The same ``(seed, stream_index)`` always yields the same sample sequence.
    """

    seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise InvalidValue(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.stream_index < 0:
            raise InvalidValue("stream_index must be non-negative")

    def spawn(self, *keys) -> "RandomSeed":
        """Child stream for a logical consumer named by ``keys``."""
        return RandomSeed(self.seed, _stream_key(self.stream_index, keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept a :class:`RandomSeed`, an int seed or a ready Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomSeed):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RandomSeed(int(rng)).generator()
    raise TypeError(f"expected RandomSeed, int or numpy Generator, got {type(rng).__name__}")
