from fractions import Fraction

import numpy as np
import pytest

from dplinreg.core import (
    BudgetLedger,
    DataPoint,
    Dataset,
    Flavor,
    PredictionPair,
    PrivacyBudget,
    RandomSeed,
    as_generator,
    clip_unit,
    exact,
    spend,
)
from dplinreg.errors import BudgetExceeded, InvalidBudget, InvalidValue, TooFewPoints


def test_clip_unit():
    assert clip_unit(-0.2) == 0.0
    assert clip_unit(1.7) == 1.0
    assert clip_unit(0.3) == 0.3
    with pytest.raises(InvalidValue):
        clip_unit(float("nan"))


def test_datapoint_clips():
    p = DataPoint(1.5, -1)
    assert (p.x, p.y) == (1.0, 0.0)


def test_dataset_clips_and_is_read_only():
    d = Dataset([-0.1, 0.5, 2.0], [0.2, 1.3, 0.4])
    assert d.x.tolist() == [0.0, 0.5, 1.0]
    assert d.y.tolist() == [0.2, 1.0, 0.4]
    with pytest.raises(ValueError):
        d.x[0] = 0.3


def test_dataset_strict_names_row():
    with pytest.raises(InvalidValue, match="row 2"):
        Dataset([0.1, 0.2, 0.3], [0.1, 0.2, 1.5], strict=True)


def test_dataset_validation():
    with pytest.raises(TooFewPoints):
        Dataset([0.1], [0.2])
    with pytest.raises(InvalidValue):
        Dataset([0.1, 0.2], [0.2])
    with pytest.raises(InvalidValue):
        Dataset([0.1, np.nan], [0.2, 0.3])


def test_dataset_neighbours():
    d = Dataset([0.1, 0.2, 0.3], [0.4, 0.5, 0.6])
    r = d.replace(1, 2.0, 0.9)
    assert r.x.tolist() == [0.1, 1.0, 0.3] and r.y.tolist() == [0.4, 0.9, 0.6]
    assert d.x.tolist() == [0.1, 0.2, 0.3]
    assert d.append(0.7, 0.8).n == 4
    pts = Dataset.from_points([(0.1, 0.2), DataPoint(0.3, 0.4)])
    assert pts.points == [DataPoint(0.1, 0.2), DataPoint(0.3, 0.4)]


def test_prediction_pair_line():
    p = PredictionPair(0.325, 0.575)
    assert p.at(0.25) == pytest.approx(0.325)
    assert p.at(0.75) == pytest.approx(0.575)
    assert p.at(0.0) == pytest.approx(0.2)
    assert p.at(1.0) == pytest.approx(0.7)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(flavor="pure", epsilon=-1),
        dict(flavor="pure", epsilon=1, delta=0.1),
        dict(flavor="approx", epsilon=1, delta=0),
        dict(flavor="approx", epsilon=1, delta=1.5),
        dict(flavor="zcdp", rho=0),
        dict(flavor="pure", epsilon=float("nan")),
    ],
)
def test_budget_validation(kwargs):
    with pytest.raises(InvalidBudget):
        PrivacyBudget(**kwargs)


def test_budget_constructors():
    assert PrivacyBudget.pure(1).flavor is Flavor.PURE
    assert PrivacyBudget.approx(1, 1e-6).delta == 1e-6
    assert PrivacyBudget.zcdp(0.5).to_dict() == {"flavor": "zcdp", "epsilon": 0.0, "delta": 0.0, "rho": 0.5}


def test_ledger_thirds_sum_exactly():
    ledger = BudgetLedger(PrivacyBudget.pure(1))
    for i in range(3):
        ledger = ledger.spend(f"part{i}", PrivacyBudget.pure(1 / 3))
    assert ledger.spent()[0] == 1
    assert ledger.remaining()[0] == 0
    with pytest.raises(BudgetExceeded):
        ledger.spend("extra", PrivacyBudget.pure(1e-9))


def test_ledger_is_immutable_and_serialises():
    base = BudgetLedger(PrivacyBudget.approx(2, 1e-5))
    after = spend(base, "a", PrivacyBudget.approx(1, 5e-6), "first")
    assert base.entries == () and len(after.entries) == 1
    d = after.to_dict()
    assert d["spent"] == {"epsilon": 1.0, "delta": 5e-6, "rho": 0.0}
    assert d["entries"][0]["note"] == "first"
    assert BudgetLedger(base.total, after.entries).spent() == after.spent()


def test_ledger_checks_every_component():
    ledger = BudgetLedger(PrivacyBudget.approx(1, 1e-6))
    with pytest.raises(BudgetExceeded, match="delta"):
        ledger.spend("d", PrivacyBudget.approx(0.5, 2e-6))
    with pytest.raises(BudgetExceeded, match="rho"):
        ledger.spend("r", PrivacyBudget.zcdp(0.1))


def test_exact():
    assert exact(0.1) == Fraction(1, 10)
    assert exact(Fraction(1, 3)) == Fraction(1, 3)
    assert exact(3) == 3


def test_seed_streams_are_reproducible_and_distinct():
    a = RandomSeed(7, 0).generator().random(5)
    b = RandomSeed(7, 0).generator().random(5)
    c = RandomSeed(7, 1).generator().random(5)
    d = RandomSeed(8, 0).generator().random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_seed_spawn():
    s = RandomSeed(3)
    assert s.spawn("x", 1) == s.spawn("x", 1)
    assert s.spawn("x", 1) != s.spawn("x", 2)
    assert s.spawn("x").seed == 3
    with pytest.raises(InvalidValue):
        RandomSeed(-1)
    with pytest.raises(InvalidValue):
        RandomSeed(2**64)


def test_as_generator():
    g = np.random.default_rng(0)
    assert as_generator(g) is g
    assert as_generator(5).random() == RandomSeed(5).generator().random()
    with pytest.raises(TypeError):
        as_generator("seed")
