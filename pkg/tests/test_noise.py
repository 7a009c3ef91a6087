import numpy as np
import pytest
from scipy import stats

from dplinreg.core import RandomSeed
from dplinreg.errors import InvalidValue
from dplinreg.noise import (
    LaplaceParams,
    StudentsTParams,
    open_uniform,
    sample_exponential,
    sample_gaussian,
    sample_gumbel,
    sample_laplace,
    sample_students_t,
    sample_uniform,
)

N = 50_000


def ks_ok(sample, cdf, alpha=1e-3):
    return stats.kstest(sample, cdf).pvalue > alpha


def test_open_uniform_open_interval():
    u = open_uniform(1, size=N)
    assert u.min() > 0 and u.max() < 1
    assert ks_ok(u, "uniform")


def test_laplace_distribution():
    p = LaplaceParams(0.3, 2.0)
    x = sample_laplace(p, RandomSeed(1), size=N)
    assert ks_ok(x, stats.laplace(loc=0.3, scale=2.0).cdf)


def test_gumbel_distribution():
    assert ks_ok(sample_gumbel(2, size=N), stats.gumbel_r.cdf)


def test_students_t_distribution():
    x = sample_students_t(StudentsTParams(3), 3, size=N)
    assert ks_ok(x, stats.t(3).cdf)


def test_uniform_gaussian_exponential():
    assert ks_ok(sample_uniform(-1, 3, 4, size=N), stats.uniform(-1, 4).cdf)
    assert ks_ok(sample_gaussian(1.0, 0.5, 5, size=N), stats.norm(1.0, 0.5).cdf)
    assert ks_ok(sample_exponential(52.0, 6, size=N), stats.expon(scale=52).cdf)


def test_scalar_and_array_shapes():
    assert isinstance(sample_laplace(LaplaceParams(), 0), float)
    assert isinstance(sample_gumbel(0), float)
    assert isinstance(sample_students_t(StudentsTParams(), 0), float)
    assert sample_gaussian(0, 1, 0, size=(2, 3)).shape == (2, 3)


def test_same_seed_same_draws():
    a = sample_laplace(LaplaceParams(), RandomSeed(9, 4), size=10)
    b = sample_laplace(LaplaceParams(), RandomSeed(9, 4), size=10)
    assert np.array_equal(a, b)


@pytest.mark.parametrize(
    "call",
    [
        lambda: LaplaceParams(0, 0),
        lambda: StudentsTParams(0),
        lambda: StudentsTParams(2.5),
        lambda: sample_uniform(1, 1, 0),
        lambda: sample_gaussian(0, -1, 0),
        lambda: sample_exponential(0, 0),
    ],
)
def test_invalid_parameters(call):
    with pytest.raises(InvalidValue):
        call()
