import math

import numpy as np
import pytest

from dplinreg.core import RandomSeed
from dplinreg.dp_median import (
    MedianMechParams,
    SmoothSensParams,
    exp_mech_median,
    interval_weights,
    smooth_sens_median,
    smooth_sensitivity,
    smooth_sensitivity_oracle,
    widen,
    widened_exp_mech_median,
)
from dplinreg.errors import EmptyInput, InvalidRange, InvalidValue
from dplinreg.estimators import median
from dplinreg.noise import StudentsTParams, sample_students_t
from oracles import exp_mech_interval_probs, interval_frequencies, lsss, total_variation

DRAWS = 100_000


def test_two_point_example_matches_analytic():
    z = [0.4, 0.6]
    draws = exp_mech_median(z, MedianMechParams(2.0, 0.0, 1.0), 1, size=DRAWS)
    edges, probs = exp_mech_interval_probs(z, 2.0, 0.0, 1.0)
    # weights 0.4e^-1, 0.2, 0.4e^-1
    w = np.array([0.4 * math.exp(-1), 0.2, 0.4 * math.exp(-1)])
    assert np.allclose(probs, w / w.sum())
    assert total_variation(interval_frequencies(draws, edges), probs) < 0.02


def test_huge_epsilon_picks_median_neighbours():
    z = [0.1, 0.2, 0.3, 0.4, 0.5]
    draws = exp_mech_median(z, MedianMechParams(1e6, 0.0, 1.0), 2, size=10_000)
    assert np.mean((draws >= 0.2) & (draws <= 0.4)) >= 0.999


def test_all_equal_gives_uniform_on_range():
    draws = exp_mech_median([0.5] * 9, MedianMechParams(1.0, -0.5, 1.5), 3, size=DRAWS)
    assert abs(draws.mean() - 0.5) < 0.01


def test_theta_zero_equals_plain():
    z = [0.1, 0.35, 0.4, 0.7, 0.9]
    p = MedianMechParams(2.0, 0.0, 1.0, theta=0.0)
    a = exp_mech_median(z, p, 4, size=DRAWS)
    b = widened_exp_mech_median(z, p, 5, size=DRAWS)
    edges = np.array([0.0] + z + [1.0])
    assert total_variation(interval_frequencies(a, edges), interval_frequencies(b, edges)) < 0.01


def test_widen():
    w = widen([0.5] * 4, 0.1, 0.0, 1.0)
    assert w.tolist() == pytest.approx([0.4, 0.4, 0.5, 0.6, 0.6])
    w = widen([0.05, 0.5, 0.97], 0.1, 0.0, 1.0)
    assert w.tolist() == pytest.approx([0.0, 0.5, 1.0])


def test_widened_puts_more_mass_near_median():
    z = [0.5] * 20
    plain = exp_mech_median(z, MedianMechParams(2.0, 0.0, 1.0), 6, size=DRAWS)
    wide = widened_exp_mech_median(z, MedianMechParams(2.0, 0.0, 1.0, 0.1), 7, size=DRAWS)
    near = lambda v: np.mean((v >= 0.4) & (v <= 0.6))
    assert near(wide) > near(plain)


def test_default_theta_in_variant():
    from dplinreg.dp_regression import MedianVariant

    assert MedianVariant.wide().theta == 0.01


@pytest.mark.parametrize("eps", [0.3, 1.0, 4.0])
def test_exactness_few_distinct_values(eps):
    z = [0.2, 0.2, 0.45, 0.6, 0.6, 0.6, 0.8, 0.95]
    draws = exp_mech_median(z, MedianMechParams(eps, -0.5, 1.5), RandomSeed(8, int(eps * 10)), size=DRAWS)
    edges, probs = exp_mech_interval_probs(z, eps, -0.5, 1.5)
    # zero-length gaps carry no mass; merge them away before comparing
    keep = np.diff(edges) > 0
    freq = interval_frequencies(draws, edges)
    assert total_variation(freq[keep], probs[keep]) < 0.02


def test_interval_weights_errors():
    with pytest.raises(InvalidRange):
        interval_weights(np.array([0.3, 0.3, 0.3]), 1.0)
    with pytest.raises(EmptyInput):
        exp_mech_median([], MedianMechParams(1.0), 0)
    with pytest.raises(InvalidRange):
        MedianMechParams(1.0, 1.0, 1.0)
    with pytest.raises(InvalidValue):
        MedianMechParams(0.0)
    with pytest.raises(InvalidValue):
        MedianMechParams(1.0, theta=-0.1)


def test_smooth_params():
    p = SmoothSensParams(2.0)
    assert p.t == pytest.approx(2.0 / 8)
    assert p.s == pytest.approx(2.0 * math.sqrt(3) / 4)
    with pytest.raises(InvalidValue):
        SmoothSensParams(1.0, beta=1.0)


def test_smooth_sensitivity_constant_input_by_hand():
    # only padded windows contribute: first at l = 5 (one end reaches r_u)
    got = smooth_sensitivity([0.5] * 11, 1, 1.0, 0.0, 1.0)
    assert got == 0.5 * math.exp(-5)
    assert got == lsss([0.5] * 11, 1, 1.0, 0.0, 1.0)


def test_smooth_sensitivity_concentrated():
    z = [0.0] * 6 + [1.0]
    assert smooth_sensitivity(z, 1, 0.5, 0.0, 1.0) >= z[4] - z[3]
    assert smooth_sensitivity([0.0, 0.0, 1.0], 1, 0.5, 0.0, 1.0) >= 1.0


def test_smooth_sensitivity_random_matches_definition(gen):
    for _ in range(200):
        z = gen.uniform(-0.5, 1.5, 12)
        k = int(gen.integers(1, 3))
        t = float(gen.choice([0.1, 0.5]))
        s = smooth_sensitivity(z, k, t, -0.5, 1.5)
        assert s == lsss(z, k, t, -0.5, 1.5)
        assert s == smooth_sensitivity_oracle(z, k, t, -0.5, 1.5)


def test_smoothness_both_directions(gen):
    for _ in range(1000):
        n = int(gen.integers(1, 13))
        k = int(gen.integers(1, 3))
        t = float(gen.choice([0.1, 0.5]))
        z = gen.uniform(0, 1, n)
        z2 = z.copy()
        idx = gen.choice(n, size=min(k, n), replace=False)
        z2[idx] = gen.uniform(0, 1, idx.size)
        a = smooth_sensitivity(z, k, t, 0.0, 1.0)
        b = smooth_sensitivity(z2, k, t, 0.0, 1.0)
        assert a <= math.exp(t) * b * (1 + 1e-12)
        assert b <= math.exp(t) * a * (1 + 1e-12)


def test_dominates_observed_local_sensitivity(gen):
    for _ in range(50):
        n = int(gen.integers(3, 15))
        k = int(gen.integers(1, 3))
        z = gen.uniform(0, 1, n)
        s = smooth_sensitivity(z, k, 0.3, 0.0, 1.0)
        base = median(z)
        for _ in range(20):
            z2 = z.copy()
            idx = gen.choice(n, size=min(k, n), replace=False)
            z2[idx] = gen.choice([0.0, 1.0], size=idx.size)
            assert abs(median(z2) - base) <= s + 1e-12


def test_smooth_sens_median_scale():
    z = [0.5] * 11
    p = SmoothSensParams(1.0, k=1, r_l=0.0, r_u=1.0)
    sens = smooth_sensitivity(z, 1, p.t, 0.0, 1.0)
    out = smooth_sens_median(z, p, 9, size=DRAWS)
    scaled = (out - 0.5) * p.s / sens
    ref = sample_students_t(StudentsTParams(3), 10, size=DRAWS)
    iqr = lambda v: np.subtract(*np.percentile(v, [75, 25]))
    assert iqr(scaled) == pytest.approx(iqr(ref), rel=0.05)


def test_smooth_sens_median_large_epsilon():
    z = np.linspace(0.2, 0.8, 21)
    out = smooth_sens_median(z, SmoothSensParams(1e6), 11, size=10_000)
    assert np.mean(np.abs(out - 0.5) < 1e-3) >= 0.999


def test_all_mechanisms_stay_in_range(gen):
    z = gen.uniform(-3, 3, 15)
    for draws in (
        exp_mech_median(z, MedianMechParams(0.5, -0.5, 1.5), 1, size=5000),
        widened_exp_mech_median(z, MedianMechParams(0.5, -0.5, 1.5, 0.2), 1, size=5000),
        smooth_sens_median(z, SmoothSensParams(0.5, r_l=-0.5, r_u=1.5), 1, size=5000),
    ):
        assert draws.min() >= -0.5 and draws.max() <= 1.5


def test_concentration_grows_with_epsilon():
    z = [0.1, 0.3, 0.45, 0.5, 0.55, 0.7, 0.9]
    shares = []
    for eps in (0.1, 1.0, 10.0):
        d = exp_mech_median(z, MedianMechParams(eps, 0.0, 1.0), RandomSeed(12, int(eps * 10)), size=DRAWS)
        shares.append(np.mean(np.abs(d - 0.5) <= 0.05))
    assert shares[0] <= shares[1] + 0.01
    assert shares[1] <= shares[2] + 0.01


def test_empty_inputs():
    with pytest.raises(EmptyInput):
        smooth_sens_median([], SmoothSensParams(1.0), 0)
    with pytest.raises(EmptyInput):
        widened_exp_mech_median([], MedianMechParams(1.0, theta=0.1), 0)
