import math

import numpy as np
import pytest

from dplinreg.core import PredictionPair
from dplinreg.errors import AllFailures, InvalidValue
from dplinreg.metrics import (
    TrialReport,
    empirical_error_bound,
    error_bound,
    mean_ratio,
    metric_rows,
    prediction_errors,
    ratio,
    ratio_cdf,
)

OLS = PredictionPair(0.3, 0.6)


def report(errors25, sigma=(0.1, 0.1), truth=None, did="d", failures=0):
    trials = [PredictionPair(OLS.p25 + e, OLS.p75) for e in errors25] + [None] * failures
    return TrialReport(did, "algo", trials, OLS, sigma, truth)


def test_identical_to_ols_is_zero():
    r = report([0.0] * 10)
    for q in (0, 50, 68, 100):
        assert empirical_error_bound(r, q) == 0


def test_order_statistic_example():
    assert empirical_error_bound(report([0.1, -0.2, 0.3, -0.4]), 68) == pytest.approx(0.3)


def test_failures_count_as_infinite():
    r = report(list(np.linspace(0.01, 0.7, 70)), failures=30)
    assert math.isfinite(empirical_error_bound(r, 68))
    r = report(list(np.linspace(0.01, 0.6, 60)), failures=40)
    assert empirical_error_bound(r, 68) == math.inf
    assert empirical_error_bound(r, 60) == pytest.approx(0.6)
    with pytest.raises(AllFailures):
        empirical_error_bound(report([], failures=5), 68)
    assert empirical_error_bound(report([], failures=5), 0) == 0


def test_monotone_and_extremes(gen):
    errs = gen.normal(0, 1, 37)
    r = report(list(errs))
    qs = np.linspace(0, 100, 41)
    vals = [empirical_error_bound(r, q) for q in qs]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(np.abs(errs).max())
    assert vals[0] == 0


def test_q_float_round_off():
    # 68% of 25 is exactly 17 and must not round up to 18
    errs = np.arange(1, 26) / 100
    assert error_bound(errs, 68) == pytest.approx(0.17)
    with pytest.raises(InvalidValue):
        error_bound(errs, 101)


def test_truth_reference():
    r = report([0.1, 0.2], truth=OLS)
    assert np.array_equal(prediction_errors(r, "p25", "truth"), prediction_errors(r, "p25", "ols"))
    with pytest.raises(InvalidValue):
        prediction_errors(report([0.1]), "p25", "truth")
    with pytest.raises(InvalidValue):
        prediction_errors(r, "p25", "median")
    assert prediction_errors(r, 0.25, "ols") == pytest.approx([0.1, 0.2])


def test_report_validation():
    with pytest.raises(InvalidValue):
        TrialReport("d", "a", [], OLS, (0.1, 0.1))
    with pytest.raises(InvalidValue):
        TrialReport("d", "a", [OLS], OLS, (-0.1, 0.1))


def test_single_report_cdf():
    cdf = ratio_cdf([report([0.25], sigma=(0.1, 0.1))], 68)
    assert cdf.points == ((pytest.approx(2.5), 1.0),)


def test_all_below_one_reaches_one():
    reps = [report([0.01 * i], did=str(i)) for i in range(1, 9)]
    cdf = ratio_cdf(reps, 68)
    assert cdf.fraction_below(1.0) == 1.0
    assert cdf.points[-1][1] == 1.0


def test_cdf_matches_direct_tabulation(gen):
    reps = []
    for i in range(100):
        sigma = float(gen.uniform(0.05, 0.2))
        reps.append(report(list(gen.normal(0, 0.1, 20)), sigma=(sigma, sigma), did=str(i)))
    cdf = ratio_cdf(reps, 68)
    direct = []
    for r in reps:
        errs = sorted(abs(t.p25 - OLS.p25) for t in r.trials)
        direct.append(errs[math.ceil(0.68 * 20) - 1] / r.sigma_hat[0])
    direct.sort()
    assert [p[0] for p in cdf.points] == pytest.approx(direct)
    assert [p[1] for p in cdf.points] == pytest.approx([(i + 1) / 100 for i in range(100)])


def test_zero_standard_error_excluded():
    reps = [report([0.1], did="a"), report([0.1], sigma=(0.0, 0.0), did="b")]
    cdf = ratio_cdf(reps, 68)
    assert cdf.excluded == ("b",) and cdf.excluded_count == 1
    assert len(cdf.points) == 1
    assert ratio(reps[0], 68) == pytest.approx(1.0)


def test_mean_ratio_and_rows():
    r = report([0.2, 0.1], truth=PredictionPair(0.3, 0.6))
    assert mean_ratio([r], 100, vs="truth") == pytest.approx(2.0)
    rows = metric_rows(r, [68, 95], vs_list=("ols", "truth"))
    assert len(rows) == 8
    assert {row["vs"] for row in rows} == {"ols", "truth"}
    assert metric_rows(report([0.1]), [68], vs_list=("ols", "truth"))[-1]["vs"] == "ols"
