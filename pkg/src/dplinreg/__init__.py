"""Differentially private simple linear regression."""

from .core import (
    BudgetLedger,
    DataPoint,
    Dataset,
    Flavor,
    PredictionPair,
    PrivacyBudget,
    RandomSeed,
    spend,
)
from .datagen import (
    SyntheticSpec,
    TractSpec,
    gen_oi_family,
    gen_oi_tract,
    gen_synthetic,
    read_dataset_csv,
    write_dataset_csv,
)
from .dp_median import (
    MedianMechParams,
    SmoothSensParams,
    exp_mech_median,
    smooth_sens_median,
    smooth_sensitivity,
    widened_exp_mech_median,
)
from .dp_regression import (
    GradDescentParams,
    MedianVariant,
    NoisyStatsOutput,
    Release,
    TractFamily,
    dp_grad_descent,
    dp_theilsen,
    mos_release,
    noisy_intercept,
    noisy_stats,
)
from .errors import *  # noqa: F403
from .estimators import (
    matching_schedule,
    ols_fit,
    ols_standard_error,
    pairwise_estimates,
    sufficient_stats,
    theilsen,
)
from .metrics import TrialReport, empirical_error_bound, ratio_cdf

__version__ = "0.1.0"
