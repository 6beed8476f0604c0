"""Tests of (multivariate) normality based on the Hessian of the empirical
cumulant generating function of the scaled residuals.

Typical use::

    import numpy as np
    import cgfnorm

    pts = cgfnorm.sample_ball_points(p=3, n_points=500, radius=3.0, seed=0)
    cal = cgfnorm.calibrate_null(n=50, p=3, pts=pts, s_reps=10_000, seed=0)
    result = cgfnorm.run_test(x, cal, alpha=0.05)
"""

__version__ = "0.1.0"

from .calibration import (
    NullCalibration, TestResult, calibrate_null, critical_value, mc_p_value, p_value,
    run_test, run_test_univariate, studentized_T, studentized_components, upper_quantile,
)
from .competitors import (
    energy_statistic, expected_norm_exact, expected_norm_to_std_normal, kurtosis_deviation,
    mardia_kurtosis, mardia_skewness,
)
from .distributions import parse_spec, sample
from .ecgf import (
    EvalPointSet, PairStatistics, ecgf_eval, marginal_cgf_second, sample_ball_points,
    sample_cube_points, sample_points, stat_pair, stat_univariate,
)
from .errors import (
    CorruptCalibration, CsvParseError, InvalidInput, NumericLimit, SingularCovariance,
    SpecParseError,
)
from .io import parse_sample_csv, read_calibration, write_calibration
from .power import PowerStudyConfig, PowerStudyResult, power_study
from .standardize import (
    Standardization, sample_cov_biased, sample_mean, scaled_residuals, sym_inv_sqrt,
)

__all__ = [
    "__version__",
    "CorruptCalibration", "CsvParseError", "EvalPointSet", "InvalidInput", "NullCalibration",
    "NumericLimit", "PairStatistics", "PowerStudyConfig", "PowerStudyResult",
    "SingularCovariance", "SpecParseError", "Standardization", "TestResult",
    "calibrate_null", "critical_value", "ecgf_eval", "energy_statistic",
    "expected_norm_exact", "expected_norm_to_std_normal", "kurtosis_deviation",
    "marginal_cgf_second", "mardia_kurtosis", "mardia_skewness", "mc_p_value", "p_value",
    "parse_sample_csv", "parse_spec", "power_study", "read_calibration", "run_test",
    "run_test_univariate", "sample", "sample_ball_points", "sample_cov_biased",
    "sample_cube_points", "sample_mean", "sample_points", "scaled_residuals", "stat_pair",
    "stat_univariate", "studentized_T", "studentized_components", "sym_inv_sqrt",
    "upper_quantile", "write_calibration",
]
