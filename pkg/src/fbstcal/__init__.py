"""Full Bayesian Significance Test for a normal mean, with sample-size
dependent calibration of the evidence cut-off."""

from fbstcal.special import norm_cdf, norm_pdf, norm_ppf
from fbstcal.model import (
    Decision,
    PosteriorParams,
    PriorSpec,
    SamplingSpec,
    TestConfig,
    decide,
    evidence,
    posterior_params,
    tangential_interval,
)
from fbstcal.risk import (
    PowerTerms,
    QuadratureError,
    QuadratureOptions,
    Weights,
    expected_type2_error,
    objective,
    power,
    power_terms,
    type1_error,
)
from fbstcal.calibrate import (
    CalibrationError,
    CalibrationResult,
    OptimizerOptions,
    SweepRow,
    cutoff_table,
    error_vs_n,
    optimal_cutoff,
    risk_curve,
)
from fbstcal.montecarlo import (
    McEstimate,
    estimate_expected_type2,
    estimate_optimal_cutoff,
    estimate_rejection_rate,
)

__version__ = "0.1.0"
