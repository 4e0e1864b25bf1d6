"""One-bit eigenvalue-moment-ratio spectrum sensing."""

__version__ = "0.1.0"

from .cost import CostScheme, cost_report, flop_count, transistor_count
from .detector import (
    DetectorOutcome,
    Scheme,
    ThresholdSpec,
    compute_threshold,
    corollary1_params,
    decide,
    emr_full,
    emr_one_bit,
    threshold_full,
    threshold_one_bit_exact,
    threshold_one_bit_normal,
)
from .estimators import FullResEMRDetector, OneBitEMRDetector
from .numerics import RngStream, chi_square_cdf, chi_square_quantile, std_normal_quantile
from .quantizer import arcsin_expected_scm, full_res_scm, one_bit_quantize, one_bit_scm
from .signal import Hypothesis, ScenarioConfig, generate_frame, population_covariance, steering_vector
