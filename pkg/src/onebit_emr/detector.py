"""Eigenvalue-moment-ratio statistics, CFAR thresholds and the decision rule."""

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .numerics import check_probability, chi_square_quantile, std_normal_quantile
from .quantizer import one_bit_quantize, one_bit_scm_counts
from .signal import Hypothesis

__all__ = [
    "DetectorOutcome",
    "Scheme",
    "ThresholdSpec",
    "compute_threshold",
    "corollary1_params",
    "decide",
    "degrees_of_freedom",
    "emr_full",
    "emr_full_frames",
    "emr_one_bit",
    "emr_one_bit_frames",
    "threshold_full",
    "threshold_one_bit_exact",
    "threshold_one_bit_normal",
]


class Scheme(enum.Enum):
    FULL_RES = "fullres"
    ONE_BIT_EXACT = "onebit_exact"
    ONE_BIT_NORMAL = "onebit_normal"


def degrees_of_freedom(m):
    """Number of strictly-upper-triangle entries of a 2m x 2m matrix, m(2m-1)."""
    m = int(m)
    return m * (2 * m - 1)


@dataclass(frozen=True)
class ThresholdSpec:
    m: int
    n: int
    epsilon: float
    scheme: Scheme = Scheme.ONE_BIT_EXACT

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1 or int(self.n) != self.n or self.n < 1:
            raise ValueError("m and n must be positive integers")
        check_probability(self.epsilon, "epsilon")
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.scheme is Scheme.FULL_RES and not 0 < self.c < 1:
            warnings.warn(
                f"c = m/n = {self.c:g} is outside (0, 1); the full-resolution "
                "threshold is only calibrated there",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def c(self):
        return self.m / self.n

    @property
    def q(self):
        return degrees_of_freedom(self.m)


def _require(spec, scheme):
    if spec.scheme is not scheme:
        raise ValueError(f"threshold for {scheme.value} called with a {spec.scheme.value} spec")


def threshold_full(spec):
    """Threshold of the full-resolution EMR detector, ``1 + c + sqrt(2) z / n``.

    ``z`` is the standard normal quantile at ``1 - epsilon``.
    """
    _require(spec, Scheme.FULL_RES)
    z = std_normal_quantile(1.0 - spec.epsilon)
    return 1.0 + spec.m / spec.n + math.sqrt(2.0) * z / spec.n


def threshold_one_bit_exact(spec):
    """Chi-square threshold ``1 + F^{-1}_{chi2_q}(1 - epsilon) / (m n)``."""
    _require(spec, Scheme.ONE_BIT_EXACT)
    return 1.0 + chi_square_quantile(1.0 - spec.epsilon, spec.q) / (spec.m * spec.n)


def threshold_one_bit_normal(spec):
    """Normal approximation of the chi-square threshold.

    Treats ``(m n (xi - 1) - q) / sqrt(2 q)`` as standard normal.
    """
    _require(spec, Scheme.ONE_BIT_NORMAL)
    q = spec.q
    z = std_normal_quantile(1.0 - spec.epsilon)
    return 1.0 + math.sqrt(2.0 * q) / (spec.m * spec.n) * (z + math.sqrt(q / 2.0))


_THRESHOLDS = {
    Scheme.FULL_RES: threshold_full,
    Scheme.ONE_BIT_EXACT: threshold_one_bit_exact,
    Scheme.ONE_BIT_NORMAL: threshold_one_bit_normal,
}


def compute_threshold(spec):
    return _THRESHOLDS[spec.scheme](spec)


def emr_full(phi, m=None):
    """Second-order EMR of a complex SCM, ``m ||Phi||_F^2 / tr(Phi)^2``.

    Raises
    ------
    ValueError
        If the trace is not positive or the shape does not match ``m``.
    """
    phi = np.asarray(phi)
    if m is None:
        m = phi.shape[-1]
    if phi.shape != (m, m):
        raise ValueError(f"expected an {m}x{m} SCM, got shape {phi.shape}")
    tr = float(np.real(np.trace(phi)))
    if not tr > 0:
        raise ValueError("EMR is undefined for an SCM with non-positive trace")
    return m * float(np.sum(np.abs(phi) ** 2)) / tr ** 2


def emr_one_bit(s, m=None):
    """One-bit EMR: 1 + (1/m) * sum of squared strictly-upper entries of S."""
    s = np.asarray(s, dtype=float)
    if m is None:
        if s.shape[-1] % 2:
            raise ValueError("a one-bit SCM has an even dimension")
        m = s.shape[-1] // 2
    if s.shape != (2 * m, 2 * m):
        raise ValueError(f"expected a {2 * m}x{2 * m} one-bit SCM, got shape {s.shape}")
    upper = s[np.triu_indices(2 * m, k=1)]
    return 1.0 + float(np.dot(upper, upper)) / m


def _gram(x):
    # Frobenius norm of x x^H equals that of x^H x; use the smaller product.
    xh = np.conj(np.swapaxes(x, -1, -2))
    return x @ xh if x.shape[-2] <= x.shape[-1] else xh @ x


def emr_full_frames(frames):
    """Full-resolution EMR for a stack of raw frames ``(..., m, n)``.

    Equivalent to ``emr_full(full_res_scm(frame))`` per frame, without
    forming Phi when n < m.
    """
    x = np.asarray(frames)
    m = x.shape[-2]
    g = _gram(x)
    frob2 = np.sum(g.real ** 2 + g.imag ** 2, axis=(-2, -1))
    tr = np.sum(x.real ** 2 + x.imag ** 2, axis=(-2, -1))
    return m * frob2 / tr ** 2


def emr_one_bit_frames(frames):
    """One-bit EMR for a stack of raw frames ``(..., m, n)``.

    The squared-entry sum is accumulated in exact integer arithmetic.
    """
    x = np.asarray(frames)
    m, n = x.shape[-2], x.shape[-1]
    z = one_bit_quantize(x)
    if 2 * m <= n:
        counts = one_bit_scm_counts(z)
    else:
        counts = one_bit_scm_counts(np.swapaxes(z, -1, -2))
    frob2 = np.sum(counts * counts, axis=(-2, -1))
    # Diagonal of the 2m x 2m product contributes 2m n^2; halve for i < j.
    upper = (frob2 - 2 * m * n * n) // 2
    return 1.0 + upper / (m * float(n) * n)


@dataclass(frozen=True)
class DetectorOutcome:
    statistic: float
    threshold: float
    decision: Hypothesis


def decide(statistic, threshold):
    """Reject H0 only when the statistic strictly exceeds the threshold."""
    decision = Hypothesis.H1 if statistic > threshold else Hypothesis.H0
    return DetectorOutcome(float(statistic), float(threshold), decision)


def corollary1_params(p_bar, n):
    """Gaussian mean and variance of an off-diagonal one-bit SCM entry.

    Parameters
    ----------
    p_bar : float
        Probability that the two signs agree.
    n : int
        Number of snapshots.
    """
    p_bar = check_probability(p_bar, "p_bar", open_interval=False)
    return 2.0 * p_bar - 1.0, 4.0 * p_bar * (1.0 - p_bar) / n
