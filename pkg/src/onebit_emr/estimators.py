"""Scikit-learn compatible detectors.

Samples are whole frames: ``X`` has shape ``(n_frames, m, n)`` and holds
complex snapshots. A single ``(m, n)`` frame is accepted and treated as a
batch of one. ``predict`` returns 1 for H1 (signal present), 0 for H0.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .detector import (
    Scheme,
    ThresholdSpec,
    compute_threshold,
    degrees_of_freedom,
    emr_full_frames,
    emr_one_bit_frames,
)
from .numerics import check_probability

__all__ = ["FullResEMRDetector", "OneBitEMRDetector", "check_frames", "order_statistic_threshold"]


def check_frames(X, shape=None):
    """Validate a batch of raw frames and return it as a complex 3-d array.

    Parameters
    ----------
    X : array-like
        ``(n_frames, m, n)`` or a single ``(m, n)`` frame. Real input is
        promoted to complex.
    shape : tuple of int, optional
        Expected ``(m, n)``; checked when given.
    """
    X = np.asarray(X)
    if X.dtype == object or not np.issubdtype(X.dtype, np.number):
        raise ValueError(f"frames must be numeric, got dtype {X.dtype}")
    if X.ndim == 2:
        X = X[np.newaxis]
    if X.ndim != 3:
        raise ValueError(f"expected frames of shape (n_frames, m, n), got {X.shape}")
    if 0 in X.shape:
        raise ValueError(f"empty frame batch with shape {X.shape}")
    X = X.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(X)):
        raise ValueError("frames contain NaN or infinity")
    if shape is not None and X.shape[1:] != tuple(shape):
        raise ValueError(f"detector was fitted on {tuple(shape)} frames, got {X.shape[1:]}")
    return X


def order_statistic_threshold(values, epsilon):
    """Upper ``(1 - epsilon)`` empirical quantile as an order statistic.

    Returns the ``ceil((1 - epsilon) N)``-th smallest value (1-based).

    Raises
    ------
    ValueError
        If ``N * epsilon < 1``: the tail is not resolved by the sample.
    """
    epsilon = check_probability(epsilon, "epsilon")
    values = np.sort(np.asarray(values, dtype=float).ravel())
    N = values.size
    if N * epsilon < 1:
        raise ValueError(f"{N} trials cannot resolve epsilon={epsilon:g} (need N*epsilon >= 1)")
    # Guard against 0.99*100 -> 99.00000000000001 style rounding before ceil.
    k = int(np.ceil(round((1.0 - epsilon) * N, 9)))
    return float(values[max(k, 1) - 1])


class _EMRDetector(ClassifierMixin, TransformerMixin, BaseEstimator):
    _statistic = None
    _schemes = ()

    def __init__(self, pfa=1e-3, threshold="theory"):
        self.pfa = pfa
        self.threshold = threshold

    def _scheme(self):
        raise NotImplementedError

    def statistic(self, X):
        return type(self)._statistic(X)

    def fit(self, X, y=None):
        """Calibrate the threshold.

        With ``threshold="empirical"`` every frame in ``X`` is taken as a
        noise-only calibration trial; otherwise only the frame shape is used.
        ``y`` is ignored.
        """
        X = check_frames(X)
        check_probability(self.pfa, "pfa")
        self.n_antennas_, self.n_samples_ = X.shape[1:]
        if self.threshold == "empirical":
            self.threshold_ = order_statistic_threshold(self.statistic(X), self.pfa)
        elif self.threshold in self._schemes or self.threshold == "theory":
            spec = ThresholdSpec(self.n_antennas_, self.n_samples_, self.pfa, self._scheme())
            self.threshold_ = compute_threshold(spec)
        else:
            raise ValueError(f"unknown threshold mode {self.threshold!r}")
        self.classes_ = np.array([0, 1])
        return self

    def transform(self, X):
        """EMR statistic per frame, as a column."""
        check_is_fitted(self, "threshold_")
        X = check_frames(X, (self.n_antennas_, self.n_samples_))
        return self.statistic(X)[:, np.newaxis]

    def decision_function(self, X):
        return self.transform(X)[:, 0] - self.threshold_

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(int)


class FullResEMRDetector(_EMRDetector):
    """EMR detector on full-resolution complex snapshots.

    Parameters
    ----------
    pfa : float
        Target false-alarm probability.
    threshold : {"theory", "empirical"}
        ``"theory"`` uses the closed-form random-matrix threshold.
    """

    _statistic = staticmethod(emr_full_frames)
    _schemes = ("fullres",)

    def _scheme(self):
        return Scheme.FULL_RES


class OneBitEMRDetector(_EMRDetector):
    """EMR detector operating on the signs of the I/Q samples.

    Parameters
    ----------
    pfa : float
        Target false-alarm probability.
    threshold : {"exact", "normal", "theory", "empirical"}
        ``"exact"`` (alias ``"theory"``) inverts the chi-square null law,
        ``"normal"`` its Gaussian approximation.
    """

    _statistic = staticmethod(emr_one_bit_frames)
    _schemes = ("exact", "normal")

    def _scheme(self):
        return Scheme.ONE_BIT_NORMAL if self.threshold == "normal" else Scheme.ONE_BIT_EXACT

    def fit(self, X, y=None):
        super().fit(X, y)
        self.dof_ = degrees_of_freedom(self.n_antennas_)
        return self
