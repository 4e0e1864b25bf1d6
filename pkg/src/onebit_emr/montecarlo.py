"""Reproducible Monte Carlo engine, detection sweeps and null-law diagnostics.

Every trial draws its frame from ``RngStream(master_seed, trial_index)``.
Trials are processed in chunks that may run in worker processes; results
are reassembled in trial order, so output never depends on ``workers``.
"""

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from .detector import (
    Scheme,
    ThresholdSpec,
    compute_threshold,
    degrees_of_freedom,
    emr_full_frames,
    emr_one_bit_frames,
)
from .estimators import FullResEMRDetector, OneBitEMRDetector, order_statistic_threshold
from .numerics import check_probability, chi_square_cdf
from .quantizer import one_bit_quantize, one_bit_scm_counts
from .signal import DEFAULT_PU_ANGLE, generate_frames, noise_only, single_pu

__all__ = [
    "NullDiagnostic",
    "Proposition1Result",
    "RateEstimate",
    "SweepResult",
    "crossing_point",
    "empirical_threshold",
    "estimate_rate",
    "lattice_ks_normal",
    "null_distribution_diagnostic",
    "pair_from_upper_index",
    "proposition1_diagnostic",
    "quantile_spread",
    "relative_error",
    "sample_size_ratio",
    "simulate",
    "snr_gap_db",
    "sweep_pd_vs_n",
    "sweep_pd_vs_snr",
    "sweep_threshold_error",
    "upper_index",
    "upper_tri_vectors",
]

# Complex entries per chunk; bounds peak memory at a few tens of MB.
_CHUNK_ENTRIES = 1 << 20


def upper_tri_vectors(frames):
    """Integer ``n * S_{i,j}`` for ``i < j``, ordered by column then row.

    The order is ``(1,2), (1,3), (2,3), (1,4), ...`` so that entry ``(i, j)``
    (1-based) lands at position ``upper_index(i, j) - 1``.
    """
    counts = one_bit_scm_counts(one_bit_quantize(frames))
    rows, cols = np.tril_indices(counts.shape[-1], k=-1)
    # Lower-triangle (row j, col i) in row-major order is the required order.
    return counts[..., cols, rows]


def upper_index(i, j):
    """1-based position of ``S_{i,j}`` (``i < j``) in the upper-triangle vector."""
    if not 1 <= i < j:
        raise ValueError(f"need 1 <= i < j, got ({i}, {j})")
    return i + (j - 1) * (j - 2) // 2


def pair_from_upper_index(p):
    """Inverse of :func:`upper_index`."""
    if p < 1:
        raise ValueError("positions are 1-based")
    j = 2
    while (j - 1) * j // 2 < p:
        j += 1
    return p - (j - 1) * (j - 2) // 2, j


_KERNELS = {
    "onebit": emr_one_bit_frames,
    "fullres": emr_full_frames,
    "upper": upper_tri_vectors,
}


def _run_chunk(config, master_seed, start, stop, kernels):
    frames = generate_frames(config, master_seed, range(start, stop))
    return {name: np.asarray(fn(frames)) for name, fn in kernels.items()}


def simulate(config, trials, master_seed, kernels=("onebit", "fullres"), first_trial=0, workers=1):
    """Evaluate per-frame kernels over ``trials`` independent frames.

    Parameters
    ----------
    config : ScenarioConfig
    trials : int
    master_seed : int
    kernels : sequence of str or dict
        Names from ``{"onebit", "fullres", "upper"}`` or a mapping from name
        to a picklable callable taking a frame stack.
    first_trial : int
        Global index of the first trial; trial ``k`` uses stream
        ``first_trial + k``.
    workers : int
        Number of processes. Results are identical for any value.

    Returns
    -------
    dict of str to ndarray
        One array per kernel with the trial axis first.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if not isinstance(kernels, dict):
        kernels = {name: _KERNELS[name] for name in kernels}
    chunk = max(1, _CHUNK_ENTRIES // (config.m * config.n))
    bounds = [(first_trial + s, first_trial + min(s + chunk, trials)) for s in range(0, trials, chunk)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, config, master_seed, a, b, kernels) for a, b in bounds]
            parts = [f.result() for f in futures]
    else:
        parts = [_run_chunk(config, master_seed, a, b, kernels) for a, b in bounds]
    return {name: np.concatenate([p[name] for p in parts]) for name in kernels}


def _check_trials(trials, epsilon):
    if trials * epsilon < 1:
        raise ValueError(f"{trials} trials cannot resolve epsilon={epsilon:g}")
    if trials < 1e3 / epsilon:
        warnings.warn(
            f"{trials} trials is below the 1e3/epsilon = {1e3 / epsilon:.0f} "
            "recommended for empirical thresholds",
            RuntimeWarning,
            stacklevel=3,
        )


def empirical_threshold(config, statistic, epsilon, trials, master_seed, first_trial=0, workers=1):
    """Empirical ``(1 - epsilon)`` quantile of a statistic under H0.

    Parameters
    ----------
    config : ScenarioConfig
        Noise-only scenario (its H1 terms are ignored).
    statistic : {"onebit", "fullres"}
    """
    epsilon = check_probability(epsilon, "epsilon")
    _check_trials(trials, epsilon)
    values = simulate(config.as_h0(), trials, master_seed, (statistic,), first_trial, workers)[statistic]
    return order_statistic_threshold(values, epsilon)


def quantile_spread(values, epsilon):
    """Standard-error proxy for the empirical ``(1 - epsilon)`` quantile.

    Half the distance between the order statistics one binomial standard
    deviation ``sqrt(N epsilon (1 - epsilon))`` either side of the quantile.
    """
    values = np.sort(np.asarray(values, dtype=float).ravel())
    N = values.size
    k = int(np.ceil(round((1.0 - epsilon) * N, 9))) - 1
    s = max(1, int(round(math.sqrt(N * epsilon * (1.0 - epsilon)))))
    lo, hi = max(k - s, 0), min(k + s, N - 1)
    return 0.5 * float(values[hi] - values[lo])


def relative_error(eta_the, eta_emp):
    if not eta_emp > 0:
        raise ValueError("the empirical threshold must be positive")
    return abs(eta_the - eta_emp) / eta_emp


class RateEstimate(NamedTuple):
    rate: float
    stderr: float
    trials: int


def estimate_rate(config, detector, trials, master_seed, first_trial=0, workers=1):
    """Fraction of frames on which a fitted detector decides H1.

    Under an H0 config this estimates the false-alarm rate, under H1 the
    detection probability. ``detector`` is any fitted object with
    ``predict`` over frame stacks, e.g. :class:`OneBitEMRDetector`.
    """
    kernels = {"decision": detector.predict}
    decisions = simulate(config, trials, master_seed, kernels, first_trial, workers)["decision"]
    rate = float(np.mean(decisions))
    return RateEstimate(rate, math.sqrt(rate * (1.0 - rate) / trials), int(trials))


@dataclass
class SweepResult:
    """One experiment sweep: an axis and equally long named series."""

    axis_name: str
    axis_values: list
    series: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axis_values = [float(v) for v in self.axis_values]
        self.series = {k: [float(v) for v in vals] for k, vals in self.series.items()}
        for name, vals in self.series.items():
            if len(vals) != len(self.axis_values):
                raise ValueError(f"series {name!r} has {len(vals)} points, axis has {len(self.axis_values)}")

    @property
    def columns(self):
        return [self.axis_name, *self.series]

    def to_csv(self, path=None):
        """Write (or return) CSV text with 17 significant digits per value."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for k, x in enumerate(self.axis_values):
            writer.writerow([_fmt(x)] + [_fmt(v[k]) for v in self.series.values()])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path, metadata=None):
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        cols = list(zip(*body)) if body else [()] * len(header)
        series = {name: [float(v) for v in col] for name, col in zip(header[1:], cols[1:])}
        return cls(header[0], [float(v) for v in cols[0]], series, dict(metadata or {}))


def _fmt(x):
    return format(float(x), ".17g")


def _m_for(c, n):
    m = int(round(c * n))
    if m < 1:
        raise ValueError(f"c * n = {c * n:g} rounds to zero antennas")
    return m


def sweep_threshold_error(c, n_values, epsilon, trials_per_point, master_seed, workers=1):
    """Relative error of each closed-form threshold against the empirical one.

    For every ``n``, ``m = round(c n)`` and ``trials_per_point`` noise-only
    trials feed both statistics; trial ids continue across points.
    """
    epsilon = check_probability(epsilon, "epsilon")
    _check_trials(trials_per_point, epsilon)
    series = {"relerr_onebit_exact": [], "relerr_onebit_normal": [], "relerr_fullres": []}
    thresholds = []
    for p, n in enumerate(n_values):
        m = _m_for(c, n)
        sims = simulate(noise_only(m, n), trials_per_point, master_seed, ("onebit", "fullres"),
                        p * trials_per_point, workers)
        emp_ob = order_statistic_threshold(sims["onebit"], epsilon)
        emp_fr = order_statistic_threshold(sims["fullres"], epsilon)
        noise_ob = quantile_spread(sims["onebit"], epsilon) / emp_ob
        noise_fr = quantile_spread(sims["fullres"], epsilon) / emp_fr
        exact = compute_threshold(ThresholdSpec(m, n, epsilon, Scheme.ONE_BIT_EXACT))
        normal = compute_threshold(ThresholdSpec(m, n, epsilon, Scheme.ONE_BIT_NORMAL))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            full = compute_threshold(ThresholdSpec(m, n, epsilon, Scheme.FULL_RES))
        series["relerr_onebit_exact"].append(relative_error(exact, emp_ob))
        series["relerr_onebit_normal"].append(relative_error(normal, emp_ob))
        series["relerr_fullres"].append(relative_error(full, emp_fr))
        thresholds.append({"m": m, "onebit_empirical": emp_ob, "fullres_empirical": emp_fr,
                           "onebit_exact": exact, "onebit_normal": normal, "fullres": full,
                           "onebit_relative_noise": noise_ob, "fullres_relative_noise": noise_fr})
    meta = {"sweep": "threshold_error", "c": c, "epsilon": epsilon,
            "trials_per_point": trials_per_point, "master_seed": master_seed,
            "thresholds": thresholds}
    return SweepResult("n", list(n_values), series, meta)


def _fit_detectors(m, n, epsilon, threshold, calibration_trials, master_seed, first_trial, workers):
    onebit = OneBitEMRDetector(pfa=epsilon, threshold=threshold)
    full = FullResEMRDetector(pfa=epsilon, threshold=threshold)
    if threshold == "empirical":
        _check_trials(calibration_trials, epsilon)
        sims = simulate(noise_only(m, n), calibration_trials, master_seed, ("onebit", "fullres"),
                        first_trial, workers)
        onebit.threshold_ = order_statistic_threshold(sims["onebit"], epsilon)
        full.threshold_ = order_statistic_threshold(sims["fullres"], epsilon)
        for det in (onebit, full):
            det.n_antennas_, det.n_samples_ = m, n
            det.classes_ = np.array([0, 1])
        onebit.dof_ = degrees_of_freedom(m)
    else:
        shape_only = np.zeros((1, m, n), dtype=complex)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            onebit.fit(shape_only)
            full.fit(shape_only)
    return onebit, full


def _detect(config, detectors, trials, master_seed, first_trial, workers):
    kernels = {name: det.predict for name, det in detectors.items()}
    sims = simulate(config, trials, master_seed, kernels, first_trial, workers)
    return {name: float(np.mean(v)) for name, v in sims.items()}


def _default_calibration(epsilon):
    return int(math.ceil(1e3 / epsilon))


def sweep_pd_vs_snr(c, n, snr_values_db, epsilon, trials_per_point, pu_angle=DEFAULT_PU_ANGLE,
                    master_seed=0, threshold="theory", calibration_trials=None, workers=1):
    """Detection probability of both detectors over an SNR grid.

    ``threshold="theory"`` uses the closed-form thresholds (chi-square for
    the one-bit detector); ``"empirical"`` first calibrates both detectors on
    ``calibration_trials`` noise-only trials (default ``1e3 / epsilon``).
    """
    epsilon = check_probability(epsilon, "epsilon")
    m = _m_for(c, n)
    calibration_trials = calibration_trials or _default_calibration(epsilon)
    onebit, full = _fit_detectors(m, n, epsilon, threshold, calibration_trials, master_seed, 0, workers)
    offset = calibration_trials if threshold == "empirical" else 0
    series = {"pd_onebit": [], "pd_fullres": []}
    for p, snr_db in enumerate(snr_values_db):
        pd = _detect(single_pu(m, n, snr_db, pu_angle), {"onebit": onebit, "fullres": full},
                     trials_per_point, master_seed, offset + p * trials_per_point, workers)
        series["pd_onebit"].append(pd["onebit"])
        series["pd_fullres"].append(pd["fullres"])
    meta = {"sweep": "pd_vs_snr", "c": c, "n": n, "m": m, "epsilon": epsilon,
            "trials_per_point": trials_per_point, "pu_angle": pu_angle, "master_seed": master_seed,
            "threshold": threshold, "threshold_onebit": onebit.threshold_,
            "threshold_fullres": full.threshold_}
    if threshold == "empirical":
        meta["calibration_trials"] = calibration_trials
    return SweepResult("snr_db", list(snr_values_db), series, meta)


def sweep_pd_vs_n(c, n_values, snr_db, epsilon, trials_per_point, pu_angle=DEFAULT_PU_ANGLE,
                  master_seed=0, threshold="empirical", calibration_trials=None, workers=1):
    """Detection probability of both detectors over a sample-size grid.

    Empirical thresholds are the default because the closed forms are
    asymptotic and the interesting sample sizes here are small.
    """
    epsilon = check_probability(epsilon, "epsilon")
    calibration_trials = calibration_trials or _default_calibration(epsilon)
    per_point = trials_per_point + (calibration_trials if threshold == "empirical" else 0)
    series = {"pd_onebit": [], "pd_fullres": []}
    thresholds = []
    for p, n in enumerate(n_values):
        m = _m_for(c, n)
        base = p * per_point
        onebit, full = _fit_detectors(m, n, epsilon, threshold, calibration_trials, master_seed,
                                      base, workers)
        first = base + (calibration_trials if threshold == "empirical" else 0)
        pd = _detect(single_pu(m, n, snr_db, pu_angle), {"onebit": onebit, "fullres": full},
                     trials_per_point, master_seed, first, workers)
        series["pd_onebit"].append(pd["onebit"])
        series["pd_fullres"].append(pd["fullres"])
        thresholds.append({"m": m, "onebit": onebit.threshold_, "fullres": full.threshold_})
    meta = {"sweep": "pd_vs_n", "c": c, "snr_db": snr_db, "epsilon": epsilon,
            "trials_per_point": trials_per_point, "pu_angle": pu_angle, "master_seed": master_seed,
            "threshold": threshold, "thresholds": thresholds}
    if threshold == "empirical":
        meta["calibration_trials"] = calibration_trials
    return SweepResult("n", list(n_values), series, meta)


def crossing_point(axis, values, level=0.5):
    """Axis value where ``values`` first rises through ``level``.

    Linear interpolation between the bracketing grid points. Returns NaN if
    the curve never reaches ``level``.
    """
    axis = np.asarray(axis, dtype=float)
    values = np.asarray(values, dtype=float)
    above = np.nonzero(values >= level)[0]
    if above.size == 0:
        return math.nan
    k = above[0]
    if k == 0:
        return float(axis[0]) if values[0] == level else math.nan
    x0, x1, y0, y1 = axis[k - 1], axis[k], values[k - 1], values[k]
    return float(x0 + (level - y0) * (x1 - x0) / (y1 - y0))


def snr_gap_db(result, level=0.5):
    """SNR penalty of the one-bit detector at a given detection probability."""
    return (crossing_point(result.axis_values, result.series["pd_onebit"], level)
            - crossing_point(result.axis_values, result.series["pd_fullres"], level))


def sample_size_ratio(result, level=0.5):
    """Ratio of sample sizes at which the two detectors reach ``level``."""
    return (crossing_point(result.axis_values, result.series["pd_onebit"], level)
            / crossing_point(result.axis_values, result.series["pd_fullres"], level))


class Proposition1Result(NamedTuple):
    max_offdiag_corr: float
    diag_vector: np.ndarray


def _upper_vectors(m, n, trials, master_seed, workers):
    return simulate(noise_only(m, n), trials, master_seed, ("upper",), 0, workers)["upper"]


def proposition1_diagnostic(m, n, trials, master_seed, workers=1):
    """Estimate ``C_r = E[r r^T]`` for the upper-triangle vector under H0.

    Returns the largest absolute off-diagonal correlation and the diagonal
    of ``C_r`` (each entry should be close to ``1/n``).
    """
    counts = _upper_vectors(m, n, trials, master_seed, workers)
    return _second_moments(counts, n)


def _second_moments(counts, n):
    r = counts / float(n)
    cov = r.T @ r / r.shape[0]
    diag = np.diag(cov).copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.nan_to_num(cov / np.sqrt(np.outer(diag, diag)))
    np.fill_diagonal(corr, 0.0)
    return Proposition1Result(float(np.max(np.abs(corr))), diag)


def lattice_ks_normal(counts, n):
    """Kolmogorov distance between ``counts / sqrt(n)`` and N(0, 1).

    ``counts`` are sums of ``n`` signs, so they live on a lattice of step 2
    with the parity of ``n``. Returns ``(raw, corrected)``: the plain KS
    statistic, and the distance with the empirical CDF read at lattice
    midpoints (continuity correction), which removes the half-atom floor a
    lattice law always shows against a continuous one.
    """
    counts = np.sort(np.asarray(counts, dtype=np.int64).ravel())
    scale = math.sqrt(n)
    raw = float(stats.kstest(counts / scale, "norm").statistic)
    lo, hi = counts[0] - 1, counts[-1] + 1
    mids = np.arange(lo, hi + 1, 2)
    ecdf = np.searchsorted(counts, mids, side="right") / counts.size
    model = stats.norm.cdf(mids / scale)
    corrected = float(np.max(np.abs(ecdf - model)))
    return raw, corrected


class NullDiagnostic(NamedTuple):
    ks_entry_raw: float
    ks_entry: float
    ks_chi2: float
    max_offdiag_corr: float
    diag_vector: np.ndarray
    m: int
    n: int
    trials: int


def _chi2_cdf_vec(q):
    def cdf(x):
        return chi_square_cdf(np.asarray(x, dtype=float), q)
    return cdf


def null_distribution_diagnostic(m, n, trials, master_seed, workers=1):
    """All noise-only checks from one shared set of trials.

    * KS of ``sqrt(n) S_{1,2}`` against N(0, 1), raw and lattice corrected.
    * KS of ``m n (xi - 1)`` against the chi-square law with m(2m-1) dof.
    * Largest off-diagonal correlation of the upper-triangle covariance.
    """
    counts = _upper_vectors(m, n, trials, master_seed, workers)
    raw, corrected = lattice_ks_normal(counts[:, 0], n)
    # m n (xi - 1) = n * sum_{i<j} S_ij^2 = sum (n S_ij)^2 / n
    scaled = np.sum(counts.astype(np.float64) ** 2, axis=1) / n
    q = degrees_of_freedom(m)
    ks_chi2 = float(stats.kstest(scaled, _chi2_cdf_vec(q)).statistic)
    max_corr, diag = _second_moments(counts, n)
    return NullDiagnostic(raw, corrected, ks_chi2, max_corr, diag, m, n, trials)
