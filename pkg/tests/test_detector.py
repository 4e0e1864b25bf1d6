import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from onebit_emr.detector import (
    Scheme,
    ThresholdSpec,
    compute_threshold,
    corollary1_params,
    decide,
    emr_full,
    emr_full_frames,
    emr_one_bit,
    emr_one_bit_frames,
    threshold_full,
    threshold_one_bit_exact,
    threshold_one_bit_normal,
)
from onebit_emr.numerics import RngStream, chi_square_quantile, std_normal_quantile
from onebit_emr.quantizer import full_res_scm, one_bit_quantize, one_bit_scm
from onebit_emr.signal import Hypothesis, generate_frames, noise_only, single_pu

# Oracle quantiles (40-digit bisection, see test_numerics).
Z_999 = 3.0902323061678135415
CHI2_28_999 = 56.892285393353605254


def spec(m, n, eps, scheme):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return ThresholdSpec(m, n, eps, scheme)


# --- statistics ----------------------------------------------------------

def test_emr_full_identity():
    assert emr_full(np.eye(5)) == 1.0


def test_emr_full_rank_one_extreme():
    assert emr_full(np.diag([2.0, 0, 0, 0]), 4) == 4.0


def test_emr_full_zero_trace():
    with pytest.raises(ValueError):
        emr_full(np.zeros((3, 3)))


def test_emr_full_shape_check():
    with pytest.raises(ValueError):
        emr_full(np.eye(3), 4)


@settings(max_examples=40)
@given(st.integers(2, 6), st.integers(1, 20), st.floats(1e-3, 1e3), st.integers(0, 2**32))
def test_emr_full_scale_invariant_and_bounded(m, n, alpha, seed):
    x = generate_frames(single_pu(m, n, 0.0), seed, [0])[0]
    phi = full_res_scm(x)
    a, b = emr_full(phi), emr_full(alpha * phi)
    assert abs(a - b) <= 1e-12 * a
    assert 1.0 - 1e-12 <= a <= m + 1e-12


def test_emr_one_bit_examples():
    assert emr_one_bit(np.eye(4)) == 1.0
    assert emr_one_bit(np.ones((6, 6)), 3) == 6.0
    S = np.eye(4)
    S[0, 2] = S[2, 0] = -0.5
    assert emr_one_bit(S, 2) == 1.125


def test_emr_one_bit_dimension_mismatch():
    with pytest.raises(ValueError):
        emr_one_bit(np.eye(4), 3)
    with pytest.raises(ValueError):
        emr_one_bit(np.eye(5))


@settings(max_examples=40)
@given(st.integers(1, 5), st.integers(1, 30), st.integers(0, 2**32))
def test_emr_one_bit_bounds(m, n, seed):
    x = generate_frames(single_pu(m, n, 3.0), seed, [0])[0]
    xi = emr_one_bit(one_bit_scm(one_bit_quantize(x)))
    assert 1.0 <= xi <= 2 * m


@settings(max_examples=40)
@given(st.integers(1, 5), st.integers(1, 30), st.integers(0, 2**32), st.data())
def test_emr_one_bit_invariant_to_antenna_gains(m, n, seed, data):
    x = generate_frames(single_pu(m, n, 0.0), seed, [0])[0]
    g = data.draw(arrays(float, m, elements=st.floats(1e-3, 1e3)))
    xi = emr_one_bit(one_bit_scm(one_bit_quantize(x)))
    assert xi == emr_one_bit(one_bit_scm(one_bit_quantize(g[:, None] * x)))


@pytest.mark.parametrize("m, n", [(1, 5), (3, 4), (4, 9), (6, 3), (2, 64)])
def test_frame_kernels_match_matrix_forms(m, n):
    x = generate_frames(single_pu(m, n, -2.0), 3, range(6))
    fast_full = emr_full_frames(x)
    fast_ob = emr_one_bit_frames(x)
    for k in range(6):
        assert fast_full[k] == pytest.approx(emr_full(full_res_scm(x[k])), rel=1e-12)
        assert fast_ob[k] == pytest.approx(emr_one_bit(one_bit_scm(one_bit_quantize(x[k]))), rel=1e-14)


# --- thresholds ----------------------------------------------------------

def test_threshold_full_median_is_one_plus_c():
    assert threshold_full(spec(32, 64, 0.5, Scheme.FULL_RES)) == 1.5


def test_threshold_full_oracle():
    expected = 1 + 0.5 + math.sqrt(2) * Z_999 / 128
    assert threshold_full(spec(64, 128, 1e-3, Scheme.FULL_RES)) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(1.534143, abs=5e-7)


def test_threshold_full_quantile_term_decreases_in_n():
    # At fixed c the deviation from 1 + c shrinks like 1/n.
    dev = [threshold_full(spec(n // 2, n, 1e-3, Scheme.FULL_RES)) - 1.5 for n in (16, 32, 64, 128)]
    assert all(a > b for a, b in zip(dev, dev[1:]))


def test_threshold_full_warns_outside_regime():
    with pytest.warns(RuntimeWarning):
        ThresholdSpec(10, 5, 0.01, Scheme.FULL_RES)


def test_threshold_one_bit_exact_oracle():
    value = threshold_one_bit_exact(spec(4, 1000, 1e-3, Scheme.ONE_BIT_EXACT))
    assert value == pytest.approx(1 + CHI2_28_999 / 4000, abs=1e-12)
    assert value == pytest.approx(1.014223, abs=5e-7)


def test_threshold_one_bit_exact_limits_and_monotonicity():
    near_one = threshold_one_bit_exact(spec(4, 1000, 1 - 1e-9, Scheme.ONE_BIT_EXACT))
    assert 1.0 < near_one < 1.0 + 1e-3
    values = [threshold_one_bit_exact(spec(4, 100, e, Scheme.ONE_BIT_EXACT)) for e in (1e-4, 1e-3, 1e-2, 0.1)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_threshold_one_bit_normal_oracle():
    value = threshold_one_bit_normal(spec(4, 1000, 1e-3, Scheme.ONE_BIT_NORMAL))
    expected = 1 + math.sqrt(56) / 4000 * (Z_999 + math.sqrt(14))
    assert value == pytest.approx(expected, abs=1e-12)
    assert value == pytest.approx(1.012781, abs=5e-7)


@pytest.mark.parametrize("m, n", [(1, 10), (4, 1000), (7, 33)])
def test_threshold_one_bit_normal_median(m, n):
    value = threshold_one_bit_normal(spec(m, n, 0.5, Scheme.ONE_BIT_NORMAL))
    assert value == pytest.approx(1 + (2 * m - 1) / n, rel=1e-15)


def test_normal_threshold_converges_to_exact():
    def gap(m):
        ex = threshold_one_bit_exact(spec(m, 1000, 1e-3, Scheme.ONE_BIT_EXACT)) - 1
        nm = threshold_one_bit_normal(spec(m, 1000, 1e-3, Scheme.ONE_BIT_NORMAL)) - 1
        return abs(ex - nm) / ex

    gaps = [gap(m) for m in (4, 8, 16, 32)]
    assert gaps[0] < 0.15
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.01  # q = 2016


def test_threshold_scheme_mismatch():
    with pytest.raises(ValueError):
        threshold_full(spec(4, 100, 0.01, Scheme.ONE_BIT_EXACT))


def test_compute_threshold_dispatch():
    for scheme, fn in [(Scheme.FULL_RES, threshold_full), (Scheme.ONE_BIT_EXACT, threshold_one_bit_exact),
                       (Scheme.ONE_BIT_NORMAL, threshold_one_bit_normal)]:
        s = spec(3, 30, 0.05, scheme)
        assert compute_threshold(s) == fn(s)
    assert spec(4, 10, 0.1, "onebit_exact").q == 28


def test_thresholds_use_the_numerics_quantiles():
    s = spec(5, 200, 0.02, Scheme.ONE_BIT_EXACT)
    assert threshold_one_bit_exact(s) == 1 + chi_square_quantile(0.98, 45) / 1000
    s = spec(5, 200, 0.02, Scheme.FULL_RES)
    assert threshold_full(s) == 1 + 5 / 200 + math.sqrt(2) * std_normal_quantile(0.98) / 200


# --- decisions and Corollary-1 parameters --------------------------------

@pytest.mark.parametrize("stat, thr, expected", [(1.5, 1.4, Hypothesis.H1), (1.4, 1.4, Hypothesis.H0),
                                                 (1.0, 1.2, Hypothesis.H0)])
def test_decide(stat, thr, expected):
    out = decide(stat, thr)
    assert out.decision is expected
    assert (out.statistic, out.threshold) == (stat, thr)


def test_asymptotic_entry_params():
    assert corollary1_params(0.5, 64) == (0.0, 1 / 64)
    assert corollary1_params(1.0, 10) == (1.0, 0.0)
    assert corollary1_params(0.0, 10) == (-1.0, 0.0)
    with pytest.raises(ValueError):
        corollary1_params(1.2, 10)


def test_h0_null_law_matches_chi_square():
    from scipy import stats

    from onebit_emr.montecarlo import simulate
    from onebit_emr.numerics import chi_square_cdf

    m, n = 4, 1024
    xi = simulate(noise_only(m, n), 10_000, 21, ("onebit",))["onebit"]
    scaled = m * n * (xi - 1)
    ks = stats.kstest(scaled, lambda v: chi_square_cdf(np.asarray(v), 28)).statistic
    assert ks < 0.02
