import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from onebit_emr.numerics import RngStream
from onebit_emr.quantizer import (
    arcsin_expected_scm,
    arcsin_law,
    full_res_scm,
    one_bit_quantize,
    one_bit_scm,
    pack_signs,
    unpack_signs,
)
from onebit_emr.signal import generate_frame, noise_only, population_covariance, single_pu

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
complex_frames = st.integers(1, 4).flatmap(
    lambda m: st.integers(1, 6).flatmap(
        lambda n: st.tuples(arrays(float, (m, n), elements=finite), arrays(float, (m, n), elements=finite))
    )
).map(lambda ri: ri[0] + 1j * ri[1])


def test_quantize_example():
    z = one_bit_quantize(np.array([[3 + 4j], [-1 + 0.5j]]))
    np.testing.assert_array_equal(z[:, 0], [1, -1, 1, 1])
    assert z.dtype == np.int8


def test_zero_maps_to_plus_one():
    z = one_bit_quantize(np.array([[0 - 2j], [-0.0 + 0j]]))
    np.testing.assert_array_equal(z[:, 0], [1, 1, -1, 1])


@settings(max_examples=50)
@given(complex_frames, st.floats(min_value=1e-3, max_value=1e3))
def test_quantize_scale_invariant(frame, alpha):
    np.testing.assert_array_equal(one_bit_quantize(alpha * frame), one_bit_quantize(frame))


@settings(max_examples=50)
@given(complex_frames, st.data())
def test_scm_invariant_to_per_antenna_scaling(frame, data):
    m = frame.shape[0]
    d = data.draw(arrays(float, m, elements=st.floats(min_value=1e-3, max_value=1e3)))
    np.testing.assert_array_equal(one_bit_scm(one_bit_quantize(d[:, None] * frame)),
                                  one_bit_scm(one_bit_quantize(frame)))


@settings(max_examples=50)
@given(complex_frames)
def test_one_bit_scm_structure(frame):
    n = frame.shape[1]
    S = one_bit_scm(one_bit_quantize(frame))
    np.testing.assert_array_equal(S, S.T)
    np.testing.assert_array_equal(np.diag(S), 1.0)
    # Off-diagonals are averages of n signs: n*S is an integer with n's parity.
    k = np.rint(S * n).astype(int)
    np.testing.assert_allclose(S * n, k, atol=1e-12)
    assert np.all((k - n) % 2 == 0)
    assert np.all(np.abs(S) <= 1)


def test_single_snapshot_all_plus():
    S = one_bit_scm(np.ones((4, 1), dtype=np.int8))
    np.testing.assert_array_equal(S, np.ones((4, 4)))


def test_sign_flip_snapshot_cancels():
    z = np.array([[1], [-1], [1], [1]], dtype=np.int8)
    np.testing.assert_array_equal(one_bit_scm(np.hstack([z, -z])), one_bit_scm(z))


def test_h0_offdiagonals_are_order_one_over_sqrt_n():
    n = 10_000
    S = one_bit_scm(one_bit_quantize(generate_frame(noise_only(4, n), RngStream(0, 0))))
    off = S[~np.eye(8, dtype=bool)]
    assert np.max(np.abs(off)) < 5 / math.sqrt(n)


def test_pack_round_trip():
    z = one_bit_quantize(generate_frame(noise_only(5, 13), RngStream(1, 0)))
    packed = pack_signs(z)
    assert packed.shape == (2, 13)
    np.testing.assert_array_equal(unpack_signs(packed, 10), z)


def test_full_res_scm_rank_one():
    x = np.array([[1 + 1j], [2 - 1j], [0.5j]])
    phi = full_res_scm(x)
    np.testing.assert_allclose(phi, x @ x.conj().T, atol=1e-15)
    assert np.linalg.matrix_rank(phi) == 1


def test_full_res_scm_scaling_and_hermitian():
    x = generate_frame(single_pu(3, 50, 0.0), RngStream(2, 0))
    phi = full_res_scm(x)
    np.testing.assert_array_equal(phi, phi.conj().T)
    assert np.all(np.diag(phi).real > 0)
    assert np.min(np.linalg.eigvalsh(phi)) > -1e-12
    np.testing.assert_allclose(full_res_scm(3.0 * x), 9.0 * phi, rtol=1e-13)


def test_full_res_scm_h0_diagonal():
    phi = full_res_scm(generate_frame(noise_only(2, 100_000), RngStream(3, 0)))
    assert np.all((0.99 <= np.diag(phi).real) & (np.diag(phi).real <= 1.01))


def test_arcsin_white_noise_is_identity():
    np.testing.assert_allclose(arcsin_expected_scm(2.0 * np.eye(3)), np.eye(6), atol=1e-15)


def test_arcsin_law_extremes():
    assert arcsin_law(1.0) == 1.0
    assert arcsin_law(-1.0) == -1.0
    assert arcsin_law(0.0) == 0.0


def test_arcsin_rejects_non_pd():
    with pytest.raises(ValueError):
        arcsin_expected_scm(np.ones((2, 2)))
    with pytest.raises(ValueError):
        arcsin_expected_scm(np.array([[1, 1j], [1j, 1]]))


def test_arcsin_bounds_on_random_covariances():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        R = a @ a.conj().T + 0.1 * np.eye(4)
        E = arcsin_expected_scm(R)
        np.testing.assert_allclose(np.diag(E), 1.0)
        assert np.all(np.abs(E) <= 1)
        np.testing.assert_allclose(E, E.T, atol=1e-15)


def test_arcsin_matches_monte_carlo_h1():
    cfg = single_pu(4, 100_000, snr_db=0.0)
    S = one_bit_scm(one_bit_quantize(generate_frame(cfg, RngStream(4, 0))))
    assert np.max(np.abs(S - arcsin_expected_scm(population_covariance(cfg)))) < 0.01


def test_h0_entry_distribution_is_standard_normal():
    # sqrt(n) S_ij over 1e4 independent frames at n = 1024 against N(0, 1).
    from onebit_emr.montecarlo import lattice_ks_normal, simulate

    n = 1024
    counts = simulate(noise_only(2, n), 10_000, 5, ("upper",))["upper"][:, 0]
    raw, corrected = lattice_ks_normal(counts, n)
    pvalue = stats.kstwo.sf(corrected, counts.size)
    assert pvalue > 0.01
