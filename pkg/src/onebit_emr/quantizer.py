"""One-bit quantization, sample covariance matrices and the arcsin law.

A sign frame is stored as an ``int8`` matrix of shape ``(2m, n)``: rows
``0..m-1`` hold the signs of the real parts, rows ``m..2m-1`` the signs of
the imaginary parts. Zero maps to +1.
"""

import numpy as np

__all__ = [
    "arcsin_expected_scm",
    "arcsin_law",
    "full_res_scm",
    "one_bit_quantize",
    "one_bit_scm",
    "one_bit_scm_counts",
    "pack_signs",
    "real_composite_covariance",
    "unpack_signs",
]


def _sgn(a):
    return np.where(a >= 0, np.int8(1), np.int8(-1))


def one_bit_quantize(frame):
    """Quantize a complex frame to its stacked sign frame.

    Works on a single ``(m, n)`` frame or a stack ``(..., m, n)``; the real
    and imaginary signs are stacked along the antenna axis.
    """
    frame = np.asarray(frame)
    return np.concatenate([_sgn(frame.real), _sgn(frame.imag)], axis=-2)


def one_bit_scm_counts(signs):
    """Integer sums ``sum_t z(t) z(t)^T`` (unnormalized one-bit SCM).

    The products are accumulated in float32, which is exact for integer
    magnitudes below 2**24, so the result does not depend on summation order.
    """
    z = np.asarray(signs)
    n = z.shape[-1]
    if n >= 1 << 24:
        zf = z.astype(np.float64)
    else:
        zf = z.astype(np.float32)
    counts = zf @ np.swapaxes(zf, -1, -2)
    return np.rint(counts).astype(np.int64)


def one_bit_scm(signs):
    """One-bit sample covariance ``S = (1/n) sum_t z(t) z(t)^T``.

    Symmetric with a unit diagonal by construction.
    """
    signs = np.asarray(signs)
    n = signs.shape[-1]
    if n < 1:
        raise ValueError("a sign frame needs at least one snapshot")
    return one_bit_scm_counts(signs) / n


def full_res_scm(frame):
    """Complex sample covariance ``Phi = (1/n) sum_t x(t) x(t)^H``."""
    x = np.asarray(frame)
    n = x.shape[-1]
    if n < 1:
        raise ValueError("a frame needs at least one snapshot")
    phi = (x @ np.conj(np.swapaxes(x, -1, -2))) / n
    return 0.5 * (phi + np.conj(np.swapaxes(phi, -1, -2)))


def real_composite_covariance(R):
    """Covariance of the stacked real vector ``[Re x; Im x]`` for x ~ CN(0, R)."""
    R = np.asarray(R)
    return 0.5 * np.block([[R.real, -R.imag], [R.imag, R.real]])


def arcsin_expected_scm(R):
    """Expected one-bit SCM for circular Gaussian snapshots with covariance R.

    Each entry is ``(2/pi) arcsin`` of the normalized correlation of the
    corresponding pair of real components.

    Raises
    ------
    ValueError
        If R is not Hermitian positive definite.
    """
    R = np.asarray(R, dtype=complex)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError("R must be a square matrix")
    if not np.allclose(R, R.conj().T, rtol=0, atol=1e-10 * max(1.0, np.abs(R).max())):
        raise ValueError("R must be Hermitian")
    sigma = real_composite_covariance(R)
    eig = np.linalg.eigvalsh(sigma)
    if not eig[0] > 1e-12 * max(eig[-1], 0.0):
        raise ValueError("R must be positive definite")
    scale = np.sqrt(np.diag(sigma))
    corr = sigma / np.outer(scale, scale)
    np.fill_diagonal(corr, 1.0)
    return arcsin_law(corr)


def arcsin_law(rho):
    """``E[sgn(u) sgn(v)] = (2/pi) arcsin(rho)`` for jointly Gaussian zero-mean u, v."""
    return (2.0 / np.pi) * np.arcsin(np.clip(rho, -1.0, 1.0))


def pack_signs(signs):
    """Pack each column z(t) of a ``(2m, n)`` sign frame into bytes (+1 -> 1)."""
    return np.packbits(np.asarray(signs) > 0, axis=-2)


def unpack_signs(packed, rows):
    """Inverse of :func:`pack_signs`; ``rows`` is 2m."""
    bits = np.unpackbits(packed, axis=-2, count=rows)
    return np.where(bits == 1, np.int8(1), np.int8(-1))
