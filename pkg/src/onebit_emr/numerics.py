"""Special functions and reproducible random streams.

The quantile functions here are self-contained (stdlib ``math`` only) so the
detection thresholds do not silently change with a scipy upgrade.
"""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RngStream",
    "check_probability",
    "chi_square_cdf",
    "chi_square_pdf",
    "chi_square_quantile",
    "chi_square_sf",
    "gaussian_draw",
    "std_normal_cdf",
    "std_normal_quantile",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_UINT64 = 1 << 64

# Acklam's rational approximation, refined below by one Halley step.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def check_probability(p, name="p", open_interval=True):
    """Validate a probability and return it as a float.

    Raises
    ------
    ValueError
        If ``p`` is outside (0, 1) (or [0, 1] when ``open_interval`` is False).
    """
    p = float(p)
    if math.isnan(p):
        raise ValueError(f"{name} must be a probability, got nan")
    if open_interval and not 0.0 < p < 1.0:
        raise ValueError(f"{name} must lie in the open interval (0, 1), got {p!r}")
    if not open_interval and not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")
    return p


def std_normal_cdf(x):
    """Standard normal CDF, accurate in both tails."""
    return 0.5 * math.erfc(-x / _SQRT2)


def _acklam(p):
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        return -_acklam(1.0 - p)
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def std_normal_quantile(p):
    """Inverse of the standard normal CDF.

    A rational initial approximation (relative error ~1e-9) is polished by a
    single Halley step on ``erfc``, which brings the absolute error to the
    level of double rounding over the whole open interval.

    Parameters
    ----------
    p : float
        Probability in (0, 1).

    Returns
    -------
    float
        ``x`` such that ``std_normal_cdf(x) == p``.
    """
    p = check_probability(p)
    if p == 0.5:
        return 0.0
    # Work in the lower half so the residual is computed without cancellation.
    lower = 1.0 - p if p > 0.5 else p
    x = _acklam(lower)
    e = std_normal_cdf(x) - lower
    u = e * _SQRT2PI * math.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    return -x if p > 0.5 else x


def _log_gamma_prefix(a, x):
    # log(x^a e^-x / Gamma(a))
    return a * math.log(x) - x - math.lgamma(a)


def _lower_gamma_series(a, x):
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(100000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(_log_gamma_prefix(a, x))


def _upper_gamma_cf(a, x):
    # Modified Lentz evaluation of the continued fraction for Q(a, x).
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 100000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(_log_gamma_prefix(a, x))


def _regularized_gamma(a, x):
    """Return (P(a, x), Q(a, x)), each computed on its stable branch."""
    if x <= 0.0:
        return 0.0, 1.0
    if x < a + 1.0:
        p = _lower_gamma_series(a, x)
        return p, 1.0 - p
    q = _upper_gamma_cf(a, x)
    return 1.0 - q, q


def _check_dof(q):
    if int(q) != q or q < 1:
        raise ValueError(f"degrees of freedom must be a positive integer, got {q!r}")
    return int(q)


def chi_square_cdf(x, q):
    """CDF of the chi-square law with ``q`` degrees of freedom.

    Evaluated as the regularized lower incomplete gamma ``P(q/2, x/2)``.
    Accepts scalars or arrays for ``x``.
    """
    q = _check_dof(q)
    if np.ndim(x):
        return np.array([chi_square_cdf(float(v), q) for v in np.ravel(x)]).reshape(np.shape(x))
    x = float(x)
    if x < 0.0:
        raise ValueError(f"chi-square CDF needs x >= 0, got {x!r}")
    return _regularized_gamma(0.5 * q, 0.5 * x)[0]


def chi_square_sf(x, q):
    """Upper tail ``1 - chi_square_cdf(x, q)`` without cancellation."""
    q = _check_dof(q)
    x = float(x)
    if x < 0.0:
        raise ValueError(f"chi-square survival needs x >= 0, got {x!r}")
    return _regularized_gamma(0.5 * q, 0.5 * x)[1]


def chi_square_pdf(x, q):
    q = _check_dof(q)
    if x <= 0.0:
        if q == 2:
            return 0.5
        return math.inf if q == 1 else 0.0
    a = 0.5 * q
    return math.exp((a - 1.0) * math.log(x) - 0.5 * x - math.lgamma(a) - a * math.log(2.0))


def chi_square_quantile(p, q):
    """Inverse chi-square CDF.

    Starts from the Wilson-Hilferty cube-root approximation and refines with
    safeguarded Newton steps, keeping a bracket so a bad step falls back to
    bisection. Whichever tail is smaller drives the residual, which keeps
    the relative accuracy near 1e-12 even for ``p`` close to 1.

    Parameters
    ----------
    p : float
        Probability in (0, 1).
    q : int
        Degrees of freedom.
    """
    p = check_probability(p)
    q = _check_dof(q)
    if q == 2:
        return -2.0 * math.log1p(-p)

    upper = p > 0.5
    target = 1.0 - p if upper else p

    def residual(x):
        lo_tail, up_tail = _regularized_gamma(0.5 * q, 0.5 * x)
        # Increasing in x for both branches.
        return (target - up_tail) if upper else (lo_tail - target)

    h = 2.0 / (9.0 * q)
    x = q * (1.0 - h + std_normal_quantile(p) * math.sqrt(h)) ** 3
    if not x > 0.0:
        x = q * p ** (2.0 / q) * 1e-3 + 1e-300

    lo, hi = 0.0, max(2.0 * x, 1.0)
    while residual(hi) < 0.0:
        lo, hi = hi, 2.0 * hi

    for _ in range(200):
        f = residual(x)
        if f == 0.0:
            return x
        if f < 0.0:
            lo = max(lo, x)
        else:
            hi = min(hi, x)
        dens = chi_square_pdf(x, q)
        step_ok = dens > 0.0 and math.isfinite(dens)
        x_new = x - f / dens if step_ok else 0.5 * (lo + hi)
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-14 * x_new:
            return x_new
        x = x_new
    return x


@dataclass
class RngStream:
    """Counter-based random stream addressed by ``(master_seed, stream_id)``.

    Backed by Philox with the 128-bit key ``(master_seed, stream_id)``, so
    any stream is reachable in O(1) and its sequence does not depend on
    which worker draws it or in what order streams are created.
    """

    master_seed: int
    stream_id: int
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = int(getattr(self, name))
            if not 0 <= value < _UINT64:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")
            setattr(self, name, value)
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def complex_normal(self, size):
        """Circular CN(0, 1) draws: real and imaginary parts each N(0, 1/2)."""
        re = self.generator.standard_normal(size)
        im = self.generator.standard_normal(size)
        return (re + 1j * im) * math.sqrt(0.5)


def gaussian_draw(stream):
    """Draw two independent standard normal variates from ``stream``."""
    a, b = stream.standard_normal(2)
    return float(a), float(b)
