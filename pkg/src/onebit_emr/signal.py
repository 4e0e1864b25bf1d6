"""Snapshot synthesis under the noise-only and signal-present hypotheses."""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import RngStream

__all__ = [
    "Hypothesis",
    "ScenarioConfig",
    "db_to_linear",
    "generate_frame",
    "generate_frames",
    "noise_only",
    "population_covariance",
    "single_pu",
    "steering_vector",
]

DEFAULT_PU_ANGLE = -math.pi / 3


class Hypothesis(enum.Enum):
    H0 = "H0"
    H1 = "H1"


def db_to_linear(db):
    return 10.0 ** (float(db) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """A sensing scenario.

    Parameters
    ----------
    m : int
        Number of antennas.
    n : int
        Number of snapshots per frame.
    noise_power : float
        Total noise power per complex entry (real and imaginary parts each
        carry half).
    signal_power : float
        Power of each primary user.
    pu_angles : tuple of float
        Arrival angles in radians, one per primary user.
    hypothesis : Hypothesis
        ``H0`` ignores every signal term.
    """

    m: int
    n: int
    noise_power: float = 1.0
    signal_power: float = 0.0
    pu_angles: tuple = ()
    hypothesis: Hypothesis = Hypothesis.H0

    def __post_init__(self):
        object.__setattr__(self, "pu_angles", tuple(float(a) for a in self.pu_angles))
        object.__setattr__(self, "hypothesis", Hypothesis(self.hypothesis))
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        if self.signal_power < 0:
            raise ValueError("signal_power must be non-negative")
        for angle in self.pu_angles:
            if not abs(angle) < math.pi / 2:
                raise ValueError(f"PU angle must lie in (-pi/2, pi/2), got {angle!r}")
        if self.hypothesis is Hypothesis.H1 and (self.d < 1 or self.signal_power <= 0):
            raise ValueError("H1 needs at least one PU angle and positive signal power")

    @property
    def d(self):
        return len(self.pu_angles)

    @property
    def c(self):
        return self.m / self.n

    @property
    def snr(self):
        return self.signal_power / self.noise_power

    @property
    def snr_db(self):
        return 10.0 * math.log10(self.snr) if self.snr > 0 else -math.inf

    def as_h0(self):
        return noise_only(self.m, self.n, self.noise_power)


def noise_only(m, n, noise_power=1.0):
    return ScenarioConfig(m=m, n=n, noise_power=noise_power)


def single_pu(m, n, snr_db, angle=DEFAULT_PU_ANGLE, noise_power=1.0):
    """H1 scenario with one PU whose SNR is ``signal_power / noise_power``."""
    return ScenarioConfig(
        m=m,
        n=n,
        noise_power=noise_power,
        signal_power=noise_power * db_to_linear(snr_db),
        pu_angles=(angle,),
        hypothesis=Hypothesis.H1,
    )


def steering_vector(angle, m):
    """Half-wavelength ULA response, element ``k`` is ``exp(i pi k sin(angle))``."""
    if not abs(angle) < math.pi / 2:
        raise ValueError(f"angle must lie in (-pi/2, pi/2), got {angle!r}")
    return np.exp(1j * math.pi * np.arange(m) * math.sin(angle))


def population_covariance(config):
    """``R = sigma_s^2 H H^H + tau I`` (exactly ``tau I`` under H0)."""
    m = config.m
    R = config.noise_power * np.eye(m, dtype=complex)
    if config.hypothesis is Hypothesis.H1:
        H = np.column_stack([steering_vector(a, m) for a in config.pu_angles])
        R = R + config.signal_power * (H @ H.conj().T)
        R = 0.5 * (R + R.conj().T)
    return R


@dataclass
class _Synthesizer:
    """Cholesky factor of R cached for repeated frame draws."""

    config: ScenarioConfig
    factor: np.ndarray = field(init=False, repr=False)
    white: bool = field(init=False)

    def __post_init__(self):
        self.white = self.config.hypothesis is Hypothesis.H0
        if self.white:
            self.factor = math.sqrt(self.config.noise_power)
        else:
            self.factor = np.linalg.cholesky(population_covariance(self.config))

    def draw(self, stream):
        w = stream.complex_normal((self.config.m, self.config.n))
        if self.white:
            return self.factor * w
        return self.factor @ w


def generate_frame(config, stream):
    """Draw one m x n frame whose columns are i.i.d. CN(0, R).

    Parameters
    ----------
    config : ScenarioConfig
    stream : RngStream
        Fully determines the frame.
    """
    return _Synthesizer(config).draw(stream)


def generate_frames(config, master_seed, stream_ids):
    """Stack of frames, one per stream id, with shape ``(len(stream_ids), m, n)``."""
    synth = _Synthesizer(config)
    out = np.empty((len(stream_ids), config.m, config.n), dtype=complex)
    for k, sid in enumerate(stream_ids):
        out[k] = synth.draw(RngStream(master_seed, int(sid)))
    return out
