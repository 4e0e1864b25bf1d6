"""Flop and transistor accounting for computing the EMR statistic in hardware."""

import enum
from dataclasses import dataclass

__all__ = [
    "CostReport",
    "CostScheme",
    "TRANSISTORS_PER_FLOP",
    "cost_report",
    "flop_count",
    "transistor_count",
]

# 8-bit flop: I and Q multipliers (748 each) sharing one full adder (10).
EIGHT_BIT_MULTIPLIER = 748
EIGHT_BIT_ADDER = 10
# One-bit multiply is an XNOR gate.
ONE_BIT_XNOR = 2


class CostScheme(enum.Enum):
    EIGHT_BIT = "8bit"
    ONE_BIT = "1bit"


TRANSISTORS_PER_FLOP = {
    CostScheme.EIGHT_BIT: 2 * EIGHT_BIT_MULTIPLIER + EIGHT_BIT_ADDER,
    CostScheme.ONE_BIT: ONE_BIT_XNOR,
}

# Flop multiplier relative to m^2 (n + 1): the one-bit SCM is 2m x 2m.
_FLOP_FACTOR = {CostScheme.EIGHT_BIT: 1, CostScheme.ONE_BIT: 4}


def _check(m, n):
    for name, v in (("m", m), ("n", n)):
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v!r}")
    return int(m), int(n)


def flop_count(scheme, m, n):
    """Flops to form the SCM and its EMR: ``m^2 (n+1)``, four times that for one-bit."""
    m, n = _check(m, n)
    return _FLOP_FACTOR[CostScheme(scheme)] * m * m * (n + 1)


def transistor_count(scheme, m, n):
    scheme = CostScheme(scheme)
    return TRANSISTORS_PER_FLOP[scheme] * flop_count(scheme, m, n)


@dataclass(frozen=True)
class CostReport:
    scheme: CostScheme
    m: int
    n: int
    flops: int
    transistors: int


def cost_report(scheme, m, n):
    scheme = CostScheme(scheme)
    return CostReport(scheme, int(m), int(n), flop_count(scheme, m, n), transistor_count(scheme, m, n))
