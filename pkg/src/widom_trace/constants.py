"""Frozen constants of the inequality suites.

Constants with a closed-form derivation are written as functions of the
exponents.  ``AGAMMA2_C`` is the one empirical constant: it was calibrated
once by ``python -m widom_trace.lemmas --calibrate`` (seed 20240601,
200000 instances; maximum observed ratio 0.156, doubled and rounded up)
and must not be changed afterwards.
"""

from __future__ import annotations

# int_0^1 (1-t)^(kappa-1) dt
def C_V_bd(kappa: float) -> float:
    return 1.0 / kappa


# V_bd with the Hoelder constant 2 |||f|||_1 of a cusp function
def C_V_est(gamma: float) -> float:
    return 2.0 / gamma


# splitting V at 1 - mu
def C_approx(gamma: float) -> float:
    return max(4.0, 2.0 / gamma)


def C_fdash(delta: float) -> float:
    return 2.0 ** (1.0 - delta)


def C_Xab(gamma: float, delta: float) -> float:
    return 2.0 ** (2.0 - delta) / (gamma - delta)


C_ZEROS = 1.0


def C_agamma(N: int) -> float:
    return float((N + 1) ** 2)


# interval length cap r of the calibrated suite
AGAMMA2_R = 2.0
AGAMMA2_C = 0.32

SUITE_SEED = 12345
SUITE_SIZE = 10000

__all__ = ["C_V_bd", "C_V_est", "C_approx", "C_fdash", "C_Xab", "C_ZEROS", "C_agamma",
           "AGAMMA2_R", "AGAMMA2_C", "SUITE_SEED", "SUITE_SIZE"]
