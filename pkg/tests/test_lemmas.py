import math

import numpy as np
import pytest

from widom_trace import constants as K
from widom_trace.lemmas import SUITES, SuiteResult, _tally, calibrate_agamma2, run_suite


@pytest.mark.parametrize("name", list(SUITES))
def test_suites_pass_on_small_samples(name):
    r = run_suite(name, 300, seed=99)
    assert r.instances == 300
    assert r.passed, r
    assert 0 < r.max_ratio <= 1 + 1e-9


def test_suites_are_reproducible():
    assert run_suite("V_est", 100, seed=5) == run_suite("V_est", 100, seed=5)
    assert run_suite("V_est", 100, seed=5) != run_suite("V_est", 100, seed=6)


def test_tally_counts_violations_and_nans():
    r = _tally("x", [1.0, 2.0, math.nan, 0.5], [1.0, 1.0, 1.0, 1.0])
    assert r.violations == 2 and not r.passed
    assert r.max_ratio == 2.0
    assert not SuiteResult("empty", 0, 0, math.nan).passed


def test_calibration_is_below_frozen_constant():
    # a short recalibration must not exceed the frozen constant
    assert calibrate_agamma2(2000, seed=1) <= K.AGAMMA2_C


def test_closed_form_constants():
    assert K.C_V_bd(0.5) == 2.0
    assert K.C_V_est(0.25) == 8.0
    assert K.C_approx(0.8) == 4.0
    assert K.C_fdash(1.0) == 1.0
    assert K.C_Xab(0.5, 0.0) == 8.0
    assert K.C_agamma(2) == 9.0


def test_rigid_constant_is_sharp_for_pure_power():
    # V(s, x0; |t - x0|^k) = |s - x0|^k / k meets C_V_bd exactly
    from widom_trace.functionals import V_array
    from widom_trace.testfn import power
    for k in (0.1, 0.5, 1.0):
        v = float(V_array(power(k), 2.0, 0.0))
        assert v == pytest.approx(K.C_V_bd(k) * 2.0 ** k, rel=1e-12)
