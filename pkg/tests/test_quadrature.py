import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from widom_trace.quadrature import (DEFAULT_EPS_SCHEDULE, MaxDepthExceeded, PVResult, adaptive_integrate,
                                    gauss_legendre, graded_breaks, observed_order, pv_double, pv_hilbert,
                                    richardson_limit, strip_integral, tanh_sinh)


def test_gauss_legendre_exact_for_degree_2n_minus_1():
    x, w = gauss_legendre(6)
    for d in range(12):
        assert np.dot(w, x ** d) == pytest.approx(1 / (d + 1), abs=1e-15)


def test_tanh_sinh_endpoint_singularities():
    t, tc, w, coarse = tanh_sinh()
    assert np.dot(w, np.log(tc)) == pytest.approx(-1.0, abs=1e-13)
    assert np.dot(w, t * np.log(t) + tc * np.log(tc)) == pytest.approx(-0.5, abs=1e-13)
    assert np.dot(w, t ** -0.5) == pytest.approx(2.0, abs=1e-10)
    # the embedded coarse rule sees the same integral
    assert np.dot(coarse, np.log(tc)) == pytest.approx(-1.0, abs=1e-8)


def test_adaptive_integrate_graded_left():
    v, e = adaptive_integrate(lambda x: x ** -0.5, 0.0, 1.0, grading="geometric-left", tol=1e-10)
    assert v == pytest.approx(2.0, abs=1e-7)
    v, e = adaptive_integrate(lambda x: np.log1p(-x), 0.0, 1.0, grading="geometric-right", tol=1e-12)
    assert v == pytest.approx(-1.0, abs=1e-10)


def test_adaptive_integrate_reversed_and_empty():
    assert adaptive_integrate(np.sin, 1.0, 1.0) == (0.0, 0.0)
    v, _ = adaptive_integrate(np.cos, 1.0, 0.0)
    assert v == pytest.approx(-math.sin(1.0), abs=1e-14)


def test_adaptive_integrate_max_depth():
    with pytest.raises(MaxDepthExceeded):
        adaptive_integrate(lambda x: np.sign(x - 0.3), 0.0, 1.0, tol=1e-30, max_panels=50)


def test_richardson_and_order():
    h = [0.1, 0.05, 0.025]
    vals = [1 + 3 * x ** 2 for x in h]
    assert observed_order(*vals) == pytest.approx(2.0, abs=1e-10)
    assert richardson_limit([x ** 2 for x in h[:2]], vals[:2]) == pytest.approx(1.0, abs=1e-13)
    assert math.isnan(observed_order(1.0, 2.0, 1.0))


@given(st.floats(-50, 50), st.floats(0.01, 10), st.lists(st.floats(-50, 50), max_size=4))
def test_graded_breaks_cover_and_increase(lo, width, targets):
    hi = lo + width
    br = graded_breaks(lo, hi, [(t, 1e-6) for t in targets])
    assert br[0] == lo and br[-1] == hi
    assert np.all(np.diff(br) > 0)


def test_default_eps_schedule():
    assert DEFAULT_EPS_SCHEDULE == tuple(2.0 ** -k for k in range(3, 13))


@pytest.mark.parametrize("xi", [0.0, 0.5, -0.5, 1.0, -1.0, 3.0, -3.0])
def test_pv_hilbert_cauchy_oracle(xi):
    r = pv_hilbert(lambda x: 1 / (1 + x * x), xi)
    assert r.value == pytest.approx(-xi / (1 + xi * xi), abs=1e-10)


def test_pv_hilbert_odd_integrand_at_zero():
    r = pv_hilbert(lambda x: x / (1 + x * x) ** 2, 0.0)
    assert r.value == pytest.approx(0.5, abs=1e-10)


def test_pv_result_rejects_increasing_eps():
    with pytest.raises(ValueError):
        PVResult(value=0.0, eps=[0.1, 0.2], eps_values=[0, 0], error=0.0)


def _uniform_rule(s, n):
    x, w = gauss_legendre(n)
    br = np.linspace(-12, 12, 97)
    h = np.diff(br)[:, None]
    return (br[:-1, None] + h * x).ravel(), (h * w).ravel()


def test_pv_double_zero_and_antisymmetric_kernels():
    r0 = pv_double(lambda x, y: np.zeros_like(x), 0.1, _uniform_rule)
    assert r0.value == 0.0
    anti = lambda x, y: (x - y) * np.exp(-x * x - y * y)
    r1 = pv_double(anti, 0.1, _uniform_rule)
    assert abs(r1.value) < 1e-13


def test_strip_integral_value_above_partial_sums():
    # int_{s>e} ds s^-2 int dx 2 exp(-x^2) s^2 e^{-s} over breaks
    paired = lambda x, s: 2 * np.exp(-x * x) * s * s * np.exp(-s)
    res = strip_integral(paired, _uniform_rule, [0.0, 0.5, 1.0, 4.0])
    c = 2 * math.sqrt(math.pi)
    assert res.value == pytest.approx(c, rel=1e-10)
    assert res.value_above(1.0) == pytest.approx(c * math.exp(-1.0), rel=1e-10)
    with pytest.raises(ValueError):
        res.value_above(0.7)
