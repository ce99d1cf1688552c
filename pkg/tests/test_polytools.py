import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import trapezoid

from widom_trace.polytools import (RealPolynomial, poly_critical_points, poly_lp_norm, poly_sobolev_norm,
                                   real_roots, variation_abs_power, weighted_derivative_integral)


def from_roots(roots, lead=1.0):
    return RealPolynomial(np.polynomial.polynomial.polyfromroots(roots) * lead)


def test_roots_and_critical_points():
    p = from_roots([-1.0, 0.5, 2.0])
    assert np.allclose(real_roots(p, -5, 5), [-1.0, 0.5, 2.0], atol=1e-13)
    assert np.allclose(real_roots(p, 0.0, 1.0), [0.5])
    # p' = 3x^2 - 3x - 1.5 + ... computed directly
    crit = np.sort(np.roots(np.polyder(np.poly([-1.0, 0.5, 2.0]))))
    assert np.allclose(poly_critical_points(p, (-5, 5)), crit, atol=1e-13)
    assert poly_critical_points(RealPolynomial([3.0]), (0, 1)) == []
    assert real_roots(RealPolynomial([1.0, 0.0, 1.0]), -3, 3).size == 0


def test_double_root_found_once():
    p = from_roots([0.3, 0.3, -1.0])
    r = real_roots(p, -2, 2)
    assert len(r) == 2 and np.allclose(r, [-1.0, 0.3], atol=1e-7)


def test_variation_of_parabola():
    # |x^2 - 1|^g on [-2, 2]: 3^g -> 0 -> 1 -> 0 -> 3^g
    p = RealPolynomial([-1.0, 0.0, 1.0])
    for g in (0.3, 1.0):
        assert variation_abs_power(p, g, (-2, 2)) == pytest.approx(2 * 3 ** g + 2, rel=1e-13)
    assert variation_abs_power(p, 0.5, (1, 1)) == 0.0


@given(coeffs=st.lists(st.floats(-3, 3), min_size=2, max_size=6), g=st.floats(0.05, 1.0),
       lo=st.floats(-2, 2), w=st.floats(0.01, 3))
def test_variation_dominates_sampled_variation(coeffs, g, lo, w):
    p = RealPolynomial(coeffs)
    x = np.linspace(lo, lo + w, 2001)
    sampled = float(np.sum(np.abs(np.diff(np.abs(p(x)) ** g))))
    exact = variation_abs_power(p, g, (lo, lo + w))
    assert sampled <= exact * (1 + 1e-9) + 1e-12
    # the exact variation is also the integral of |d/dx |p|^g|
    assert weighted_derivative_integral(p, g, (lo, lo + w)) * g == pytest.approx(exact, rel=1e-12)


def test_weighted_derivative_integral_direct():
    # p = x on [1, 4]: int x^(g-1) = (4^g - 1) / g
    p = RealPolynomial([0.0, 1.0])
    assert weighted_derivative_integral(p, 0.5, (1, 4)) == pytest.approx((2 - 1) / 0.5)
    with pytest.raises(ValueError):
        weighted_derivative_integral(p, 0.0, (0, 1))


def test_lp_norms():
    p = RealPolynomial([0.0, 1.0])  # x
    assert poly_lp_norm(p, (-1, 2), 1.0) == pytest.approx(0.5 + 2.0, rel=1e-14)
    assert poly_lp_norm(p, (-1, 2), 2.0) == pytest.approx(math.sqrt(3.0), rel=1e-14)
    assert poly_lp_norm(p, (-1, 2), math.inf) == 2.0
    q = RealPolynomial([-1.0, 0.0, 1.0])
    assert poly_lp_norm(q, (-0.5, 0.5), math.inf) == 1.0  # interior critical point
    assert poly_sobolev_norm(q, (0, 3), 2, math.inf) == pytest.approx(8.0)


@given(coeffs=st.lists(st.floats(-3, 3), min_size=1, max_size=7), q=st.sampled_from([1.0, 2.0, 3.0]))
def test_lp_norm_matches_fine_quadrature(coeffs, q):
    p = RealPolynomial(coeffs)
    x = np.linspace(-1, 1.5, 200001)
    ref = trapezoid(np.abs(p(x)) ** q, x) ** (1 / q)
    assert poly_lp_norm(p, (-1, 1.5), q) == pytest.approx(ref, rel=1e-6, abs=1e-9)


def test_deriv_and_scaled():
    p = RealPolynomial([1.0, 2.0, 3.0, 0.0])
    assert p.degree == 2
    assert p.deriv(2).coeffs == (6.0,)
    assert p.deriv(3).degree == -1
    assert p.scaled(2).coeffs == (2.0, 4.0, 6.0)
