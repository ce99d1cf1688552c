import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from widom_trace.functionals import (U_array, V_array, X_array, Y_array, eval_U, eval_V, eval_X,
                                     eval_Y)
from widom_trace.testfn import CuspError, analytic, holder_power, power

# V(s1, s2) computed once with mpmath at 30 digits (u = 1 - t, breakpoints at the cusp preimage)
V_ANCHORS = [
    (power(0.5), 0.3, -0.7, -0.6863563302648346),
    (power(0.3), 2.0, 1e-9, 4.055715044428741),
    (power(0.3), -2.0, 1e-9, 4.0525211870814842),
    (power(0.5), 0.7003483349764006, 3.126828718722047e-164, 1.673736341215546),
    (analytic("exp"), -1.0, 2.0, -12.479201980987486),
    (power(0.5, cutoff="gaussian"), 0.5, -0.2, -0.31083069890344632),
]


@pytest.mark.parametrize("g,s1,s2,expected", V_ANCHORS)
def test_V_matches_high_precision(g, s1, s2, expected):
    v, e = V_array(g, s1, s2, with_error=True)
    assert abs(v - expected) <= 1e-13 * max(1.0, abs(expected))
    assert e < 1e-12 * max(1.0, abs(expected))


def test_V_from_the_cusp_point():
    # V(s1, x0) = int (|s1 - x0| (1-t))^g / (1-t) dt = |s1 - x0|^g / g
    f = power(0.1, x0=1.0)
    assert float(V_array(f, 1.5, 1.0)) == pytest.approx(0.5 ** 0.1 / 0.1, rel=1e-13)


def test_U_abs_anchor():
    assert float(U_array(power(1.0), -1.0, 1.0)) == pytest.approx(-4 * math.log(2), abs=1e-12)
    # the quadrature path (cutoff disables the closed form) agrees
    g = power(1.0, cutoff="polynomial", coeffs=(1.0,))
    assert float(U_array(g, -1.0, 1.0)) == pytest.approx(-4 * math.log(2), abs=1e-10)


def test_U_square_closed_form():
    s1, s2 = np.array([0.3, -2.0]), np.array([1.1, 5.0])
    assert np.allclose(U_array(analytic("square"), s1, s2), -(s1 - s2) ** 2, rtol=0, atol=1e-15)
    assert eval_U(analytic("square"), 0.3, 1.1).method == "closed-form"


def test_affine_functionals_vanish():
    g = analytic("affine", coeffs=(2.0, -3.0))
    assert float(U_array(g, 0.1, 0.9)) == 0.0
    assert float(V_array(g, 0.1, 0.9)) == pytest.approx(-3.0 * (0.1 - 0.9))


def test_U_square_by_quadrature():
    g = analytic("polynomial", coeffs=(0.0, 0.0, 1.0, 1e-30))
    s1, s2 = np.linspace(-2, 2, 7), np.linspace(3, -1, 7)
    assert np.allclose(U_array(g, s1, s2), -(s1 - s2) ** 2, atol=1e-12)


finite = st.floats(-3, 3, allow_nan=False)
G_SMOOTH = [analytic("exp"), analytic("square"), analytic("polynomial", coeffs=(1.0, -2.0, 0.5, 0.3))]
G_CUSP = [power(0.5), power(0.2, x0=0.3, cutoff="cauchy"), power(0.8, x0=-0.4, cutoff="gaussian"),
          holder_power(0.5, x0=0.1)]


@pytest.mark.parametrize("g", G_SMOOTH + G_CUSP)
@given(s1=finite, s2=finite)
def test_U_is_sum_of_two_V(g, s1, s2):
    u, eu = U_array(g, s1, s2, with_error=True)
    v1, e1 = V_array(g, s1, s2, with_error=True)
    v2, e2 = V_array(g, s2, s1, with_error=True)
    tol = 1e-8 if g.smooth else 1e-6
    assert abs(u - (v1 + v2)) <= tol * max(1.0, abs(u))


@pytest.mark.parametrize("g", G_SMOOTH + G_CUSP)
def test_V_vanishes_on_diagonal(g):
    s = np.array([-1.0, 0.0, 0.25, 2.0])
    assert np.all(V_array(g, s, s) == 0)
    assert np.all(U_array(g, s, s) == 0)


@given(s1=finite, s2=finite, c=st.floats(0.1, 10))
def test_V_is_homogeneous_for_pure_powers(s1, s2, c):
    # |c t|^g = c^g |t|^g
    f = power(0.4)
    lhs = float(V_array(f, c * s1, c * s2))
    rhs = c ** 0.4 * float(V_array(f, s1, s2))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-13)


@given(s1=finite, s2=finite)
def test_U_is_symmetric(s1, s2):
    g = power(0.6, x0=0.2, cutoff="cauchy")
    assert float(U_array(g, s1, s2)) == pytest.approx(float(U_array(g, s2, s1)), rel=1e-9, abs=1e-12)


@given(s1=finite, s2=finite)
def test_U_concave_sign(s1, s2):
    # g convex => chord above graph => U <= 0
    assert float(U_array(analytic("exp"), s1, s2)) <= 1e-12


def test_error_estimates_cover_errors_for_random_pairs(rng):
    g = power(0.5)
    s1 = rng.uniform(-2, 2, 50)
    s2 = s1 + rng.choice([-1, 1], 50) * 10 ** rng.uniform(-12, 0, 50)
    # the pure power is homogeneous, so compare with the scaled evaluation
    v, e = V_array(g, s1, s2, with_error=True)
    v2 = 2.0 ** -0.5 * V_array(g, 2 * s1, 2 * s2)
    assert np.all(np.abs(v - v2) <= 10 * e + 1e-14 * np.abs(v))


def test_Y_divided_difference_and_switch():
    g = analytic("exp")
    assert float(Y_array(g, 0.0, 1.0)) == pytest.approx(math.e - 1, rel=1e-14)
    y = eval_Y(g, 0.5, 0.5 + 1e-9)
    assert y.method == "graded-quadrature"
    assert y.value == pytest.approx(math.exp(0.5 + 5e-10), rel=1e-14)
    assert eval_Y(g, 0.0, 1.0).method == "divided-difference"


def test_X_definition_and_cusp_guard():
    f = power(0.5)
    s1, s2 = 0.25, 1.0
    assert eval_X(f, s1, s2).value == pytest.approx((1.0 - 0.5) / 0.75 - 0.5 * 0.25 ** -0.5, rel=1e-14)
    with pytest.raises(CuspError):
        X_array(f, 0.0, 1.0)


def test_eval_V_method_labels():
    assert eval_V(power(0.5), 1.0, -1.0).method == "graded-quadrature"
    assert eval_V(power(0.5), 1.0, 2.0).method == "parts-form"
    assert eval_V(power(1.0), 1.0, -1.0).method == "closed-form"
