import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from widom_trace.coefficient import CoefficientRequest, compute_B
from widom_trace.operator import (AliasingWarning, convergence_study, discretize, kernel_transform,
                                  periodized_symbol, trace_difference)
from widom_trace.symbol import CauchySymbol, GaussianSymbol, PolynomialWindowSymbol
from widom_trace.testfn import analytic


def test_cauchy_kernel():
    # (1/2 pi) int e^{i x xi} / (1 + xi^2) = e^{-|x|} / 2
    x = np.arange(-40, 41) * 0.125
    assert np.allclose(kernel_transform(CauchySymbol(), x), 0.5 * np.exp(-np.abs(x)), rtol=0, atol=1e-13)


def test_gaussian_kernel():
    x = np.arange(0, 80) * 0.1
    expected = np.exp(-x * x / 4) / (2 * math.sqrt(math.pi))
    assert np.allclose(kernel_transform(GaussianSymbol(), x), expected, rtol=0, atol=1e-15)


def test_kernel_needs_uniform_grid():
    with pytest.raises(ValueError):
        kernel_transform(CauchySymbol(), np.array([0.0, 0.1, 0.25]))


def test_aliasing_warning_on_coarse_grid():
    # a narrow window seen with a step far too large to resolve it
    a = PolynomialWindowSymbol([1.0], (0.0, 0.01), width=0.002, smoothness=2)
    with pytest.warns(AliasingWarning):
        kernel_transform(a, np.arange(0, 3000) * 5.0)


@given(theta=st.floats(-3, 3), period=st.floats(4.0, 40.0))
def test_periodized_cauchy_closed_form(theta, period):
    # periods 2 pi / h with h <= 1.5; the image tail keeps only the leading |xi|^-2 term
    # sum_q 1/(1 + (x + q P)^2) = (pi/P) sinh(2 pi/P) / (cosh(2 pi/P) - cos(2 pi x/P))
    z = 2 * math.pi / period
    expected = (math.pi / period) * math.sinh(z) / (math.cosh(z) - math.cos(z * theta))
    got = float(periodized_symbol(CauchySymbol(), np.array([theta]), period)[0])
    assert got == pytest.approx(expected, rel=1e-12)


def test_matrix_is_hermitian_toeplitz():
    a = PolynomialWindowSymbol([0.5, 1.0], (-0.5, 1.5), width=0.5)  # not even
    op = discretize(a, 0.2, 40)
    A = op.matrix
    assert np.iscomplexobj(A)
    assert np.allclose(A, A.conj().T, atol=1e-15)
    assert np.allclose(np.diag(A, 3), A[0, 3])
    assert np.allclose(np.diag(A, -3), A[3, 0])
    assert op.L == pytest.approx(8.0)
    assert op.x[0] == pytest.approx(0.1)


def test_affine_gives_zero():
    assert trace_difference(CauchySymbol(), analytic("affine", coeffs=(1.0, 2.0)), 0.1, 64) == 0.0


def test_square_shortcut_matches_eigenvalues():
    a = GaussianSymbol(offset=0.2)
    sq = trace_difference(a, analytic("square"), 0.2, 128)
    eig = trace_difference(a, analytic("polynomial", coeffs=(0.0, 0.0, 1.0)), 0.2, 128)
    assert sq == pytest.approx(eig, rel=1e-10)


def test_section_length_does_not_matter_for_fast_decay():
    a, g = GaussianSymbol(), analytic("exp")
    v1 = trace_difference(a, g, 0.25, 64)
    v2 = trace_difference(a, g, 0.25, 128)
    assert v1 == pytest.approx(v2, abs=1e-12)


def test_gaussian_exp_matches_coefficient():
    a, g = GaussianSymbol(offset=0.3), analytic("exp")
    st_ = convergence_study(a, g, [(0.1, 200)])
    B = compute_B(CoefficientRequest(a, g, "direct-U")).value
    assert abs(st_.extrapolated - B) <= 3 * st_.error + 1e-9
    assert st_.h_ladder == [0.8, 0.4, 0.2, 0.1]


def test_convergence_study_cauchy_square():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        st_ = convergence_study(CauchySymbol(), analytic("square"), [(0.1, 256), (0.1, 512)])
    assert st_.extrapolated == pytest.approx(-1 / 16, rel=1e-3)
    assert abs(st_.extrapolated + 1 / 16) <= st_.error + 1e-4
    assert st_.values[0] != st_.values[1]
