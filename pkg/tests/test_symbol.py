import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import expit

from widom_trace.quadrature import DivergenceError
from widom_trace.symbol import (CauchySymbol, FermiSymbol, GaussianSymbol, PolynomialWindowSymbol,
                                SmoothnessError, Symbol, TabulatedSymbol, WeightedNormSpec,
                                make_symbol, symbol_eval, symbol_from_config, truncated_gagliardo,
                                weighted_norm, wnp_quasi_norm)

xis = st.floats(-6, 6, allow_nan=False)


@given(xi=xis)
def test_cauchy_derivatives(xi):
    a = CauchySymbol()
    d = 1 + xi * xi
    assert symbol_eval(a, xi) == pytest.approx(1 / d, rel=1e-14)
    assert symbol_eval(a, xi, 1) == pytest.approx(-2 * xi / d ** 2, rel=1e-12, abs=1e-15)
    assert symbol_eval(a, xi, 2) == pytest.approx((6 * xi * xi - 2) / d ** 3, rel=1e-12, abs=1e-15)


@given(xi=xis)
def test_gaussian_derivatives(xi):
    a = GaussianSymbol()
    e = math.exp(-xi * xi)
    assert symbol_eval(a, xi, 1) == pytest.approx(-2 * xi * e, rel=1e-12, abs=1e-300)
    assert symbol_eval(a, xi, 2) == pytest.approx((4 * xi * xi - 2) * e, rel=1e-12, abs=1e-300)


@given(xi=st.floats(-2, 2), T=st.floats(0.01, 1))
def test_fermi_first_derivative(xi, T):
    a = FermiSymbol(T)
    y = (xi * xi - 1) / T
    assert symbol_eval(a, xi, 1) == pytest.approx(-2 * xi / T * expit(y) * expit(-y), rel=1e-10, abs=1e-300)


@pytest.mark.parametrize("a", [FermiSymbol(0.3), GaussianSymbol(1.5), CauchySymbol(0.7),
                               PolynomialWindowSymbol([1.0, 0.5, -0.2], (-1.0, 1.0), 0.8, 4)])
@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_derivatives_against_finite_differences(a, k):
    x = np.linspace(-2.3, 2.1, 13) + 0.0123  # off the window joints
    h = 1e-5
    fd = (a(x + h, k) - a(x - h, k)) / (2 * h)
    scale = np.abs(a(x, k + 1)).max() + 1
    assert np.allclose(fd, a(x, k + 1), atol=1e-6 * scale)


def test_smoothness_error():
    with pytest.raises(SmoothnessError):
        PolynomialWindowSymbol([1.0], (-1, 1), 1.0, 3)(0.0, 4)
    with pytest.raises(SmoothnessError):
        CauchySymbol()(0.0, -1)


def test_offset_and_a_inf():
    a = GaussianSymbol(offset=-0.5)
    assert a.a_inf == -0.5
    assert symbol_eval(a, 0.0) == 0.5
    assert symbol_eval(a, 0.0, 2) == -2.0


@pytest.mark.parametrize("a,level,expected", [
    (FermiSymbol(0.1), 0.5, [-1.0, 1.0]),
    (CauchySymbol(), 0.5, [-1.0, 1.0]),
    (GaussianSymbol(), math.exp(-4), [-2.0, 2.0]),
])
def test_level_crossings(a, level, expected):
    assert np.allclose(a.level_crossings(level), expected, atol=1e-12)
    # the generic sampler finds the same points
    assert np.allclose(Symbol.level_crossings(a, level), expected, atol=1e-10)


def test_window_is_compactly_supported_and_smooth():
    a = PolynomialWindowSymbol([2.0, -1.0], (0.0, 1.0), width=0.5, smoothness=3)
    assert np.all(a(np.array([-0.6, -0.5, 1.5, 2.0])) == 0)
    for k in range(4):
        # matching values at the window joints
        for x in (-0.5, 0.0, 1.0, 1.5):
            assert symbol_eval(a, x - 1e-12, k) == pytest.approx(symbol_eval(a, x + 1e-12, k), abs=1e-6)


def test_tabulated_from_csv(tmp_path):
    x = np.linspace(-3, 3, 61)
    y = np.exp(-x ** 2) - math.exp(-9)
    p = tmp_path / "sym.csv"
    p.write_text("xi,a\n" + "\n".join(f"{u:.17g},{v:.17g}" for u, v in zip(x, y)))
    a = symbol_from_config({"family": "tabulated", "path": "sym.csv"}, base_dir=tmp_path)
    assert a.n_max == 2
    assert symbol_eval(a, 0.3) == pytest.approx(math.exp(-0.09) - math.exp(-9), abs=1e-4)
    assert symbol_eval(a, 10.0) == pytest.approx(y[0])
    with pytest.raises(ValueError):
        TabulatedSymbol([0, 1, 2], [0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        TabulatedSymbol([], [])


def test_factory_and_config():
    assert isinstance(make_symbol("fermi", T=0.2), FermiSymbol)
    with pytest.raises(ValueError):
        make_symbol("lorentz")
    with pytest.raises(ValueError):
        symbol_from_config({"T": 1.0})
    a = symbol_from_config({"family": "polynomial-window", "coeffs": [1.0], "support": [0, 1]})
    assert a.lo == 0 and a.hi == 1


def test_weighted_norm_cauchy_oracle():
    # sup (1 + |x|)^2 / (1 + x^2) = 2 at |x| = 1
    assert weighted_norm(CauchySymbol(), WeightedNormSpec(2.0, 0)) == pytest.approx(2.0, rel=1e-8)
    with pytest.raises(DivergenceError):
        weighted_norm(CauchySymbol(), WeightedNormSpec(3.0, 0))


def test_weighted_norm_grid_is_lower_bound():
    a = GaussianSymbol()
    spec = WeightedNormSpec(1.0, 2)
    full = weighted_norm(a, spec)
    assert weighted_norm(a, spec, grid=np.linspace(-3, 3, 11)) <= full


def test_wnp_quasi_norm_gaussian_oracle():
    # cells [n, n+1]: sup e^{-x^2} is attained at the endpoint closest to 0
    expected = 2 * math.fsum(math.exp(-n * n) for n in range(40))
    assert wnp_quasi_norm(GaussianSymbol(), 1.0, 0, math.inf) == pytest.approx(expected, rel=1e-12)


def test_wnp_quasi_norm_is_monotone_in_N():
    a = FermiSymbol(0.2)
    n0 = wnp_quasi_norm(a, 0.5, 0, 2.0, deriv=1)
    n1 = wnp_quasi_norm(a, 0.5, 1, 2.0, deriv=1)
    assert n1 >= n0 > 0


def test_full_gagliardo_cauchy_oracle():
    # int int |a(x) - a(y)|^2 / |x - y|^2 = int |w| |a^(w)|^2 dw = pi^2 / 2
    r = truncated_gagliardo(CauchySymbol(), 2.0, 0.0)
    assert r.value == pytest.approx(math.pi ** 2 / 2, rel=1e-7)
    with pytest.raises(DivergenceError):
        truncated_gagliardo(CauchySymbol(), 0.5, 0.0)


def test_truncated_gagliardo_decreases_with_cutoff():
    a = GaussianSymbol()
    v = [truncated_gagliardo(a, 0.5, c, orders=(6, 8)).value for c in (0.5, 1.0, 2.0)]
    assert v[0] > v[1] > v[2] > 0
