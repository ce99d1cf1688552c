"""Exact computations for real polynomials on intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .quadrature import gauss_legendre

__all__ = [
    "RealPolynomial",
    "real_roots",
    "poly_critical_points",
    "variation_abs_power",
    "weighted_derivative_integral",
    "poly_lp_norm",
    "poly_sobolev_norm",
]


@dataclass(frozen=True)
class RealPolynomial:
    """Polynomial with real coefficients in ascending degree."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Sequence[float]):
        c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
        object.__setattr__(self, "coeffs", tuple(c) if len(c) else (0.0,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1 if any(self.coeffs) else -1

    @property
    def poly(self) -> Polynomial:
        return Polynomial(self.coeffs)

    def __call__(self, x):
        return self.poly(np.asarray(x, dtype=float))

    def deriv(self, k: int = 1) -> "RealPolynomial":
        if k == 0:
            return self
        return RealPolynomial(self.poly.deriv(k).coef)

    def scaled(self, c: float) -> "RealPolynomial":
        return RealPolynomial(np.asarray(self.coeffs) * c)


def real_roots(p: RealPolynomial, lo: float, hi: float) -> np.ndarray:
    """Distinct real roots in [lo, hi]: companion eigenvalues plus a Newton step."""
    if p.degree < 1:
        return np.array([])
    P = p.poly
    c = np.asarray(p.coeffs)
    # leading terms negligible on the interval only move roots far outside it
    reach = max(1.0, abs(lo), abs(hi))
    size = np.abs(c) * reach ** np.arange(len(c))
    keep = np.nonzero(size > 1e-15 * size.max())[0]
    c = c[: keep[-1] + 1]
    if len(c) < 2:
        return np.array([])
    z = Polynomial(c).roots()
    span = hi - lo
    scale = max(1.0, np.abs(z).max()) if len(z) else 1.0
    x = z.real[np.abs(z.imag) <= 1e-7 * scale]
    dP = P.deriv()
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        step = P(x) / dP(x)
    x = np.where(np.isfinite(step) & (np.abs(step) < 1e-3 * scale), x - step, x)
    # a double root splits into a pair about sqrt(eps) apart
    tol = max(1e-10 * span, 1e-7 * reach)
    x = np.sort(x[(x >= lo - tol) & (x <= hi + tol)])
    x = np.clip(x, lo, hi)
    out: list[float] = []
    for r in x:
        if not out or r - out[-1] > tol:
            out.append(float(r))
    return np.asarray(out)


def poly_critical_points(p: RealPolynomial, interval: tuple[float, float]) -> list[float]:
    """Sorted distinct roots of p' in the interval."""
    if p.degree < 1:
        return []
    return [float(x) for x in real_roots(p.deriv(), *interval)]


def _monotone_breaks(p: RealPolynomial, lo: float, hi: float) -> np.ndarray:
    pts = [lo, hi]
    pts.extend(real_roots(p, lo, hi))
    pts.extend(poly_critical_points(p, (lo, hi)))
    return np.unique(np.asarray(pts))


def variation_abs_power(p: RealPolynomial, gamma: float, interval: tuple[float, float]) -> float:
    """Total variation of |p|^gamma on the interval.

    |p| is monotone between consecutive roots of p and p', so the variation
    is the sum of endpoint increments.
    """
    lo, hi = interval
    if hi <= lo:
        return 0.0
    br = _monotone_breaks(p, lo, hi)
    vals = np.abs(p(br)) ** gamma
    return math.fsum(np.abs(np.diff(vals)))


def weighted_derivative_integral(p: RealPolynomial, gamma: float,
                                 interval: tuple[float, float]) -> float:
    """int_I |p'| |p|^(gamma-1), via the antiderivative |p|^gamma / gamma."""
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    return variation_abs_power(p, gamma, interval) / gamma


def poly_lp_norm(p: RealPolynomial, interval: tuple[float, float], q: float) -> float:
    """L^q norm of p on the interval (q may be inf)."""
    lo, hi = interval
    if math.isinf(q):
        pts = np.concatenate([[lo, hi], poly_critical_points(p, interval)]) if p.degree >= 1 else np.array([lo, hi])
        return float(np.max(np.abs(p(pts))))
    br = np.unique(np.concatenate([[lo, hi], real_roots(p, lo, hi)]))
    n = max(8, (p.degree * int(math.ceil(q)) + 2) // 2 + 4)
    x, w = gauss_legendre(n)
    total = 0.0
    for a, b in zip(br[:-1], br[1:]):
        total += (b - a) * float(np.dot(w, np.abs(p(a + (b - a) * x)) ** q))
    return total ** (1.0 / q)


def poly_sobolev_norm(p: RealPolynomial, interval: tuple[float, float], N: int, q: float) -> float:
    """max_{k <= N} ||p^(k)||_{L^q(I)}."""
    return max(poly_lp_norm(p.deriv(k), interval, q) for k in range(N + 1))
