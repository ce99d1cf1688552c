"""Finite sections of the Wiener-Hopf operator and the trace cross-check.

W(a) restricted to (0, L) is collocated at x_j = (j + 1/2) h, giving the
Toeplitz matrix A[j, l] = a_inf delta_jl + h k(x_j - x_l), where k is the
inverse Fourier transform of a - a_inf.  The numbers h k(n h) are exactly
the Fourier coefficients of the periodized symbol

    A(theta) = a_inf + sum_q b((theta + 2 pi q) / h),    b = a - a_inf,

so they are obtained by one FFT of A on a fine periodic grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import eigvalsh, toeplitz
from scipy.special import zeta

from .quadrature import observed_order, richardson_limit
from .symbol import Symbol
from .testfn import TestFunction

__all__ = [
    "AliasingWarning",
    "ConvergenceWarning",
    "RangeError",
    "OperatorDiscretization",
    "periodized_symbol",
    "kernel_transform",
    "discretize",
    "trace_difference",
    "TraceStudy",
    "convergence_study",
]


class AliasingWarning(RuntimeWarning):
    pass


class ConvergenceWarning(RuntimeWarning):
    pass


class RangeError(ValueError):
    """Eigenvalues left the range where the test function is usable."""


def periodized_symbol(a: Symbol, xi: np.ndarray, period: float, n_images: int = 400) -> np.ndarray:
    """sum_q b(xi + q period) with b = a - a_inf.

    Algebraic tails beyond n_images use the Hurwitz zeta sum of the leading
    |xi|^-decay term, whose coefficient is read off the symbol far out.
    """
    xi = np.asarray(xi, dtype=float)
    lo, hi = a.core()
    if a.is_algebraic():
        # the next tail term is O((Q period)^-(decay+1)); cover a fixed length
        Q = max(n_images, int(math.ceil(8000.0 / period)))
    else:
        Q = int(math.ceil(max(abs(lo), abs(hi)) / period)) + 1
    out = np.zeros_like(xi)
    for q in range(-Q, Q + 1):
        out += a(xi + q * period) - a.a_inf
    if a.is_algebraic():
        d = float(a.decay)
        far = 1e6 * max(abs(lo), abs(hi), period)
        coef = 0.5 * ((a(np.array(far)) - a.a_inf) + (a(np.array(-far)) - a.a_inf)) * far ** d
        u = xi / period
        out += coef * period ** -d * (zeta(d, Q + 1 + u) + zeta(d, Q + 1 - u))
    return out


def _grid_size(M: int, h: float, a: Symbol) -> int:
    # c_n must be negligible beyond n ~ P - M; kernel tails decay on the
    # symbol's feature scale, so allow many kernel lengths past the section
    feats = a.features()
    w = min([wd for _, wd in feats] or [1.0])
    need = 2 * M + int(math.ceil(200.0 / (w * h))) if not a.is_algebraic() else 4 * M
    return 1 << max(10, int(math.ceil(math.log2(need))))


def _symbol_on_circle(a: Symbol, h: float, P: int) -> np.ndarray:
    theta = 2 * math.pi * np.arange(P) / P
    theta = np.where(theta > math.pi, theta - 2 * math.pi, theta)
    return a.a_inf + periodized_symbol(a, theta / h, 2 * math.pi / h)


def _coefficients(values: np.ndarray) -> np.ndarray:
    """c_n = (1/P) sum_m A(theta_m) e^{-i n theta_m}, indexed n mod P."""
    return np.fft.fft(values) / len(values)


def kernel_transform(a: Symbol, x: np.ndarray, check_aliasing: bool = True) -> np.ndarray:
    """k(x) = (1/2 pi) int e^{i x xi} (a(xi) - a_inf) d xi on a uniform grid x = n h.

    ``x`` must be an integer multiple of its spacing h (e.g. np.arange(M) * h
    or a symmetric grid).  Real even symbols give real output.
    """
    x = np.asarray(x, dtype=float)
    steps = np.diff(np.unique(np.abs(x)))
    h = float(steps[steps > 0].min()) if np.any(steps > 0) else 1.0
    n = np.rint(x / h).astype(int)
    if np.max(np.abs(n * h - x)) > 1e-9 * max(1.0, np.abs(x).max()):
        raise ValueError("kernel_transform needs grid points at integer multiples of the spacing")
    M = int(np.abs(n).max()) + 1
    P = _grid_size(M, h, a)
    c = _coefficients(_symbol_on_circle(a, h, P) - a.a_inf)
    if check_aliasing:
        c2 = _coefficients(_symbol_on_circle(a, h, 2 * P) - a.a_inf)
        diff = np.max(np.abs(c2[n % (2 * P)] - c[n % P]))
        if diff > 1e-12 * max(np.abs(c).max(), 1e-300):
            warnings.warn(f"kernel changes by {diff:.2e} when the spectral grid doubles", AliasingWarning)
    k = np.conj(c[n % P]) / h  # coefficient of e^{+i n theta}
    if a.even:
        k = k.real
    return k


@dataclass
class OperatorDiscretization:
    h: float
    M: int
    a_inf: float
    coeffs: np.ndarray  # c_n, n = 0..M-1 (column) ; row uses conj for n < 0
    row: np.ndarray
    circle: np.ndarray = field(repr=False)  # A(theta_m) on the fine periodic grid
    spectral_tol: float = 0.0

    @property
    def L(self) -> float:
        return self.M * self.h

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.M) + 0.5) * self.h

    @property
    def matrix(self) -> np.ndarray:
        col = self.coeffs.copy()
        col[0] += self.a_inf
        row = self.row.copy()
        row[0] = col[0]
        A = toeplitz(col, row)
        if np.isrealobj(A):
            return 0.5 * (A + A.T)
        return 0.5 * (A + A.conj().T)

    def bulk_trace(self, g: TestFunction) -> float:
        """M times the mean of g over the periodized symbol."""
        return self.M * math.fsum(g(self.circle.real)) / len(self.circle)


def discretize(a: Symbol, h: float, M: int) -> OperatorDiscretization:
    P = _grid_size(M, h, a)
    circ = _symbol_on_circle(a, h, P)
    c = _coefficients(circ - a.a_inf)
    # A[j, l] = h k((j - l) h), and h k(n h) is the coefficient of e^{i n theta},
    # i.e. conj(c_n) for a real symbol
    cpos = np.conj(c[np.arange(M)])  # n = j - l >= 0
    cneg = np.conj(c[(-np.arange(M)) % P])  # n = j - l <= 0
    if a.even:
        cpos, cneg = cpos.real, cneg.real
    lo = float(circ.real.min())
    hi = float(circ.real.max())
    tol = 1e-10 * max(1.0, abs(lo), abs(hi))
    return OperatorDiscretization(h=h, M=M, a_inf=a.a_inf, coeffs=cpos, row=cneg,
                                  circle=circ.real if a.even else circ, spectral_tol=tol)


def trace_difference(a: Symbol, g: TestFunction, h: float, M: int,
                     op: OperatorDiscretization | None = None) -> float:
    """Boundary part of tr g(A) - tr W(g o a) for the section of length M h.

    The finite section has two boundary points, 0 and L, and each contributes
    the same amount, so half the matrix difference is returned.
    """
    op = op or discretize(a, h, M)
    aff = g.affine_coeffs
    if aff is not None:
        return 0.0
    if g.is_square:
        n = np.arange(1, M)
        c0 = op.coeffs[0] + op.a_inf
        trA2 = M * abs(c0) ** 2 + math.fsum((M - n) * (np.abs(op.coeffs[1:]) ** 2 + np.abs(op.row[1:]) ** 2))
        tr = g.amplitude * trA2
    else:
        lam = eigvalsh(op.matrix)
        circ = op.circle.real
        lo, hi = float(circ.min()), float(circ.max())
        span = max(hi - lo, 1.0)
        if lam.min() < lo - 1e-6 * span or lam.max() > hi + 1e-6 * span:
            raise RangeError(f"eigenvalues [{lam.min():.6g}, {lam.max():.6g}] leave the symbol range [{lo:.6g}, {hi:.6g}]")
        vals = g(lam)
        if not np.all(np.isfinite(vals)):
            raise RangeError("test function not finite on the spectrum")
        tr = math.fsum(vals)
    return 0.5 * (tr - op.bulk_trace(g))


@dataclass
class TraceStudy:
    h: list[float]
    M: list[int]
    values: list[float]
    extrapolated: float
    order: float
    error: float
    h_ladder: list[float] = field(default_factory=list)
    ladder_values: list[float] = field(default_factory=list)


def _romberg(hs, vals):
    """Eliminate h^2, h^4, ... from values at h ratio 2 (coarse to fine)."""
    row = list(vals)
    for k in range(1, len(row)):
        f = 4.0 ** k
        row = [(f * row[i + 1] - row[i]) / (f - 1) for i in range(len(row) - 1)]
    return row[0]


def _h_extrapolate(hs, vals):
    """Limit h -> 0 from an h-ladder with ratio 2; returns (limit, order, error).

    When the observed order is 2 the expansion is taken to be even in h and
    Romberg's table is used; its error is the gap to the table built
    without the finest value.  Otherwise one Richardson step with the
    observed order is taken and the whole correction counts as error.
    """
    order = observed_order(*vals[-3:], ratio=hs[-2] / hs[-1])
    if np.isfinite(order) and abs(order - 2) < 0.3:
        fine = _romberg(hs[1:], vals[1:])
        coarse = _romberg(hs[:-1], vals[:-1])
        return fine, order, abs(fine - coarse)
    if np.isfinite(order) and 0.5 <= order <= 8:
        fine = richardson_limit([h ** order for h in hs[-2:]], vals[-2:])
        return fine, order, abs(fine - vals[-1])
    return vals[-1], order, abs(vals[-1] - vals[-2])


def convergence_study(a: Symbol, g: TestFunction, schedule: Sequence[tuple[float, int]]) -> TraceStudy:
    """trace_difference along a schedule of (h, M) and its limit h -> 0.

    The limit is taken on an h-ladder at the final section length L: the
    values at (8h, 4h, 2h, h) for the final L, reusing schedule points where
    they match; the coarse sections are cheap since M shrinks.  The error
    adds the last change in L between equal-h schedule points.
    """
    hs = [float(h) for h, _ in schedule]
    Ms = [int(m) for _, m in schedule]
    vals = [trace_difference(a, g, h, m) for h, m in schedule]
    if len(vals) > 1 and not any(hh < hs[0] * (1 - 1e-12) for hh in hs[1:]):
        d1 = vals[-2] - vals[-3] if len(vals) > 2 else 0.0
        d2 = vals[-1] - vals[-2]
        if d1 * d2 < 0 and abs(d2) > 1e-12 * max(1.0, abs(vals[-1])):
            warnings.warn("trace values do not settle as L grows", ConvergenceWarning)
    L = hs[-1] * Ms[-1]
    ladder_h = [8 * hs[-1], 4 * hs[-1], 2 * hs[-1], hs[-1]]
    ladder_v = []
    for h in ladder_h:
        M = int(round(L / h))
        hit = [v for hh, mm, v in zip(hs, Ms, vals) if abs(hh - h) <= 1e-12 * h and mm == M]
        ladder_v.append(hit[0] if hit else trace_difference(a, g, L / M, M))
    if (ladder_v[3] - ladder_v[2]) * (ladder_v[2] - ladder_v[1]) < 0:
        warnings.warn("trace values do not converge monotonically in h", ConvergenceWarning)
    ext, order, err = _h_extrapolate(ladder_h, ladder_v)
    # truncation in L: last change between equal-h schedule points, if any
    same_h = [i for i in range(1, len(hs)) if abs(hs[i] - hs[i - 1]) <= 1e-12 * hs[i]]
    if same_h:
        i = same_h[-1]
        err += abs(vals[i] - vals[i - 1])
    return TraceStudy(h=hs, M=Ms, values=vals, extrapolated=ext, order=order, error=err,
                      h_ladder=ladder_h, ladder_values=ladder_v)
