"""Singular and principal-value quadrature engines.

Everything here works on fixed node sets (Gauss-Legendre panels, tanh-sinh
rules) so that the heavy integrands elsewhere in the package can be
evaluated in vectorized form.
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

__all__ = [
    "MaxDepthExceeded",
    "DivergenceError",
    "Panel",
    "PVResult",
    "StripResult",
    "gauss_legendre",
    "tanh_sinh",
    "graded_breaks",
    "panel_rule",
    "adaptive_integrate",
    "richardson_limit",
    "observed_order",
    "pv_hilbert",
    "strip_integral",
    "pv_double",
    "DEFAULT_EPS_SCHEDULE",
]

DEFAULT_EPS_SCHEDULE = tuple(2.0 ** -k for k in range(3, 13))


class MaxDepthExceeded(RuntimeError):
    """Adaptive refinement stalled before reaching the requested tolerance."""


class DivergenceError(RuntimeError):
    """An integral does not settle as its truncation is relaxed."""


@dataclass(frozen=True)
class Panel:
    a: float
    b: float
    grading: str = "uniform"  # uniform | geometric-left | geometric-right
    nodes: int = 10

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or not self.b > self.a:
            raise ValueError(f"invalid panel [{self.a}, {self.b}]")


@dataclass
class PVResult:
    value: float
    eps: list[float]
    eps_values: list[float]
    error: float
    direct: float = float("nan")

    def __post_init__(self):
        if any(e2 >= e1 for e1, e2 in zip(self.eps, self.eps[1:])):
            raise ValueError("eps sequence must be strictly decreasing")


# ----------------------------------------------------------------------------
# fixed rules
# ----------------------------------------------------------------------------

@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def tanh_sinh(level: int = 3, xmax: float = 6.0):
    """Tanh-sinh rule on [0, 1] with step 2**-level.

    Returns ``(t, tc, w, coarse)`` where ``tc = 1 - t`` is computed without
    cancellation and ``coarse`` is a weight vector for the rule with twice the
    step (zero on the odd nodes), usable as an embedded error estimate.
    """
    h = 2.0 ** -level
    k = np.arange(-int(math.ceil(xmax / h)), int(math.ceil(xmax / h)) + 1)
    x = k * h
    q = math.pi * np.sinh(x)
    t = expit(q)
    tc = expit(-q)
    # dt/dx = pi cosh(x) t (1 - t)
    w = h * math.pi * np.cosh(x) * t * tc
    coarse = np.where(k % 2 == 0, 2.0 * w, 0.0)
    for arr in (t, tc, w, coarse):
        arr.setflags(write=False)
    return t, tc, w, coarse


def graded_breaks(lo: float, hi: float, targets: Sequence[tuple[float, float]] = (),
                  ratio: float = 0.25) -> np.ndarray:
    """Panel breakpoints on [lo, hi] graded geometrically toward targets.

    ``targets`` holds ``(position, hmin)`` pairs; panels shrink by ``ratio``
    toward each position until they are no longer than ``hmin``.
    Positions outside [lo, hi] are ignored.
    """
    if not hi > lo:
        raise ValueError("empty interval")
    pts: dict[float, float] = {}
    for x, hmin in targets:
        if lo <= x <= hi and hmin > 0:
            pts[float(x)] = min(hmin, pts.get(float(x), np.inf))
    knots = sorted(set(pts) | {lo, hi})
    # merge near-duplicates
    merged = [knots[0]]
    for x in knots[1:]:
        if x - merged[-1] <= 1e-15 * max(1.0, abs(x)):
            if x in pts:
                pts[merged[-1]] = min(pts.get(merged[-1], np.inf), pts[x])
            continue
        merged.append(x)
    out = [merged[0]]
    for x0, x1 in zip(merged, merged[1:]):
        half = 0.5 * (x1 - x0)
        left = []
        if x0 in pts:
            d = half * ratio
            while d > pts[x0]:
                left.append(x0 + d)
                d *= ratio
            left.append(x0 + d)
        right = []
        if x1 in pts:
            d = half * ratio
            while d > pts[x1]:
                right.append(x1 - d)
                d *= ratio
            right.append(x1 - d)
        seg = sorted(set(v for v in left + [x0 + half] + right if x0 < v < x1))
        out.extend(seg)
        out.append(x1)
    return np.unique(np.asarray(out))


def panel_rule(breaks: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite n-point Gauss-Legendre rule over consecutive breakpoints."""
    x, w = gauss_legendre(n)
    a = breaks[:-1, None]
    h = np.diff(breaks)[:, None]
    return (a + h * x).ravel(), (h * w).ravel()


# ----------------------------------------------------------------------------
# adaptive 1D integration
# ----------------------------------------------------------------------------

def _initial_panels(a: float, b: float, grading: str, depth: int = 30) -> list[tuple[float, float]]:
    if grading == "uniform":
        return [(a, b)]
    L = b - a
    cuts = [L * 0.5 ** k for k in range(depth + 1)]
    if grading == "geometric-left":
        pts = sorted({a} | {a + c for c in cuts})
    elif grading == "geometric-right":
        pts = sorted({b} | {b - c for c in cuts})
    elif grading == "geometric-both":
        half = 0.5 * L
        pts = sorted({a, b} | {a + half * 0.5 ** k for k in range(depth + 1)}
                     | {b - half * 0.5 ** k for k in range(depth + 1)})
    else:
        raise ValueError(f"unknown grading {grading!r}")
    return list(zip(pts[:-1], pts[1:]))


def _gauss_pair(fn, a, b, n=10):
    x1, w1 = gauss_legendre(n)
    x2, w2 = gauss_legendre(2 * n + 1)
    h = b - a
    v1 = h * np.dot(w1, fn(a + h * x1))
    v2 = h * np.dot(w2, fn(a + h * x2))
    return float(v2), float(abs(v2 - v1))


def adaptive_integrate(fn: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                       grading: str = "uniform", tol: float = 1e-12,
                       max_panels: int = 4000) -> tuple[float, float]:
    """Globally adaptive Gauss-Legendre quadrature with graded start mesh.

    ``fn`` must accept a NumPy array.  Returns ``(value, error)``; the error
    is the sum of per-panel differences between 10- and 21-point rules.
    """
    if b == a:
        return 0.0, 0.0
    if b < a:
        v, e = adaptive_integrate(fn, b, a, grading={"geometric-left": "geometric-right",
                                                      "geometric-right": "geometric-left"}.get(grading, grading),
                                  tol=tol, max_panels=max_panels)
        return -v, e
    heap = []
    for pa, pb in _initial_panels(a, b, grading):
        v, e = _gauss_pair(fn, pa, pb)
        heapq.heappush(heap, (-e, pa, pb, v))
    while True:
        total_err = math.fsum(-item[0] for item in heap)
        if total_err <= tol:
            break
        if len(heap) >= max_panels:
            raise MaxDepthExceeded(f"error {total_err:.3e} > tol {tol:.1e} after {len(heap)} panels")
        e, pa, pb, v = heapq.heappop(heap)
        m = 0.5 * (pa + pb)
        if not (pa < m < pb):
            raise MaxDepthExceeded("panel width reached floating-point resolution")
        for qa, qb in ((pa, m), (m, pb)):
            vq, eq = _gauss_pair(fn, qa, qb)
            heapq.heappush(heap, (-eq, qa, qb, vq))
    items = sorted(heap, key=lambda it: it[1])
    return math.fsum(it[3] for it in items), math.fsum(-it[0] for it in items)


# ----------------------------------------------------------------------------
# extrapolation
# ----------------------------------------------------------------------------

def richardson_limit(h: Sequence[float], values: Sequence[float]) -> float:
    """Polynomial extrapolation of values(h) to h = 0 (Neville's scheme)."""
    h = list(map(float, h))
    p = list(map(float, values))
    n = len(p)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (h[i] * p[i + 1] - h[i + m] * p[i]) / (h[i] - h[i + m])
    return p[0]


def observed_order(v1: float, v2: float, v3: float, ratio: float = 2.0) -> float:
    """Empirical convergence order from three successively refined values."""
    d1, d2 = v2 - v1, v3 - v2
    if d1 == 0 or d2 == 0 or d1 / d2 <= 0:
        return float("nan")
    return math.log(abs(d1 / d2)) / math.log(ratio)


def _eps_extrapolate(eps, vals, k=4):
    r1 = richardson_limit(eps[-k:], vals[-k:])
    r0 = richardson_limit(eps[-k - 1:-1], vals[-k - 1:-1]) if len(eps) > k else vals[-1]
    return r1, abs(r1 - r0)


# ----------------------------------------------------------------------------
# Hilbert transform
# ----------------------------------------------------------------------------

def pv_hilbert(u: Callable[[np.ndarray], np.ndarray], xi: float,
               eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
               scale: float = 1.0, tol: float = 1e-13) -> PVResult:
    """(1/pi) PV int u(eta) / (eta - xi) d eta by symmetric exclusion.

    The points xi + s and xi - s are paired before integrating in s, so the
    odd singularity cancels and every partial integral is regular.  ``scale``
    is the length on which u varies (u is assumed to be centred near 0).
    """
    eps = sorted(map(float, eps_schedule), reverse=True)

    def q(s):
        s = np.asarray(s, dtype=float)
        return (u(xi + s) - u(xi - s)) / s

    # far part: [eps_0, inf) split at the image of the origin
    ax = abs(xi)
    cuts = [eps[0]]
    for c in (ax - scale, ax + scale, 2 * ax + 10 * scale):
        if c > cuts[-1]:
            cuts.append(c)
    far = 0.0
    err = 0.0
    for a, b in zip(cuts, cuts[1:]):
        v, e = adaptive_integrate(q, a, b, tol=tol)
        far += v
        err += e
    S = cuts[-1]
    v, e = adaptive_integrate(lambda r: q(S / r) * S / r ** 2, 0.0, 1.0,
                              grading="geometric-left", tol=tol)
    far += v
    err += e
    vals = [far]
    for e0, e1 in zip(eps, eps[1:]):
        v, e = adaptive_integrate(q, e1, e0, tol=tol * 1e-2)
        vals.append(vals[-1] + v)
        err += e
    inner, e = adaptive_integrate(q, 0.0, eps[-1], tol=tol * 1e-2)
    direct = (vals[-1] + inner) / math.pi
    vals = [x / math.pi for x in vals]
    limit, ext_err = _eps_extrapolate(eps, vals)
    total_err = ext_err + abs(limit - direct) + err / math.pi + 1e-15 * max(1.0, abs(limit))
    return PVResult(value=limit, eps=eps, eps_values=vals, error=total_err, direct=direct)


# ----------------------------------------------------------------------------
# integrals over {|xi1 - xi2| > eps} in rotated coordinates
# ----------------------------------------------------------------------------

@dataclass
class StripResult:
    value: float
    error: float
    coarse: float
    s_breaks: np.ndarray
    panel_values: np.ndarray = field(repr=False)
    eps: list[float] = field(default_factory=list)
    eps_values: list[float] = field(default_factory=list)

    def value_above(self, eps: float) -> float:
        """Contribution of s > eps; eps must be a breakpoint."""
        idx = np.searchsorted(self.s_breaks, eps)
        if idx >= len(self.s_breaks) or not np.isclose(self.s_breaks[idx], eps, rtol=1e-14, atol=0):
            raise ValueError(f"{eps} is not a panel breakpoint")
        return math.fsum(self.panel_values[idx:])


_TAIL_BREAKS = np.array([0.0, 1 / 64, 1 / 16, 1 / 4, 0.5, 1.0])


def _outer_nodes(a, b, n, q=1.0):
    if np.isinf(b):
        r, wr = panel_rule(_TAIL_BREAKS, n)
        return a / r, wr * a / r ** 2
    x, w = gauss_legendre(n)
    if a == 0 and q != 1.0:
        # s = b u**q flattens an s**(1/q - 1) singularity at the origin
        return b * x ** q, b * q * x ** (q - 1) * w
    return a + (b - a) * x, (b - a) * w


def strip_integral(paired: Callable[[np.ndarray, float], np.ndarray],
                   xi_rule: Callable[[float, int], tuple[np.ndarray, np.ndarray]],
                   s_breaks: Sequence[float], power: float = 2.0,
                   orders: tuple[int, int] = (8, 12), tail: bool = True,
                   workers: int = 1, origin_exponent: float = 1.0) -> StripResult:
    """Integrate int ds s**-power int d xi paired(xi, s) over s in s_breaks.

    ``paired(xi, s)`` returns the combined integrand of the two points on the
    strip at distance s (e.g. K(xi, xi - s) + K(xi, xi + s)); ``xi_rule(s, n)``
    returns the inner quadrature nodes and weights at that s.  When ``tail``
    is set, [s_breaks[-1], inf) is added through the map s = S / r.  A first
    panel starting at s = 0 uses s = b u**origin_exponent, which suits
    integrands behaving like s**(1/origin_exponent - 1) there.
    Values are computed with two Gauss orders; the difference is the error.
    ``paired`` may return ``(values, abs_errors)``; the errors are then
    integrated with the same rule and added.
    """
    br = np.asarray(s_breaks, dtype=float)
    if np.any(np.diff(br) <= 0):
        raise ValueError("s_breaks must be strictly increasing")
    segs = list(zip(br[:-1], br[1:]))
    if tail:
        segs.append((br[-1], np.inf))

    def inner(args):
        s, n = args
        x, w = xi_rule(s, n)
        vals = paired(x, s)
        if isinstance(vals, tuple):
            vals, errs = vals
            return float(np.dot(w, vals)), float(np.dot(w, errs))
        return float(np.dot(w, vals)), 0.0

    jobs = []
    layout = []
    for a, b in segs:
        for n in orders:
            s, ws = _outer_nodes(a, b, n, origin_exponent)
            layout.append((len(jobs), len(s), ws * s ** -power))
            jobs.extend((float(si), n) for si in s)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            res = list(ex.map(inner, jobs))
    else:
        res = [inner(j) for j in jobs]
    res = np.asarray(res)
    pv = np.empty((len(segs), len(orders)))
    pe = np.empty((len(segs), len(orders)))
    for i, (start, m, wts) in enumerate(layout):
        pv[i // len(orders), i % len(orders)] = math.fsum(wts * res[start:start + m, 0])
        pe[i // len(orders), i % len(orders)] = math.fsum(np.abs(wts) * res[start:start + m, 1])
    fine = pv[:, -1]
    coarse = pv[:, 0]
    value = math.fsum(fine)
    coarse_total = math.fsum(coarse)
    # outer rule gap plus the integrated error of the integrand itself
    error = abs(value - coarse_total) + math.fsum(pe[:, -1])
    all_breaks = np.append(br, np.inf) if tail else br
    return StripResult(value=value, error=error, coarse=coarse_total,
                       s_breaks=all_breaks, panel_values=fine)


def pv_double(kernel: Callable[[np.ndarray, np.ndarray], np.ndarray], eps: float,
              xi_rule: Callable[[float, int], tuple[np.ndarray, np.ndarray]],
              s_breaks: Sequence[float] | None = None, orders=(8, 12),
              workers: int = 1) -> StripResult:
    """int int_{|xi1 - xi2| > eps} kernel(xi1, xi2) / |xi1 - xi2|**2.

    The rule ``xi_rule`` integrates over xi1; for each s both xi2 = xi1 - s and
    xi2 = xi1 + s are taken, so the strip singularity is handled in pairs.
    """
    if s_breaks is None:
        lo = eps if eps > 0 else 0.0
        s_breaks = np.unique(np.concatenate([[lo], graded_breaks(max(lo, 1e-12), 64.0, [(max(lo, 1e-12), 1e-12)], 0.25)]))
    br = np.asarray(s_breaks, dtype=float)
    br = br[br >= eps]
    if br[0] != eps:
        br = np.concatenate([[eps], br])

    def paired(x, s):
        return kernel(x, x - s) + kernel(x, x + s)

    return strip_integral(paired, xi_rule, br, power=2.0, orders=orders, workers=workers)
