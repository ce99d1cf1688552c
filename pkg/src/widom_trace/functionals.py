"""The two-point functionals U, V, Y and X of a test function.

All routines are vectorized over (s1, s2).  Each one walks a ladder:
closed form where registered, an integrated-by-parts form for smooth
segments, and the defining integral split at the cusp preimage otherwise.
Quadrature is tanh-sinh on [0, 1], which absorbs the t**(gamma-1) endpoint
behaviour; the error estimate is the gap to the embedded coarse rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_legendre, tanh_sinh
from .testfn import CUSP_EPS, CuspError, TestFunction

__all__ = [
    "FunctionalValue",
    "U_array",
    "V_array",
    "Y_array",
    "X_array",
    "eval_U",
    "eval_V",
    "eval_Y",
    "eval_X",
    "Y_SWITCH",
]

Y_SWITCH = 1e-6
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class FunctionalValue:
    value: float
    method: str  # closed-form | parts-form | graded-quadrature | divided-difference
    error: float = 0.0

    def __float__(self):
        return self.value


def _ts():
    t, tc, w, coarse = tanh_sinh()
    return t[None, :], tc[None, :], w, coarse


def _safe(g: TestFunction, d, k):
    """g^{(k)} at offset d from x0, with points closer than CUSP_EPS zeroed."""
    if k == 0:
        return g.at_offset(d, 0)
    bad = np.abs(d) < CUSP_EPS
    if not bad.any():
        return g.at_offset(d, k)
    out = g.at_offset(np.where(bad, 1.0, d), k)
    return np.where(bad, 0.0, out)


def _quad(vals, w, coarse):
    """Tanh-sinh sum and error estimate.

    Halving the step roughly doubles the number of correct digits, so the
    error of the fine sum is estimated as gap**2 / scale (never more than the
    gap itself), plus rounding.
    """
    fine = vals @ w
    gap = np.abs(fine - vals @ coarse)
    scale = np.abs(vals) @ w
    with np.errstate(invalid="ignore", divide="ignore"):
        est = np.where(scale > 0, np.minimum(gap, gap * gap / scale), gap)
    return fine, est + 4 * _EPS * scale


# ----------------------------------------------------------------------------
# closed forms
# ----------------------------------------------------------------------------

def _V_abs(y1, y2):
    """V for |t| in offset coordinates."""
    a1, a2 = np.abs(y1), np.abs(y2)
    same = y1 * y2 >= 0
    sig = np.where(y1 != 0, np.sign(y1), np.sign(y2))
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = a1 - a2 - 2 * a2 * np.log1p(a1 / np.where(a2 > 0, a2, 1.0))
    return np.where(same, sig * (y1 - y2), cross)


def _closed_V(g, s1, s2):
    aff = g.affine_coeffs
    if aff is not None:
        return g.amplitude * aff[0] * (s1 - s2)
    if g.is_square:
        d = s1 - s2
        return g.amplitude * (0.5 * d * d + 2 * s2 * d)
    if g.is_abs:
        return g.amplitude * _V_abs(s1 - g.x0, s2 - g.x0)
    return None


def _closed_U(g, s1, s2):
    if g.affine_coeffs is not None:
        return np.zeros(np.broadcast(s1, s2).shape)
    if g.is_square:
        return -g.amplitude * (s1 - s2) ** 2
    if g.is_abs:
        y1, y2 = s1 - g.x0, s2 - g.x0
        return g.amplitude * (_V_abs(y1, y2) + _V_abs(y2, y1))
    return None


# ----------------------------------------------------------------------------
# quadrature forms
# ----------------------------------------------------------------------------

def _log_panels(vmax, rate):
    """Nodes v on [0, vmax] split into equal panels, with weights per row.

    Near-cusp integrands grow like exp(rate * v); panels of width about
    4 / rate keep each piece smooth for the tanh-sinh rule.
    """
    t, _, w, coarse = tanh_sinh()
    P = int(min(128, max(1, np.ceil(float(np.max(vmax)) * max(rate, 0.05) / 4))))
    u = ((np.arange(P)[:, None] + t[None, :]) / P).ravel()
    scale = vmax / P
    return vmax * u[None, :], scale, np.tile(w, P), np.tile(coarse, P)


def _V_diff(g, s1, s2):
    """(s2 - s1) int log(1-t) g'(chord) dt, for segments free of the cusp."""
    t, tc, w, coarse = _ts()
    a, b = s1[:, None], s2[:, None]
    lt = np.log(tc)
    if g.smooth:
        vals = lt * g(a * tc + b * t, 1)
        f, e = _quad(vals, w, coarse)
        return (s2 - s1) * f, np.abs(s2 - s1) * e
    d1, d2 = a - g.x0, b - g.x0
    with np.errstate(divide="ignore"):
        rho = np.abs(d2) / np.abs(d1 - d2)
    near = ((rho > 0) & (rho < 0.05)).ravel()
    f = np.empty(len(s1))
    e = np.empty(len(s1))
    if (~near).any():
        vals = lt * _safe(g, d1[~near] * tc + d2[~near] * t, 1)
        f[~near], e[~near] = _quad(vals, w, coarse)
    if near.any():
        # s2 close to x0: tau = 1 - t = rho (e^v - 1) spreads the near
        # singularity at tau = -rho evenly over v
        r = rho[near]
        vmax = np.log1p(r) - np.log(r)  # log(1 + 1/r) without overflow
        v, scale, wp, cp = _log_panels(vmax, g.exponent)
        # log tau = log r + log(e^v - 1), kept finite where tau under- or overflows
        with np.errstate(divide="ignore"):
            log_tau = np.log(r) + v + np.log(-np.expm1(-v))
        tau = np.exp(log_tau)
        jac = (tau + r) * scale
        vals = log_tau * _safe(g, d2[near] + tau * (d1[near] - d2[near]), 1) * jac
        vals[~np.isfinite(vals)] = 0.0  # v = 0 endpoint, where tau -> 0
        f[near], e[near] = _quad(vals, wp, cp)
    return (s2 - s1) * f, np.abs(s2 - s1) * e


def _V_split(g, s1, s2):
    """Defining integral of V, split where the chord crosses x0."""
    t, tc, w, coarse = _ts()
    delta = (s2 - s1)[:, None]
    ts = ((g.x0 - s1) / (s2 - s1))[:, None]
    tsc = ((s2 - g.x0) / (s2 - s1))[:, None]
    d2 = tsc * delta
    G2 = g.at_offset(d2)
    # [0, t*]: t = t* u
    left = ts * (g.at_offset(-ts * tc * delta) - G2) / (tsc + ts * tc)
    # [t*, 1]: 1 - t = (1 - t*)(1 - u); the Jacobian cancels the denominator
    right = (g.at_offset(tsc * t * delta) - G2) / tc
    f1, e1 = _quad(left, w, coarse)
    f2, e2 = _quad(right, w, coarse)
    near = (tsc < 0.05).ravel()
    if near.any():
        # s2 close to x0: on [0, t*] put 1 - t = (1 - t*) e^v, which turns the
        # near-singular 1/(1 - t) into a flat weight
        r = tsc[near]
        vmax = -np.log(r)
        v, scale, wp, cp = _log_panels(vmax, g.exponent)
        vals = (g.at_offset(-r * np.expm1(v) * delta[near]) - G2[near]) * scale
        f1[near], e1[near] = _quad(vals, wp, cp)
    return f1 + f2, e1 + e2


def _U_parts(g, s1, s2):
    """(s1 - s2)^2 int g''(chord) [t log t + (1-t) log(1-t)] dt."""
    t, tc, w, coarse = _ts()
    a, b = s1[:, None], s2[:, None]
    wt = t * np.log(t) + tc * np.log(tc)
    vals = wt * g(a * tc + b * t, 2)
    f, e = _quad(vals, w, coarse)
    d2 = (s1 - s2) ** 2
    return d2 * f, d2 * e


def _crosses(g, s1, s2):
    """True where x0 lies strictly inside the segment."""
    return (s1 - g.x0) * (s2 - g.x0) < 0


def _V_general(g, s1, s2):
    val = np.zeros_like(s1)
    err = np.zeros_like(s1)
    nz = s1 != s2
    if g.smooth:
        if nz.any():
            val[nz], err[nz] = _V_diff(g, s1[nz], s2[nz])
        return val, err
    cr = _crosses(g, s1, s2) & nz
    plain = nz & ~cr
    if plain.any():
        val[plain], err[plain] = _V_diff(g, s1[plain], s2[plain])
    if cr.any():
        val[cr], err[cr] = _V_split(g, s1[cr], s2[cr])
    return val, err


def _prep(s1, s2):
    s1, s2 = np.broadcast_arrays(np.asarray(s1, dtype=float), np.asarray(s2, dtype=float))
    shape = s1.shape
    return s1.ravel().copy(), s2.ravel().copy(), shape


def V_array(g: TestFunction, s1, s2, with_error: bool = False):
    """V(s1, s2; g) = int_0^1 [g((1-t)s1 + t s2) - g(s2)] / (1-t) dt."""
    a, b, shape = _prep(s1, s2)
    cf = _closed_V(g, a, b)
    if cf is not None:
        val, err = cf, np.zeros_like(a)
    else:
        val, err = _V_general(g, a, b)
    val, err = val.reshape(shape), err.reshape(shape)
    return (val, err) if with_error else val


def U_array(g: TestFunction, s1, s2, with_error: bool = False):
    """U(s1, s2; g), the symmetric second-order functional."""
    a, b, shape = _prep(s1, s2)
    cf = _closed_U(g, a, b)
    if cf is not None:
        val, err = cf, np.zeros_like(a)
    elif g.smooth:
        val = np.zeros_like(a)
        err = np.zeros_like(a)
        nz = a != b
        if nz.any():
            val[nz], err[nz] = _U_parts(g, a[nz], b[nz])
    else:
        v1, e1 = _V_general(g, a, b)
        v2, e2 = _V_general(g, b, a)
        val, err = v1 + v2, e1 + e2
    val, err = val.reshape(shape), err.reshape(shape)
    return (val, err) if with_error else val


def Y_array(g: TestFunction, s1, s2, with_error: bool = False):
    """Divided difference [g(s1) - g(s2)] / (s1 - s2) = int_0^1 g'(chord) dt."""
    a, b, shape = _prep(s1, s2)
    val = np.empty_like(a)
    err = np.zeros_like(a)
    close = np.abs(a - b) <= Y_SWITCH * (1 + np.abs(a) + np.abs(b))
    if not g.smooth:
        close &= ~(_crosses(g, a, b) | (a == g.x0) | (b == g.x0))
    far = ~close
    if far.any():
        ga, gb = g(a[far]), g(b[far])
        val[far] = (ga - gb) / (a[far] - b[far])
        err[far] = 4 * _EPS * (np.abs(ga) + np.abs(gb)) / np.abs(a[far] - b[far])
    if close.any():
        x, wq = gauss_legendre(8)
        ac, bc = a[close][:, None], b[close][:, None]
        vals = g(ac * (1 - x) + bc * x, 1)
        val[close] = vals @ wq
        err[close] = _EPS * np.abs(vals).max(axis=1)
    val, err = val.reshape(shape), err.reshape(shape)
    return (val, err) if with_error else val


def X_array(f: TestFunction, s1, s2, with_error: bool = False):
    """X(s1, s2; f) = Y(s1, s2; f) - f'(s1)."""
    a, b, shape = _prep(s1, s2)
    if not f.smooth and np.any(np.abs(a - f.x0) < CUSP_EPS):
        raise CuspError("X needs s1 != x0")
    y, e = Y_array(f, a, b, with_error=True)
    val = (y - f(a, 1)).reshape(shape)
    return (val, e.reshape(shape)) if with_error else val


# ----------------------------------------------------------------------------
# scalar front ends
# ----------------------------------------------------------------------------

def _method_U(g, s1, s2):
    if s1 == s2 or g.has_closed_form_U:
        return "closed-form"
    return "parts-form" if g.smooth else "graded-quadrature"


def _method_V(g, s1, s2):
    if s1 == s2 or g.has_closed_form_V:
        return "closed-form"
    if g.smooth or not _crosses(g, np.float64(s1), np.float64(s2)):
        return "parts-form"
    return "graded-quadrature"


def eval_U(g: TestFunction, s1: float, s2: float) -> FunctionalValue:
    v, e = U_array(g, s1, s2, with_error=True)
    return FunctionalValue(float(v), _method_U(g, s1, s2), float(e))


def eval_V(g: TestFunction, s1: float, s2: float) -> FunctionalValue:
    v, e = V_array(g, s1, s2, with_error=True)
    return FunctionalValue(float(v), _method_V(g, s1, s2), float(e))


def eval_Y(g: TestFunction, s1: float, s2: float) -> FunctionalValue:
    v, e = Y_array(g, s1, s2, with_error=True)
    close = abs(s1 - s2) <= Y_SWITCH * (1 + abs(s1) + abs(s2))
    return FunctionalValue(float(v), "graded-quadrature" if close else "divided-difference", float(e))


def eval_X(f: TestFunction, s1: float, s2: float) -> FunctionalValue:
    v, e = X_array(f, s1, s2, with_error=True)
    close = abs(s1 - s2) <= Y_SWITCH * (1 + abs(s1) + abs(s2))
    return FunctionalValue(float(v), "graded-quadrature" if close else "divided-difference", float(e))
