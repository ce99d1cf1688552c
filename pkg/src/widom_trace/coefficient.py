"""The coefficient B(a; g), its localized pieces, coverings and bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .functionals import U_array, V_array, Y_array
from .quadrature import (DEFAULT_EPS_SCHEDULE, DivergenceError, StripResult, _eps_extrapolate,
                         graded_breaks, panel_rule, strip_integral)
from .symbol import (CauchySymbol, FermiSymbol, SmoothnessError, Symbol, WeightedNormSpec,
                     _cell_norm, truncated_gagliardo, weighted_norm, wnp_quasi_norm)
from .testfn import TestFunction, cusp_seminorm, derivative_view, holder_seminorm

__all__ = [
    "METHODS",
    "MethodPreconditionError",
    "HypothesisViolation",
    "CoefficientRequest",
    "CoefficientResult",
    "compute_B",
    "far_part",
    "Bump",
    "localized_D",
    "local_deriv_norm",
    "Covering",
    "build_covering",
    "overlap_bound",
    "BoundReport",
    "bound_report",
    "fermi_tau",
    "power_weight",
    "scales_integral",
]

METHODS = ("direct-U", "via-V", "hilbert")
PREFACTOR = {"direct-U": 1 / (8 * math.pi ** 2), "via-V": 1 / (4 * math.pi ** 2),
             "hilbert": 1 / (4 * math.pi ** 2)}


class MethodPreconditionError(ValueError):
    """The requested representation does not apply to this (a, g)."""


class HypothesisViolation(ValueError):
    """A sampled hypothesis of a bound failed."""


# ----------------------------------------------------------------------------
# B(a; g)
# ----------------------------------------------------------------------------

@dataclass
class CoefficientRequest:
    symbol: Symbol
    g: TestFunction
    method: str = "direct-U"
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE
    box: tuple[float, float] | None = None
    tol: float = 1e-8
    orders: tuple[int, int] = (8, 12)
    workers: int = 1


@dataclass
class CoefficientResult:
    value: float
    error: float
    method: str
    eps: list[float] = field(default_factory=list)
    eps_values: list[float] = field(default_factory=list)
    extrapolated: float = math.nan
    extrapolation_error: float = math.nan
    strip: StripResult | None = field(default=None, repr=False)

    def __float__(self):
        return self.value


def _check_request(req: CoefficientRequest):
    if req.method not in METHODS:
        raise ValueError(f"unknown method {req.method!r}")
    if req.method == "hilbert":
        if not req.g.smooth:
            raise MethodPreconditionError("the hilbert representation needs g with bounded g', g''")
        if req.symbol.n_max < 2:
            raise MethodPreconditionError("the hilbert representation needs two symbol derivatives")
        decay = req.symbol.decay
        if not isinstance(decay, str) and decay <= 0:
            raise MethodPreconditionError("symbol decay too weak for the hilbert representation")
    eps = list(req.eps_schedule)
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps schedule must be strictly decreasing")


def _singular_points(a: Symbol, g: TestFunction) -> list[float]:
    if g.smooth:
        return []
    return list(a.level_crossings(g.x0))


def _origin_exponent(g: TestFunction) -> float:
    return 1.0 / g.gamma if g.kind == "cusp" and g.gamma < 1 else 1.0


def _min_width(a: Symbol) -> float:
    feats = a.features()
    if feats:
        return min(w for _, w in feats)
    lo, hi = a.core()
    return hi - lo


def _make_rule(a: Symbol, singular, window=None, knots=()):
    def rule(s, n):
        hs = max(min(1e-9, 1e-5 * s), 1e-15) if singular else 1e-10
        return a.xi_rule(s, n, singular=singular, hsing=hs, window=window, knots=knots)
    return rule


def _tangent_slope(a: Symbol, g: TestFunction) -> float:
    """g'(a_inf), or 0 when a_inf sits on the cusp of g."""
    if not g.smooth and abs(a.a_inf - g.x0) < 1e-8:
        return 0.0
    d = float(g(np.asarray(a.a_inf), 1))
    return d if math.isfinite(d) else 0.0


def _kernel(method: str, a: Symbol, g: TestFunction, weight=None):
    """Paired strip integrand (values, errors) for the chosen representation."""
    if method == "direct-U":
        def paired(x, s):
            ax = a(x)
            am, ap = a(x - s), a(x + s)
            v1, e1 = U_array(g, ax, am, with_error=True)
            v2, e2 = U_array(g, ax, ap, with_error=True)
            return v1 + v2, e1 + e2
    elif method == "via-V":
        slope = _tangent_slope(a, g) if weight is None else 0.0

        def paired(x, s):
            ax = a(x)
            am, ap = a(x - s), a(x + s)
            v1, e1 = V_array(g, ax, am, with_error=True)
            v2, e2 = V_array(g, ax, ap, with_error=True)
            if weight is None:
                # V of the tangent line at a_inf is slope (s1 - s2): odd under
                # the swap, so it integrates to zero but cancels only globally
                return v1 + v2 - slope * (2 * ax - am - ap), e1 + e2
            z = weight(x)
            return z * (v1 + v2), np.abs(z) * (e1 + e2)
    else:
        # anchor is xi2; u(xi1; xi2) = a'(xi1) Y(a(xi1), a(xi2))
        def paired(x, s):
            ax = a(x)
            xp, xm = x + s, x - s
            yp, ep = Y_array(g, a(xp), ax, with_error=True)
            ym, em = Y_array(g, a(xm), ax, with_error=True)
            dp, dm = a(xp, 1), a(xm, 1)
            return dp * yp - dm * ym, np.abs(dp) * ep + np.abs(dm) * em
    return paired


def compute_B(req: CoefficientRequest) -> CoefficientResult:
    """B(a; g) in one of three representations.

    All three are integrated in rotated coordinates (anchor, s = |xi1 - xi2|)
    with the two points at distance s paired, which removes the strip
    singularity.  The s-range includes the eps schedule as breakpoints, so
    B_eps (the part with s > eps, prefactor included) comes out as partial
    sums; the reported value integrates all the way to s = 0.
    """
    _check_request(req)
    a, g = req.symbol, req.g
    sing = _singular_points(a, g)
    q = _origin_exponent(g)
    width = _min_width(a)
    smin = 1e-3 * width if q != 1.0 else 0.25 * width
    eps = [e for e in req.eps_schedule]
    br = a.s_breaks(0.0, smin=smin, eps_points=eps)
    rule = _make_rule(a, sing, window=req.box)
    power = 1.0 if req.method == "hilbert" else 2.0
    res = strip_integral(_kernel(req.method, a, g), rule, br, power=power,
                         orders=req.orders, workers=req.workers, origin_exponent=q)
    c = PREFACTOR[req.method]
    value = c * res.value
    eps_vals = [c * res.value_above(e) for e in eps]
    ext, ext_err = _eps_extrapolate(eps, eps_vals)
    err = c * res.error + 1e-15 * max(abs(value), 1e-300)
    return CoefficientResult(value=value, error=err, method=req.method, eps=eps,
                             eps_values=eps_vals, extrapolated=ext, extrapolation_error=ext_err,
                             strip=res)


def far_part(a: Symbol, f: TestFunction, cutoff: float = 1.0, orders=(8, 12)) -> StripResult:
    """B_1: (1/4 pi^2) int int_{|xi1 - xi2| > cutoff} V / |xi1 - xi2|^2."""
    sing = _singular_points(a, f)
    br = a.s_breaks(cutoff, smin=cutoff)
    res = strip_integral(_kernel("via-V", a, f), _make_rule(a, sing), br, orders=orders)
    c = PREFACTOR["via-V"]
    res.value *= c
    res.error *= c
    res.coarse *= c
    res.panel_values = res.panel_values * c
    return res


# ----------------------------------------------------------------------------
# localized pieces
# ----------------------------------------------------------------------------

def _step(u, k=0):
    """C^2 quintic step from 0 (u <= 0) to 1 (u >= 1) and its derivative."""
    u = np.clip(u, 0.0, 1.0)
    if k == 0:
        return u ** 3 * (10 - 15 * u + 6 * u * u)
    return 30 * u * u * (1 - u) ** 2


@dataclass(frozen=True)
class Bump:
    """Plateau bump: 1 on |x - c| <= plateau * r, 0 for |x - c| >= r."""

    center: float
    radius: float
    plateau: float = 0.5

    def __call__(self, x, k: int = 0):
        x = np.asarray(x, dtype=float)
        r, p = self.radius, self.plateau
        z = np.abs(x - self.center) / r
        u = (1.0 - z) / (1.0 - p)
        if k == 0:
            return _step(u)
        return _step(u, 1) * (-np.sign(x - self.center) / (r * (1.0 - p)))

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.radius, self.center + self.radius

    @property
    def knots(self) -> list[float]:
        c, r, p = self.center, self.radius, self.plateau
        return [c - r, c - p * r, c + p * r, c + r]

    def c1_norm(self) -> float:
        return max(1.0, 1.875 / (self.radius * (1.0 - self.plateau)))


def localized_D(a: Symbol, zeta, f: TestFunction, eps: float, R: float,
                orders=(8, 12)) -> StripResult:
    """(1/4 pi^2) int int_{eps < |xi1 - xi2| < R} zeta(xi1) V(a(xi1), a(xi2); f) / |xi1 - xi2|^2.

    ``zeta`` needs ``support`` and may carry ``knots``; the anchor integral
    runs over the support only.
    """
    if not 0 < eps < R:
        raise ValueError("need 0 < eps < R")
    lo, hi = zeta.support
    sing = _singular_points(a, f)
    knots = list(getattr(zeta, "knots", []))
    br = graded_breaks(eps, R, [(eps, np.inf)] + [(p, np.inf) for p in (0.5 * (hi - lo),)])
    rule = _make_rule(a, sing, window=(lo, hi), knots=knots)
    res = strip_integral(_kernel("via-V", a, f, weight=zeta), rule, br, orders=orders, tail=False)
    c = PREFACTOR["via-V"]
    res.value *= c
    res.error *= c
    res.coarse *= c
    res.panel_values = res.panel_values * c
    return res


def local_deriv_norm(a, N: int, p: float, window: tuple[float, float] = (-2.0, 2.0)) -> float:
    """||a'||_{W^{N-1,p}} on the window: max over k < N of ||a^(k+1)||_{L^p}."""
    if N < 1:
        raise ValueError("N must be >= 1")
    n_max = getattr(a, "n_max", None)
    if n_max is not None and N > n_max:
        raise SmoothnessError(f"N={N} needs derivatives beyond N_max={n_max}")
    feats = getattr(a, "features", lambda: [])()
    return _cell_norm(a, window[0], window[1], N - 1, p, 1, feats)


# ----------------------------------------------------------------------------
# coverings
# ----------------------------------------------------------------------------

def overlap_bound(nu: float, overlap: float = 0.5) -> int:
    """Upper bound on how many intervals of the greedy covering share a point.

    Intervals through xi have tau_j within (1 +- nu/2)^(-1) tau(xi), their
    centres lie within tau_max/2 of xi, and consecutive centres are at least
    (1 - overlap) tau_min apart.
    """
    ratio = (1 + nu / 2) / ((1 - nu / 2) * (1 - overlap))
    return 1 + int(math.floor(ratio))


@dataclass
class Covering:
    centers: np.ndarray
    taus: np.ndarray
    nu: float
    box: tuple[float, float]
    overlap: float = 0.5
    plateau: float = 0.5

    @property
    def intervals(self) -> np.ndarray:
        return np.stack([self.centers - self.taus / 2, self.centers + self.taus / 2], 1)

    @property
    def bumps(self) -> list[Bump]:
        return [Bump(c, t / 2, self.plateau) for c, t in zip(self.centers, self.taus)]

    def _psi(self, x, k=0):
        return np.array([b(x, k) for b in self.bumps])

    def phi(self, x, k: int = 0) -> np.ndarray:
        """Partition functions (rows j) at x; k = 0 or 1."""
        x = np.asarray(x, dtype=float)
        psi = self._psi(x)
        tot = psi.sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            if k == 0:
                return np.where(tot > 0, psi / tot, 0.0)
            dpsi = self._psi(x, 1)
            dtot = dpsi.sum(axis=0)
            return np.where(tot > 0, (dpsi * tot - psi * dtot) / tot ** 2, 0.0)

    def partition_function(self, j: int) -> "PartitionPiece":
        return PartitionPiece(self, j)

    def overlap_count(self, x) -> np.ndarray:
        iv = self.intervals
        x = np.asarray(x, dtype=float)[:, None]
        return ((x > iv[:, 0]) & (x < iv[:, 1])).sum(axis=1)

    @property
    def N_nu(self) -> int:
        return overlap_bound(self.nu, self.overlap)

    def derivative_constants(self, tau: Callable, x) -> tuple[float, float]:
        """Observed C_0, C_1 in |phi_j^(k)| <= C_k tau^-k on the sample x."""
        x = np.asarray(x, dtype=float)
        c0 = float(np.abs(self.phi(x)).max())
        c1 = float((np.abs(self.phi(x, 1)) * tau(x)).max())
        return c0, c1

    def C1_bound(self) -> float:
        """C_1 implied by the construction.

        |psi_j'| <= 1.875 / ((1 - p) tau_j/2), sum psi >= 1, at most N(nu)
        bumps are active at a point, and tau(xi) <= tau_j (1 + nu/2) / (1 - nu/2)
        there.  The quotient rule then gives the bound below.
        """
        slope = 1.875 / ((1 - self.plateau) * 0.5)
        comp = (1 + self.nu / 2) / (1 - self.nu / 2)
        return 2 * self.N_nu * slope * comp


@dataclass
class PartitionPiece:
    covering: Covering
    j: int

    def __call__(self, x, k: int = 0):
        return self.covering.phi(x, k)[self.j]

    @property
    def support(self):
        return self.covering.bumps[self.j].support

    @property
    def knots(self):
        lo, hi = self.support
        out = []
        for b in self.covering.bumps:
            out.extend(k for k in b.knots if lo <= k <= hi)
        return sorted(set(out))


def _lipschitz(tau, box, n=20001):
    x = np.linspace(box[0], box[1], n)
    t = tau(x)
    return float(np.max(np.abs(np.diff(t)) / np.diff(x)))


def build_covering(tau: Callable, nu: float, box: tuple[float, float],
                   overlap: float = 0.5, plateau: float = 0.5) -> Covering:
    """Greedy left-to-right covering by intervals (eta_j - tau_j/2, eta_j + tau_j/2).

    eta_{j+1} = eta_j + (tau(eta_j)/2 + tau(eta_{j+1})/2)(1 - overlap), solved
    by fixed-point iteration, starting at the left end of the box.
    """
    if not 0 < nu < 1:
        raise ValueError("nu must lie in (0, 1)")
    lip = _lipschitz(tau, box)
    if lip > nu * (1 + 1e-9):
        raise ValueError(f"tau has Lipschitz constant {lip:.4g} > nu={nu}")
    lo, hi = box
    centers = [float(lo)]
    while centers[-1] < hi:
        e = centers[-1]
        te = float(tau(np.asarray(e)))
        nxt = e + te * (1 - overlap)
        for _ in range(200):
            new = e + (te / 2 + float(tau(np.asarray(nxt))) / 2) * (1 - overlap)
            if abs(new - nxt) <= 1e-15 * max(1.0, abs(new)):
                nxt = new
                break
            nxt = new
        centers.append(nxt)
    c = np.asarray(centers)
    return Covering(c, np.asarray(tau(c), dtype=float), nu, (float(lo), float(hi)), overlap, plateau)


def fermi_tau(T: float) -> Callable:
    """Scale function (| |xi| - 1 | + T) / 2, Lipschitz with constant 1/2."""
    def tau(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (np.abs(np.abs(x) - 1.0) + T)
    return tau


def power_weight(beta: float) -> Callable:
    """Amplitude function (1 + |xi|)^(-beta)."""
    def v(x):
        return (1.0 + np.abs(np.asarray(x, dtype=float))) ** (-beta)
    return v


def scales_integral(tau: Callable, v: Callable, gamma: float, breaks: Sequence[float] = (),
                    with_error: bool = False):
    """int v^gamma / tau over the line, split at 0 and the given breaks."""
    pts = sorted(set([0.0, *breaks]))
    fn = lambda x: float(v(x)) ** gamma / float(tau(x))
    edges = [-np.inf, *pts, np.inf]
    vals, errs = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(fn, a, b, limit=400, epsabs=1e-13, epsrel=1e-11)
        vals.append(val)
        errs.append(err)
    total = math.fsum(vals)
    return (total, math.fsum(errs)) if with_error else total


# ----------------------------------------------------------------------------
# bounds
# ----------------------------------------------------------------------------

@dataclass
class BoundReport:
    B: float
    B_error: float
    rhs: dict[str, float] = field(default_factory=dict)
    rhs_errors: dict[str, float] = field(default_factory=dict)
    terms: dict[str, dict[str, float]] = field(default_factory=dict)
    ratios: dict[str, float] = field(default_factory=dict)
    constants: dict[str, float] = field(default_factory=dict)


def _scales_constants(a: Symbol, tau, v, N: int, a0: float, box=None) -> dict[str, float]:
    """Fitted constants of |a - a0| <= C v and |a^(k)| <= C_k tau^-k v."""
    lo, hi = box or a.core()
    pad = 2.0 * (hi - lo) + 10.0
    feats = [(p, w / 8) for p, w in a.features()]
    br = graded_breaks(lo - pad, hi + pad, feats, ratio=0.5)
    x = np.unique(np.concatenate([np.linspace(l, r, 17) for l, r in zip(br[:-1], br[1:])]))
    out = {}
    with np.errstate(divide="ignore", invalid="ignore"):
        c0 = np.max(np.abs(a(x) - a0) / v(x))
        out["C"] = float(c0)
        for k in range(1, N + 1):
            out[f"C_{k}"] = float(np.max(np.abs(a(x, k)) * tau(x) ** k / v(x)))
    for name, val in out.items():
        if not np.isfinite(val) or val > 1e8:
            raise HypothesisViolation(f"scale condition {name} fails: fitted constant {val:.3g}")
    return out


def _range_hull(a: Symbol):
    lo, hi = a.core()
    pad = 0.5 * (hi - lo)
    x = np.linspace(lo - pad, hi + pad, 20001)
    vals = a(x)
    return float(min(vals.min(), a.a_inf)), float(max(vals.max(), a.a_inf))


def bound_report(a: Symbol, f: TestFunction, B: float | None = None, B_error: float = 0.0,
                 N: int | None = None, p: float = math.inf, tau: Callable | None = None,
                 v: Callable | None = None, a0: float = 0.0, m: float = 0.5,
                 which: Sequence[str] | None = None, scales_breaks: Sequence[float] = ()) -> BoundReport:
    """Evaluate the right-hand sides that apply to (a, f).

    cusp f: ``bbound`` (truncated Gagliardo term + quasi-norm term) and, with
    tau and v, ``coeffscales``.  C^{1,kappa} f: ``gagliardo`` and, with tau
    and v, ``coeffscales1``.  Smooth f: ``redV``.  The ratio |B| / RHS is
    reported for each; the theorems' constants are not included.
    """
    if which is None:
        if f.kind == "cusp":
            which = ["bbound"] + (["coeffscales"] if tau is not None else [])
        elif f.kind == "c1-holder":
            which = ["gagliardo"] + (["coeffscales1"] if tau is not None else [])
        else:
            which = ["redV"]
    if "bbound" in which:
        # cheap hypothesis checks before any quadrature
        g = f.gamma
        NN = N if N is not None else math.ceil(1 / g + (0 if math.isinf(p) else 1 / p) - 1e-12)
        if NN < 1 / g + (0 if math.isinf(p) else 1 / p) - 1e-12:
            raise HypothesisViolation(f"N={NN} < 1/gamma + 1/p")
        if NN > a.n_max:
            raise HypothesisViolation(f"symbol has only {a.n_max} derivatives, N={NN} needed")
    if B is None:
        method = "via-V" if not f.smooth else "direct-U"
        r = compute_B(CoefficientRequest(a, f, method))
        B, B_error = r.value, r.error
    rep = BoundReport(B=B, B_error=B_error)
    for name in which:
        if name == "bbound":
            g = f.gamma
            NN = N if N is not None else math.ceil(1 / g + (0 if math.isinf(p) else 1 / p) - 1e-12)
            n1, n2 = cusp_seminorm(f, 1), cusp_seminorm(f, 2)
            gag = truncated_gagliardo(a, g, 1.0)
            qn = wnp_quasi_norm(a, g, NN - 1, p, deriv=1) ** g
            rep.terms[name] = {"seminorm_1": n1, "gagliardo": gag.value, "seminorm_2": n2,
                               "quasi_norm": qn, "N": NN}
            rep.rhs[name] = n1 * gag.value + n2 * qn
            rep.rhs_errors[name] = n1 * gag.error
        elif name in ("coeffscales", "coeffscales1"):
            if tau is None or v is None:
                raise ValueError(f"{name} needs tau and v")
            if name == "coeffscales":
                g = f.gamma
                NN = N if N is not None else math.ceil(1 / g - 1e-12)
                norm = cusp_seminorm(f, 2)
                expo = g
            else:
                NN = 1
                norm = holder_seminorm(derivative_view(f, 1), f.kappa)
                expo = 1 + f.kappa
            lip = _lipschitz(tau, a.core())
            if lip >= 1:
                raise HypothesisViolation(f"tau Lipschitz constant {lip:.3g} >= 1")
            consts = _scales_constants(a, tau, v, NN, a0)
            integral, ierr = scales_integral(tau, v, expo, scales_breaks, with_error=True)
            rep.constants.update({f"{name}:{k}": c for k, c in consts.items()})
            rep.terms[name] = {"seminorm": norm, "integral": integral, "N": NN}
            rep.rhs[name] = norm * integral
            rep.rhs_errors[name] = norm * ierr
        elif name == "gagliardo":
            norm = holder_seminorm(derivative_view(f, 1), f.kappa)
            gag = truncated_gagliardo(a, 1 + f.kappa, 0.0)
            rep.terms[name] = {"holder": norm, "gagliardo": gag.value}
            rep.rhs[name] = norm * gag.value
            rep.rhs_errors[name] = norm * gag.error
        elif name == "redV":
            lo, hi = _range_hull(a)
            t = np.linspace(lo, hi, 4001)
            g1 = float(np.abs(f(t, 1)).max())
            g2 = float(np.abs(f(t, 2)).max())
            da = _DerivativeView(a)
            n1 = weighted_norm(da, WeightedNormSpec(m + 1, 1))
            n0 = weighted_norm(da, WeightedNormSpec(m + 1, 0))
            rep.terms[name] = {"sup_g1": g1, "sup_g2": g2, "norm_a1_1": n1, "norm_a1_0": n0, "m": m}
            rep.rhs[name] = g1 * n1 + g2 * n0 ** 2
        else:
            raise ValueError(f"unknown bound {name!r}")
        rhs = rep.rhs[name]
        rep.ratios[name] = abs(B) / rhs if rhs > 0 else math.inf
    return rep


class _DerivativeView:
    """a' seen as a function with the symbol's geometry."""

    def __init__(self, a: Symbol):
        self.a = a
        self.decay = a.decay if isinstance(a.decay, str) else a.decay + 1
        self.n_max = a.n_max - 1

    def __call__(self, x, k=0):
        return self.a(x, k + 1)

    def features(self):
        return self.a.features()

    def core(self):
        return self.a.core()
