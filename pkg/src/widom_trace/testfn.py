"""Test functions g (smooth) and f (cusp type) with their seminorms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .symbol import CauchySymbol, GaussianSymbol

__all__ = [
    "CuspError",
    "InfiniteSeminormError",
    "TestFunction",
    "analytic",
    "power",
    "holder_power",
    "testfn_from_config",
    "f_eval",
    "derivative_view",
    "cusp_seminorm",
    "holder_seminorm",
]

CUSP_EPS = 1e-300
ANALYTIC_NAMES = ("affine", "square", "exp", "polynomial")
CUTOFFS = ("one", "cauchy", "gaussian", "polynomial")


class CuspError(ValueError):
    """Derivative requested at (or within 1e-300 of) the cusp point."""


class InfiniteSeminormError(ArithmeticError):
    """Grid estimate of a seminorm keeps growing under refinement."""


def _falling(e: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= e - i
    return out


@dataclass(frozen=True)
class TestFunction:
    """A function applied to the operator.

    ``kind`` is one of ``analytic``, ``c1-holder`` or ``cusp``.  Analytic
    functions come from a small registry (``name``).  The other two classes
    are ``amplitude * phi(t - x0) * |t - x0|**exponent`` where phi is a smooth
    cutoff; for ``cusp`` the exponent is gamma, for ``c1-holder`` it is
    1 + kappa.
    """

    __test__ = False  # keep pytest from collecting this class

    kind: str
    name: str = "power"
    gamma: float = 1.0
    x0: float = 0.0
    amplitude: float = 1.0
    kappa: float = 1.0
    cutoff: str = "one"
    cutoff_scale: float = 1.0
    coeffs: tuple[float, ...] = field(default=(0.0, 1.0))

    def __post_init__(self):
        if self.kind not in ("analytic", "c1-holder", "cusp"):
            raise ValueError(f"unknown class {self.kind!r}")
        if self.kind == "analytic":
            if self.name not in ANALYTIC_NAMES:
                raise ValueError(f"unknown analytic function {self.name!r}")
        else:
            if self.cutoff not in CUTOFFS:
                raise ValueError(f"unknown cutoff {self.cutoff!r}")
        if self.kind == "cusp" and not 0 < self.gamma <= 1:
            raise ValueError("cusp exponent must lie in (0, 1]")
        if self.kind == "c1-holder" and not 0 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0, 1]")

    # -- structure ------------------------------------------------------------
    @property
    def exponent(self) -> float:
        if self.kind == "cusp":
            return self.gamma
        if self.kind == "c1-holder":
            return 1.0 + self.kappa
        return math.nan

    @property
    def is_pure_power(self) -> bool:
        return self.kind != "analytic" and self.cutoff == "one"

    @property
    def is_abs(self) -> bool:
        """|t - x0| up to amplitude."""
        return self.kind == "cusp" and self.is_pure_power and self.gamma == 1.0

    @property
    def affine_coeffs(self) -> tuple[float, float] | None:
        """(slope, intercept) if g is affine."""
        if self.kind != "analytic":
            return None
        if self.name == "affine":
            c = tuple(self.coeffs) + (0.0, 0.0)
            return float(c[1]), float(c[0])
        if self.name == "polynomial":
            c = np.trim_zeros(np.asarray(self.coeffs, dtype=float), "b")
            if len(c) <= 2:
                c = np.append(c, [0.0, 0.0])
                return float(c[1]), float(c[0])
        return None

    @property
    def is_square(self) -> bool:
        return self.kind == "analytic" and self.name == "square"

    @property
    def has_closed_form_U(self) -> bool:
        return self.affine_coeffs is not None or self.is_square or self.is_abs

    @property
    def has_closed_form_V(self) -> bool:
        return self.has_closed_form_U

    @property
    def smooth(self) -> bool:
        return self.kind == "analytic"

    @property
    def singular_point(self) -> float | None:
        return None if self.kind == "analytic" else self.x0

    # -- evaluation -----------------------------------------------------------
    def _phi(self, d, k):
        if self.cutoff == "one":
            return np.ones_like(d) if k == 0 else np.zeros_like(d)
        if self.cutoff == "cauchy":
            return CauchySymbol(self.cutoff_scale)(d, k)
        if self.cutoff == "gaussian":
            return GaussianSymbol(self.cutoff_scale)(d, k)
        p = Polynomial(self.coeffs)
        return (p.deriv(k) if k else p)(d)

    def _analytic(self, t, k):
        if self.name == "exp":
            return np.exp(t)
        if self.name == "square":
            return [t * t, 2 * t, 2 * np.ones_like(t)][k] if k < 3 else np.zeros_like(t)
        p = Polynomial(self.coeffs)
        return (p.deriv(k) if k else p)(t)

    def __call__(self, t, k: int = 0):
        t = np.asarray(t, dtype=float)
        if k < 0:
            raise ValueError("derivative order must be >= 0")
        if self.kind == "analytic":
            return self.amplitude * self._analytic(t, k)
        return self.at_offset(t - self.x0, k)

    def at_offset(self, d, k: int = 0):
        """Value at t = x0 + d, computed from the offset d directly."""
        d = np.asarray(d, dtype=float)
        if self.kind == "analytic":
            return self(self.x0 + d, k)
        e = self.exponent
        ad = np.abs(d)
        if k == 0 and self.cutoff == "one":
            return self.amplitude * ad ** e
        if k > 0 and np.any(ad < CUSP_EPS):
            even_int = e == round(e) and round(e) % 2 == 0
            if not (k < e or even_int):
                raise CuspError(f"derivative of order {k} at the cusp x0={self.x0}")
        sgn = np.sign(d)
        out = np.zeros_like(d)
        with np.errstate(divide="ignore", invalid="ignore"):
            for j in range(k + 1):
                pj = _falling(e, j) * np.where(ad > 0, ad ** (e - j), 0.0 if e > j else 1.0) * sgn ** j
                out = out + math.comb(k, j) * self._phi(d, k - j) * pj
        return self.amplitude * out


def analytic(name: str, coeffs: Sequence[float] = (0.0, 1.0), amplitude: float = 1.0) -> TestFunction:
    return TestFunction("analytic", name=name, coeffs=tuple(float(c) for c in coeffs), amplitude=amplitude)


def power(gamma: float, x0: float = 0.0, amplitude: float = 1.0, cutoff: str = "one",
          cutoff_scale: float = 1.0, coeffs: Sequence[float] = (1.0,)) -> TestFunction:
    """amplitude * phi(t - x0) * |t - x0|**gamma."""
    return TestFunction("cusp", gamma=float(gamma), x0=float(x0), amplitude=float(amplitude),
                        cutoff=cutoff, cutoff_scale=float(cutoff_scale),
                        coeffs=tuple(float(c) for c in coeffs))


def holder_power(kappa: float, x0: float = 0.0, amplitude: float = 1.0) -> TestFunction:
    """amplitude * |t - x0|**(1 + kappa), a C^{1,kappa} function."""
    return TestFunction("c1-holder", kappa=float(kappa), x0=float(x0), amplitude=float(amplitude))


def testfn_from_config(cfg: dict) -> TestFunction:
    """Build from keys: class, gamma, x0, kappa, amplitude, name, cutoff, ..."""
    cfg = dict(cfg)
    kind = cfg.pop("class", cfg.pop("kind", None))
    if kind is None:
        raise ValueError("test function config needs a 'class' key")
    if "coeffs" in cfg:
        cfg["coeffs"] = tuple(float(c) for c in cfg["coeffs"])
    return TestFunction(kind, **cfg)


def f_eval(f: TestFunction, t: float, k: int = 0) -> float:
    """f^{(k)}(t) as a float."""
    return float(f(np.asarray(float(t)), k))


def derivative_view(f: TestFunction, k: int) -> Callable[[np.ndarray], np.ndarray]:
    """Callable t -> f^{(k)}(t)."""
    def view(t):
        return f(t, k)
    view.x0 = f.singular_point
    return view


def _offsets(lo_exp: int, hi_exp: int, per_octave: int) -> np.ndarray:
    return 2.0 ** (np.arange(lo_exp * per_octave, hi_exp * per_octave + 1) / per_octave)


def cusp_seminorm(f: TestFunction, n: int) -> float:
    """max_{k<=n} sup_{x != x0} |f^{(k)}(x)| |x - x0|^(k - gamma).

    Exact for pure powers; otherwise a sup over a grid clustered at x0,
    refined and widened until stable.
    """
    if f.kind != "cusp":
        raise ValueError("cusp seminorm is defined for the cusp class")
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    g = f.gamma
    if f.is_pure_power:
        return abs(f.amplitude) * max(abs(_falling(g, k)) for k in range(n + 1))

    def estimate(lo_exp, hi_exp, per_octave):
        d = _offsets(lo_exp, hi_exp, per_octave)
        d = np.concatenate([-d, d])
        t = f.x0 + d
        best, edge = 0.0, 0.0
        for k in range(n + 1):
            w = np.abs(f(t, k)) * np.abs(d) ** (k - g)
            best = max(best, float(w.max()))
            edge = max(edge, float(max(w[len(d) // 2 - 1], w[-1])))
        return best, edge

    prev, _ = estimate(-40, 10, 4)
    for level, (hi_exp, per) in enumerate([(14, 8), (18, 16), (22, 32)]):
        cur, edge = estimate(-44, hi_exp, per)
        if edge >= 0.999 * cur and cur > prev * (1 + 1e-6):
            raise InfiniteSeminormError("weighted derivative grows at large |x - x0|")
        if abs(cur - prev) <= 1e-6 * cur:
            return cur
        prev = cur
    return prev


def holder_seminorm(g, kappa: float, sample: np.ndarray | None = None, seed: int = 0,
                    n_centers: int = 32, spread: float = 2.0) -> float:
    """Lower estimate of sup |g(z) - g(w)| / |z - w|**kappa over sampled pairs.

    ``g`` is a TestFunction or any vectorized callable (e.g. a derivative
    view).  ``sample`` is an (m, 2) array of pairs; by default pairs at
    separations 2^-j, j = 0..52, start and straddle random centres plus the
    singular point of g when it has one.
    """
    if not 0 < kappa <= 1:
        raise ValueError("kappa must lie in (0, 1]")
    if sample is None:
        rng = np.random.default_rng(seed)
        x0 = getattr(g, "singular_point", None) if isinstance(g, TestFunction) else getattr(g, "x0", None)
        centres = rng.normal(0.0 if x0 is None else x0, spread, n_centers)
        if x0 is not None:
            centres = np.append(centres, x0)
        sep = 2.0 ** -np.arange(53)
        c, s = np.meshgrid(centres, sep, indexing="ij")
        c, s = c.ravel(), s.ravel()
        sample = np.concatenate([np.stack([c, c + s], 1), np.stack([c - s, c], 1),
                                 np.stack([c - s / 2, c + s / 2], 1)])
    sample = np.asarray(sample, dtype=float)
    z, w = sample[:, 0], sample[:, 1]
    keep = z != w
    z, w = z[keep], w[keep]
    if not len(z):
        return 0.0
    diff = np.abs(g(z) - g(w))
    return float(np.max(diff / np.abs(z - w) ** kappa))
