"""Randomized inequality suites with the frozen constants.

Each suite draws instances from a seeded generator, evaluates both sides
and counts violations.  A side computed by quadrature carries its error
estimate, which is added to the right-hand side before comparing.
"""

from __future__ import annotations

import argparse
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import constants as K
from .functionals import V_array, X_array
from .polytools import (RealPolynomial, poly_critical_points, poly_lp_norm, poly_sobolev_norm,
                        variation_abs_power, weighted_derivative_integral)
from .testfn import TestFunction, cusp_seminorm, power

__all__ = ["SuiteResult", "SUITES", "run_suite", "run_all", "calibrate_agamma2"]

_REL = 1e-9


@dataclass
class SuiteResult:
    name: str
    instances: int
    violations: int
    max_ratio: float  # max LHS / RHS over the instances

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.instances > 0


def _separations(rng, n, lo=-12, hi=2):
    return 10.0 ** rng.uniform(lo, hi, n)


def _random_cusp(rng, cutoffs=("one", "cauchy", "gaussian")) -> TestFunction:
    gam = float(rng.uniform(0.05, 1.0))
    return power(gam, x0=float(rng.normal(0, 1)), amplitude=float(rng.choice([-1, 1]) * 10 ** rng.uniform(-1, 1)),
                 cutoff=str(rng.choice(cutoffs)), cutoff_scale=float(10 ** rng.uniform(-0.5, 0.5)))


def _pairs_near(rng, f: TestFunction, n):
    """s1 anywhere near x0, s2 at log-uniform distance, either side."""
    s1 = f.x0 + rng.choice([-1, 1], n) * _separations(rng, n, -8, 1)
    s2 = s1 + rng.choice([-1, 1], n) * _separations(rng, n)
    return s1, s2


def _tally(name, lhs, rhs):
    lhs, rhs = np.asarray(lhs, float), np.asarray(rhs, float)
    ok = np.isfinite(lhs) & np.isfinite(rhs)
    bad = int(np.sum(~ok)) + int(np.sum(lhs[ok] > rhs[ok] * (1 + _REL)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs[ok] > 0, lhs[ok] / rhs[ok], 0.0)
    return SuiteResult(name, int(lhs.size), bad, float(ratio.max()) if ratio.size else math.nan)


def _grouped(rng, n, per, body):
    lhs, rhs = [], []
    while sum(map(len, lhs)) < n:
        l, r = body(rng, min(per, n - sum(map(len, lhs))))
        lhs.append(l)
        rhs.append(r)
    return np.concatenate(lhs), np.concatenate(rhs)


# ----------------------------------------------------------------------------
# functional bounds
# ----------------------------------------------------------------------------

def suite_V_bd(rng, n):
    """|V(s1, s2; g)| <= C_kappa |||g|||_{C^{0,kappa}} |s1 - s2|^kappa for g = c |t - x0|^kappa."""
    def body(rng, m):
        kap = float(rng.uniform(0.05, 1.0))
        g = power(kap, x0=float(rng.normal()), amplitude=float(10 ** rng.uniform(-1, 1)))
        s1, s2 = _pairs_near(rng, g, m)
        v, e = V_array(g, s1, s2, with_error=True)
        H = abs(g.amplitude)  # Hoelder constant of the pure power
        return np.abs(v) - e, K.C_V_bd(kap) * H * np.abs(s1 - s2) ** kap
    return _tally("V_bd", *_grouped(rng, n, 250, body))


def suite_V_est(rng, n):
    """|V(s1, s2; f)| <= C_gamma |||f|||_1 |s1 - s2|^gamma."""
    def body(rng, m):
        f = _random_cusp(rng)
        s1, s2 = _pairs_near(rng, f, m)
        v, e = V_array(f, s1, s2, with_error=True)
        return np.abs(v) - e, K.C_V_est(f.gamma) * cusp_seminorm(f, 1) * np.abs(s1 - s2) ** f.gamma
    return _tally("V_est", *_grouped(rng, n, 250, body))


def suite_approx(rng, n):
    """Stability of V under perturbation of both arguments, mu in {1/4, 1/16}."""
    def body(rng, m):
        f = _random_cusp(rng)
        gam = f.gamma
        s1, s2 = _pairs_near(rng, f, m)
        r1 = s1 + rng.choice([-1, 1], m) * _separations(rng, m, -10, 0)
        r2 = s2 + rng.choice([-1, 1], m) * _separations(rng, m, -10, 0)
        mu = rng.choice([0.25, 1.0 / 16], m)
        vs, es = V_array(f, s1, s2, with_error=True)
        vr, er = V_array(f, r1, r2, with_error=True)
        lhs = np.abs(vs - vr) - es - er
        n1 = cusp_seminorm(f, 1)
        rhs = K.C_approx(gam) * n1 * (np.abs(np.log(mu)) * (np.abs(s1 - r1) ** gam + np.abs(s2 - r2) ** gam)
                                      + mu ** gam * (np.abs(s1 - s2) ** gam + np.abs(r1 - r2) ** gam))
        return lhs, rhs
    return _tally("approx", *_grouped(rng, n, 250, body))


def suite_fdash(rng, n):
    """|f'(t1) - f'(t2)| <= 2^(1-delta) |||f|||_2 min|t_j - x0|^(gamma-1-delta) |t1 - t2|^delta."""
    def body(rng, m):
        f = _random_cusp(rng)
        gam = f.gamma
        t1 = f.x0 + rng.choice([-1, 1], m) * _separations(rng, m, -6, 1)
        t2 = f.x0 + rng.choice([-1, 1], m) * _separations(rng, m, -6, 1)
        delta = np.choose(rng.integers(0, 3, m), [0.0, gam / 2, min(1.0, gam)])
        dmin = np.minimum(np.abs(t1 - f.x0), np.abs(t2 - f.x0))
        lhs = np.abs(f(t1, 1) - f(t2, 1))
        rhs = K.C_fdash(delta) * cusp_seminorm(f, 2) * dmin ** (gam - 1 - delta) * np.abs(t1 - t2) ** delta
        return lhs, rhs
    return _tally("fdash", *_grouped(rng, n, 250, body))


def suite_Xab(rng, n):
    """|X(s1, s2; f)| <= 2^(2-delta)/(gamma-delta) |||f|||_2 |s1-s2|^delta |s1-x0|^(gamma-1-delta)."""
    def body(rng, m):
        f = _random_cusp(rng)
        gam = f.gamma
        s1, s2 = _pairs_near(rng, f, m)
        delta = np.where(rng.integers(0, 2, m) == 0, 0.0, gam / 2)
        x, e = X_array(f, s1, s2, with_error=True)
        rhs = (K.C_Xab(gam, delta) * cusp_seminorm(f, 2) * np.abs(s1 - s2) ** delta
               * np.abs(s1 - f.x0) ** (gam - 1 - delta))
        return np.abs(x) - e, rhs
    return _tally("Xab", *_grouped(rng, n, 250, body))


# ----------------------------------------------------------------------------
# polynomial lemmas
# ----------------------------------------------------------------------------

def _random_poly(rng, max_degree=6):
    deg = int(rng.integers(1, max_degree + 1))
    roots_like = rng.normal(0, 1, deg + 1) * 10 ** rng.uniform(-1, 1)
    return RealPolynomial(roots_like)


def _random_interval(rng, rmax=4.0):
    lo = float(rng.normal(0, 1.5))
    return lo, lo + float(rng.uniform(1e-3, rmax))


_PS = (1.0, 2.0, math.inf)


def suite_zeros(rng, n):
    """||a(eta1)|^g - |a(eta2)|^g| <= ||a^(N)||_p^g |I|^(g(N - 1/p)) when I holds >= N-1 critical points."""
    lhs, rhs = [], []
    while len(lhs) < n:
        p = _random_poly(rng)
        I = _random_interval(rng)
        ncrit = len(poly_critical_points(p, I))
        N = int(rng.integers(1, ncrit + 2))
        q = float(rng.choice(_PS))
        gam = float(rng.uniform(0.05, 1.0))
        e1, e2 = rng.uniform(*I, 2)
        lhs.append(abs(abs(p(e1)) ** gam - abs(p(e2)) ** gam))
        rhs.append(K.C_ZEROS * poly_lp_norm(p.deriv(N), I, q) ** gam * (I[1] - I[0]) ** (gam * (N - 1 / q)))
    return _tally("zeros", lhs, rhs)


def suite_agamma(rng, n):
    """Var[|a|^g; I] <= (N+1)^2 ||a^(N)||_p^g |I|^(g(N - 1/p)) when I holds exactly N-1 critical points."""
    lhs, rhs = [], []
    while len(lhs) < n:
        p = _random_poly(rng)
        I = _random_interval(rng)
        N = len(poly_critical_points(p, I)) + 1
        q = float(rng.choice(_PS))
        gam = float(rng.uniform(0.05, 1.0))
        lhs.append(variation_abs_power(p, gam, I))
        rhs.append(K.C_agamma(N) * poly_lp_norm(p.deriv(N), I, q) ** gam * (I[1] - I[0]) ** (gam * (N - 1 / q)))
    return _tally("agamma", lhs, rhs)


def _agamma2_instance(rng):
    p = _random_poly(rng)
    lo = float(rng.normal(0, 1.5))
    I = (lo, lo + float(rng.uniform(1e-3, K.AGAMMA2_R)))
    q = float(rng.choice(_PS))
    gam = float(rng.uniform(0.2, 1.0))
    N = int(math.ceil(1 / gam + 1 / q - 1e-12)) + int(rng.integers(0, 2))
    norm = poly_sobolev_norm(p.deriv(), I, N - 1, q)
    base = (N + 1) ** 2 * norm ** gam * (I[1] - I[0]) ** ((1 - 1 / q) * gam)
    return p, I, gam, base


def suite_agamma2(rng, n):
    """Var[|a|^g; I] <= C (N+1)^2 ||a'||_{W^{N-1,p}}^g |I|^((1-1/p) g), and the integral form."""
    lhs, rhs = [], []
    while len(lhs) < n:
        p, I, gam, base = _agamma2_instance(rng)
        lhs.append(variation_abs_power(p, gam, I))
        rhs.append(K.AGAMMA2_C * base)
    return _tally("agamma2", lhs, rhs)


def suite_agamma3(rng, n):
    lhs, rhs = [], []
    while len(lhs) < n:
        p, I, gam, base = _agamma2_instance(rng)
        # the integral equals Var/gamma, so the constant carries 1/gamma
        lhs.append(gam * weighted_derivative_integral(p, gam, I))
        rhs.append(K.AGAMMA2_C * base)
    return _tally("agamma3", lhs, rhs)


SUITES: dict[str, Callable] = {
    "V_bd": suite_V_bd,
    "V_est": suite_V_est,
    "approx": suite_approx,
    "fdash": suite_fdash,
    "Xab": suite_Xab,
    "zeros": suite_zeros,
    "agamma": suite_agamma,
    "agamma2": suite_agamma2,
    "agamma3": suite_agamma3,
}


def run_suite(name: str, n: int = K.SUITE_SIZE, seed: int = K.SUITE_SEED) -> SuiteResult:
    rng = np.random.default_rng([seed, list(SUITES).index(name)])
    return SUITES[name](rng, n)


def run_all(n: int = K.SUITE_SIZE, seed: int = K.SUITE_SEED) -> list[SuiteResult]:
    return [run_suite(name, n, seed) for name in SUITES]


def calibrate_agamma2(n: int = 200000, seed: int = 20240601, safety: float = 2.0) -> float:
    """Maximum of Var / ((N+1)^2 ||a'||^g |I|^(...)) over random instances, times safety."""
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n):
        p, I, gam, base = _agamma2_instance(rng)
        if base > 0:
            best = max(best, variation_abs_power(p, gam, I) / base)
    return safety * best


def main(argv=None):
    ap = argparse.ArgumentParser(description="run or calibrate the inequality suites")
    ap.add_argument("--calibrate", action="store_true")
    ap.add_argument("-n", type=int, default=None)
    args = ap.parse_args(argv)
    if args.calibrate:
        print(calibrate_agamma2(args.n or 200000))
        return
    for r in run_all(args.n or K.SUITE_SIZE):
        print(f"{r.name:8s} n={r.instances} violations={r.violations} max_ratio={r.max_ratio:.4g}")


if __name__ == "__main__":
    main()
