"""Command-line driver: one TOML experiment per run, CSV and JSON out.

Example::

    kind = "coefficient"
    methods = ["direct-U", "via-V"]
    [symbol]
    family = "cauchy"
    [testfn]
    class = "analytic"
    name = "square"

Kinds: coefficient, trace-check, fermi-scan, bounds-report, covering-dump,
lemma-suite.  Output goes to ``<out>/result.csv`` (first line
``# widom-trace schema v1``), ``<out>/summary.json`` and, for coverings,
``<out>/covering.csv``.  Files are written only after the whole experiment
succeeded.  Failures print one JSON record to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from . import constants as K
from .coefficient import (METHODS, CoefficientRequest, HypothesisViolation, MethodPreconditionError,
                          bound_report, build_covering, compute_B, fermi_tau, power_weight,
                          scales_integral)
from .lemmas import SUITES, run_suite
from .operator import RangeError, convergence_study
from .quadrature import DEFAULT_EPS_SCHEDULE, DivergenceError, MaxDepthExceeded
from .symbol import FermiSymbol, SmoothnessError, symbol_from_config, truncated_gagliardo, wnp_quasi_norm
from .testfn import CuspError, InfiniteSeminormError, cusp_seminorm, power, testfn_from_config

__all__ = ["main", "run", "ConfigError", "SCHEMA_LINE", "KINDS"]

SCHEMA_LINE = "# widom-trace schema v1"
KINDS = ("coefficient", "trace-check", "fermi-scan", "bounds-report", "covering-dump", "lemma-suite")

log = logging.getLogger("widom_trace")


class ConfigError(ValueError):
    pass


# exit status per failure class
_EXIT = [
    (ConfigError, 2),
    (HypothesisViolation, 3),
    (MethodPreconditionError, 3),
    (DivergenceError, 4),
    (MaxDepthExceeded, 4),
    (InfiniteSeminormError, 4),
    (RangeError, 4),
    (SmoothnessError, 5),
    (CuspError, 5),
]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


# ----------------------------------------------------------------------------
# config helpers
# ----------------------------------------------------------------------------

def _require(cfg, *keys):
    for k in keys:
        if k not in cfg:
            raise ConfigError(f"missing required key {k!r} for kind {cfg.get('kind')!r}")


def _symbol(cfg, base):
    try:
        return symbol_from_config(cfg["symbol"], base)
    except (TypeError, ValueError, KeyError, OSError) as exc:
        raise ConfigError(f"bad [symbol] section: {exc}") from exc


def _testfn(section):
    try:
        return testfn_from_config(section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad test-function section: {exc}") from exc


def _tau(section):
    kind = section.get("kind", "fermi")
    if kind == "fermi":
        return fermi_tau(float(section["T"]))
    if kind == "constant":
        val = float(section["value"])
        return lambda x: np.full(np.shape(x), val)
    raise ConfigError(f"unknown tau kind {kind!r}")


def _orders(cfg):
    o = tuple(int(x) for x in cfg.get("orders", (8, 12)))
    if len(o) != 2 or o[0] >= o[1]:
        raise ConfigError("orders must be two increasing Gauss orders")
    return o


def validate(cfg: dict) -> None:
    kind = cfg.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {', '.join(KINDS)}")
    need = {
        "coefficient": ("symbol", "testfn"),
        "trace-check": ("symbol", "testfn", "schedule"),
        "fermi-scan": ("T",),
        "bounds-report": ("symbol", "testfn"),
        "covering-dump": ("tau", "box"),
        "lemma-suite": (),
    }[kind]
    _require(cfg, *need)
    for m in cfg.get("methods", []):
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}")
    if "testfn" in cfg:
        g = _testfn(cfg["testfn"])
        if "hilbert" in cfg.get("methods", []) and not g.smooth:
            raise MethodPreconditionError("the hilbert representation needs a smooth test function")
    if kind == "lemma-suite":
        for s in cfg.get("suites", []):
            if s not in SUITES:
                raise ConfigError(f"unknown suite {s!r}")


# ----------------------------------------------------------------------------
# experiments; each returns (files, summary) with files {name: text}
# ----------------------------------------------------------------------------

def _coefficient(cfg, base, threads):
    a, g = _symbol(cfg, base), _testfn(cfg["testfn"])
    methods = cfg.get("methods") or [m for m in METHODS if g.smooth or m != "hilbert"]
    eps = tuple(cfg.get("eps_schedule", DEFAULT_EPS_SCHEDULE))
    rows, summ = [], {}
    for m in methods:
        r = compute_B(CoefficientRequest(a, g, m, eps_schedule=eps, orders=_orders(cfg), workers=threads))
        log.info("%s: B = %.15g +- %.2g", m, r.value, r.error)
        # the partial sum above eps_min carries at most the full quadrature error
        rows.append([m, r.value, r.error, r.eps[-1], r.eps_values[-1], r.error, r.extrapolated,
                     r.extrapolation_error])
        summ[m] = {"B": r.value, "error": r.error, "eps": r.eps, "B_eps": r.eps_values,
                   "eps_extrapolated": r.extrapolated, "eps_extrapolation_error": r.extrapolation_error}
    header = ["method", "B", "error", "eps_min", "B_eps_min", "B_eps_min_error", "B_eps_extrapolated",
              "extrapolation_error"]
    return {"result.csv": _csv_text(header, rows)}, {"coefficient": summ}


def _trace_check(cfg, base, threads):
    a, g = _symbol(cfg, base), _testfn(cfg["testfn"])
    sched = [(float(h), int(M)) for h, M in cfg["schedule"]]
    st = convergence_study(a, g, sched)
    rows = []
    for h, M, v in zip(st.h, st.M, st.values):
        rows.append(["section", h, M, v, abs(v - st.extrapolated) + st.error])
    rows.append(["extrapolated", st.h[-1], st.M[-1], st.extrapolated, st.error])
    summ = {"values": st.values, "extrapolated": st.extrapolated, "error": st.error, "order": st.order}
    if cfg.get("compare", True):
        method = cfg.get("method", "direct-U")
        r = compute_B(CoefficientRequest(a, g, method, orders=_orders(cfg), workers=threads))
        rows.append([f"B:{method}", math.nan, 0, r.value, r.error])
        summ["B"] = {"method": method, "value": r.value, "error": r.error,
                     "difference": st.extrapolated - r.value, "combined_error": st.error + r.error}
    return {"result.csv": _csv_text(["row", "h", "M", "value", "error"], rows)}, {"trace": summ}


def fermi_scan_rows(temps, f, beta=None, method="via-V", orders=(8, 12), threads=1, p=math.inf):
    """One row per temperature: B, its error and both right-hand sides."""
    gam = f.gamma
    beta = 1.0 / gam if beta is None else beta
    n1, n2 = cusp_seminorm(f, 1), cusp_seminorm(f, 2)
    N = math.ceil(1 / gam + (0 if math.isinf(p) else 1 / p) - 1e-12)
    rows = []
    for T in temps:
        a = FermiSymbol(T)
        r = compute_B(CoefficientRequest(a, f, method, orders=orders, workers=threads))
        I, I_err = scales_integral(fermi_tau(T), power_weight(beta), gam, breaks=(-1.0, 1.0), with_error=True)
        gag = truncated_gagliardo(a, gam, 1.0)
        qn = wnp_quasi_norm(a, gam, N - 1, p, deriv=1) ** gam
        rows.append({"T": T, "B": r.value, "error": r.error,
                     "coeffscales_RHS": n2 * I, "coeffscales_RHS_error": n2 * I_err,
                     "bbound_RHS": n1 * gag.value + n2 * qn, "bbound_RHS_error": n1 * gag.error})
        log.info("T=%g: B = %.12g", T, r.value)
    return rows


def _fermi_scan(cfg, base, threads):
    f = _testfn(cfg["testfn"]) if "testfn" in cfg else power(0.5, x0=0.5)
    if f.kind != "cusp":
        raise ConfigError("fermi-scan needs a cusp test function")
    temps = [float(t) for t in cfg["T"]]
    rows = fermi_scan_rows(temps, f, cfg.get("beta"), cfg.get("method", "via-V"), _orders(cfg), threads)
    header = list(rows[0])
    text = _csv_text(header, [[r[k] for k in header] for r in rows])
    logT = np.abs(np.log(temps))
    summ = {"rows": rows}
    if len(temps) >= 2:
        alpha, beta0 = np.polyfit(logT, [r["B"] for r in rows], 1)
        summ["fit"] = {"alpha": alpha, "beta": beta0}
    return {"result.csv": text}, {"fermi_scan": summ}


def _bounds_report(cfg, base, threads):
    a, f = _symbol(cfg, base), _testfn(cfg["testfn"])
    tau = _tau(cfg["tau"]) if "tau" in cfg else None
    v = power_weight(float(cfg["weight"]["beta"])) if "weight" in cfg else None
    p = float(cfg.get("p", math.inf))
    rep = bound_report(a, f, N=cfg.get("N"), p=p, tau=tau, v=v, a0=float(cfg.get("a0", 0.0)),
                       m=float(cfg.get("m", 0.5)), which=cfg.get("bounds"))
    rows = [[name, rep.B, rep.B_error, rhs, rep.rhs_errors.get(name, 0.0), rep.ratios[name]]
            for name, rhs in rep.rhs.items()]
    header = ["bound", "B", "B_error", "rhs", "rhs_error", "ratio"]
    summ = {"B": rep.B, "B_error": rep.B_error, "rhs": rep.rhs, "rhs_errors": rep.rhs_errors,
            "terms": rep.terms,
            "ratios": rep.ratios, "constants": rep.constants}
    return {"result.csv": _csv_text(header, rows)}, {"bounds": summ}


def _covering_dump(cfg, base, threads):
    tau = _tau(cfg["tau"])
    nu = float(cfg.get("nu", 0.5))
    box = tuple(float(x) for x in cfg["box"])
    cov = build_covering(tau, nu, box, float(cfg.get("overlap", 0.5)), float(cfg.get("plateau", 0.5)))
    x = np.linspace(box[0], box[1], 20001)
    resid = float(np.abs(cov.phi(x).sum(axis=0) - 1).max())
    over = int(cov.overlap_count(x).max())
    c0, c1 = cov.derivative_constants(tau, x)
    cov_text = _csv_text(["j", "eta", "tau"], [[j, c, t] for j, (c, t) in enumerate(zip(cov.centers, cov.taus))])
    rows = [["partition_residual", resid, 0.0], ["max_overlap", over, 0.0], ["N_nu", cov.N_nu, 0.0],
            ["C0_observed", c0, 0.0], ["C1_observed", c1, 0.0], ["C1_bound", cov.C1_bound(), 0.0]]
    summ = {"count": len(cov.centers), "partition_residual": resid, "max_overlap": over,
            "N_nu": cov.N_nu, "C0": c0, "C1": c1, "C1_bound": cov.C1_bound()}
    return ({"result.csv": _csv_text(["quantity", "value", "error"], rows), "covering.csv": cov_text},
            {"covering": summ})


def _lemma_suite(cfg, base, threads, seed):
    names = cfg.get("suites") or list(SUITES)
    n = int(cfg.get("instances", K.SUITE_SIZE))
    seed = int(cfg.get("seed", K.SUITE_SEED)) if seed is None else seed
    rows = []
    for name in names:
        r = run_suite(name, n, seed)
        log.info("%s: %d violations", name, r.violations)
        rows.append([name, r.instances, r.violations, r.max_ratio, 0.0, "pass" if r.passed else "fail"])
    header = ["suite", "instances", "violations", "max_ratio", "max_ratio_error", "status"]
    summ = {"seed": seed, "suites": {r[0]: {"violations": r[2], "max_ratio": r[3]} for r in rows}}
    return {"result.csv": _csv_text(header, rows)}, {"lemma_suite": summ}


# ----------------------------------------------------------------------------
# driver
# ----------------------------------------------------------------------------

def load_config(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc


def run(cfg: dict, out: str | Path, base_dir: str | Path = ".", threads: int = 1,
        seed: int | None = None) -> dict:
    """Run one experiment and write its files atomically into ``out``."""
    validate(cfg)
    kind = cfg["kind"]
    if kind == "lemma-suite":
        files, summ = _lemma_suite(cfg, base_dir, threads, seed)
    else:
        fn = {"coefficient": _coefficient, "trace-check": _trace_check, "fermi-scan": _fermi_scan,
              "bounds-report": _bounds_report, "covering-dump": _covering_dump}[kind]
        files, summ = fn(cfg, base_dir, threads)
    summary = {"schema": 1, "version": __version__, "kind": kind, **summ}
    files["summary.json"] = json.dumps(_json_safe(summary), indent=2, sort_keys=True) + "\n"
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=out))
    try:
        for name, text in files.items():
            (tmp / name).write_text(text)
        for name in files:
            os.replace(tmp / name, out / name)
    finally:
        for leftover in tmp.iterdir():
            leftover.unlink()
        tmp.rmdir()
    return summary


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="widom-trace", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="TOML experiment file")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None, help="seed for the property suites")
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        run(cfg, args.out, Path(args.config).resolve().parent, max(1, args.threads), args.seed)
    except Exception as exc:  # report every failure as a record
        code = next((c for cls, c in _EXIT if isinstance(exc, cls)), 1)
        rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        sys.stderr.write(json.dumps(rec) + "\n")
        if args.verbose:
            log.exception("experiment failed")
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
