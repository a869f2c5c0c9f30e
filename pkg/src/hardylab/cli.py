"""Batch front-end: run verification sweeps and write JSON-lines and CSV plot data.

Every command writes ``results.jsonl`` (one object per case), ``summary.csv``
and per-sweep tables ``<command>-<variable>.csv`` into ``--out``.  The CSVs
are pure functions of the JSON records, so ``report`` rebuilds them without
recomputation.  Floats are written with 17 significant digits.

Exit status: 0 when every check passed, 1 on invalid input, a failed check or
a NaN, 2 when a divergence appeared where the run expected a finite value.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .errors import ConfigError, DivergenceError, HardyLabError
from .extremal import BumpMixture, Intermediate, Main, SplineProfile, maximize_ratio, recompute_ratio
from .functions import (
    BoundaryPlateau,
    ClampedLinear,
    Constant,
    Linear,
    SmoothBump,
    Step,
    TensorProfile,
    TestFunction,
    tv_seminorm,
)
from .geometry import AxisBox, Interval, Polygon2D
from .hardy import (
    counterexample_case,
    counterexample_closed_form,
    counterexample_lower_bound,
    series_sum,
    HardyCase,
    verify_intermediate,
    verify_main,
    spearman_trend,
    weighted_lhs,
)
from .logweights import Power, RhoStar, Square, WeightChain
from .seminorms import bbm_constant, bbm_limit_sweep

EXIT_OK, EXIT_FAIL, EXIT_DIVERGENCE = 0, 1, 2
SEED_ENV = "HARDYLAB_SEED"


# ---------------------------------------------------------------------------
# value parsers


def _float(text):
    t = str(text).strip().lower()
    named = {"e": math.e, "pi": math.pi, "inf": math.inf}
    if t in named:
        return named[t]
    v = float(t)
    if math.isnan(v):
        raise ValueError("nan is not a valid value")
    return v


def _int(text):
    v = _float(text)
    if v != int(v):
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _int_range(text):
    """'2..8', '2,3,5' or '4'."""
    t = str(text).strip()
    if ".." in t:
        lo, hi = t.split("..")
        lo, hi = _int(lo), _int(hi)
        if hi < lo:
            raise ValueError("empty range")
        return list(range(lo, hi + 1))
    return [_int(x) for x in t.split(",")]


def _float_list(text):
    return [_float(x) for x in str(text).split(",")]


def _kv(text):
    """'name:k=v,k=v' -> (name, {k: v})."""
    name, _, rest = str(text).strip().partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        k, eq, v = item.partition("=")
        if not eq:
            raise ValueError(f"expected key=value, got {item!r}")
        params[k.strip()] = v.strip()
    return name.strip().lower(), params


def _take(params, key, default, conv=_float):
    return conv(params.pop(key)) if key in params else default


def _no_leftovers(params):
    if params:
        raise ValueError(f"unknown parameter(s) {', '.join(sorted(params))}")


def parse_domain(text):
    name, p = _kv(text)
    if name == "interval":
        dom = Interval(_take(p, "D", 1.0))
    elif name == "box":
        dom = AxisBox(2, _take(p, "n", 1.0), _take(p, "h", 1.0))
    elif name == "square":
        dom = Polygon2D.unit_square()
    elif name == "flat":
        dom = (0.0, 1.0)
    else:
        raise ValueError(f"unknown domain {name!r}")
    _no_leftovers(p)
    return dom


def _dom_dim(dom):
    return 1 if isinstance(dom, (Interval, tuple)) else 2


def _dom_center(dom):
    if isinstance(dom, Interval):
        return (dom.D,)
    if isinstance(dom, tuple):
        return (0.5 * (dom[0] + dom[1]),)
    if isinstance(dom, AxisBox):
        return (0.0, dom.h / 2)
    return (0.5, 0.5)


def _dom_radius(dom):
    if isinstance(dom, tuple):
        return 0.5 * (dom[1] - dom[0])
    return dom.inradius


def parse_function(text, dom):
    name, p = _kv(text)
    dim = _dom_dim(dom)
    center = _dom_center(dom)
    if name == "linear":
        slope = _take(p, "slope", 1.0)
        d = Linear((slope,) if dim == 1 else (slope, 0.0))
    elif name == "constant":
        d = Constant(_take(p, "value", 1.0), dim)
    elif name == "bump":
        c = tuple(_take(p, f"c{i}", center[i]) for i in range(dim)) if dim > 1 else (_take(p, "center", center[0]),)
        d = SmoothBump(c, _take(p, "radius", 0.6 * _dom_radius(dom)), _take(p, "amplitude", 1.0))
    elif name == "step":
        d = Step((_take(p, "at", center[0]),), (_take(p, "height", 1.0),))
    elif name == "clamped":
        d = ClampedLinear(_take(p, "a", 0.25), _take(p, "b", 0.75), dim)
    elif name == "plateau":
        if isinstance(dom, tuple):
            raise ValueError("plateau needs a bounded domain, not the flat interval")
        d = BoundaryPlateau(_take(p, "c", 1.0), _take(p, "eps", 0.05), _take(p, "width", 0.2), dom)
    elif name == "tensor":
        d = TensorProfile(SmoothBump((0.0,), _take(p, "radius", 0.8), _take(p, "amplitude", 1.0)))
    else:
        raise ValueError(f"unknown function {name!r}")
    _no_leftovers(p)
    if d.dim != dim:
        raise ValueError(f"function {name!r} is {d.dim}D but the domain is {dim}D")
    return TestFunction(d)


def parse_tail(text):
    name, p = _kv(text)
    if name == "square":
        tail = Square()
    elif name == "power":
        tail = Power(_take(p, "beta", 2.0))
    elif name == "rhostar":
        tail = RhoStar(_take(p, "beta", 2.0))
    else:
        raise ValueError(f"unknown tail {name!r}")
    _no_leftovers(p)
    return tail


def parse_family(text, dom):
    name, p = _kv(text)
    if name == "bump":
        fam = BumpMixture(_take(p, "K", 1, _int), dom)
    elif name == "spline":
        fam = SplineProfile(_take(p, "n", 5, _int), dom)
    else:
        raise ValueError(f"unknown family {name!r}")
    _no_leftovers(p)
    return fam


# ---------------------------------------------------------------------------
# options


COMMON = {
    "out": (str, "results"),
    "seed": (_int, None),
    "jobs": (_int, 1),
}
OPTIONS = {
    "weights": {"m": (_int, 2), "R": (_float, math.e), "grid": (_int, 100), "tail": (parse_tail, "square")},
    "verify-main": {
        "domain": (parse_domain, "interval:D=1"),
        "fn": (str, "bump"),
        "m": (_int_range, "2..8"),
        "R": (_float, math.e),
    },
    "verify-frac": {
        "domain": (parse_domain, "interval:D=1"),
        "fn": (str, "bump"),
        "s": (_float_list, "0.5,0.7,0.9"),
        "m": (_int_range, "2"),
        "R": (_float, math.e),
    },
    "series": {
        "domain": (parse_domain, "interval:D=1"),
        "fn": (str, "tensor"),
        "alpha": (_float_list, "0.4,1.0"),
        "R": (_float, math.e),
        "mmax": (_int, 10_000),
        "tol": (_float, 1e-6),
        "witness": (_float, 10.0),
    },
    "bbm": {
        "domain": (parse_domain, "interval:D=1"),
        "fn": (str, "linear"),
        "s": (_float_list, "0.9,0.95,0.99"),
        "tol": (_float, 0.02),
    },
    "counterexample": {
        "m": (_int_range, "2..6"),
        "R": (_float, math.e),
        "n": (_int, 1),
        "alpha": (_float_list, "1.0"),
        "mmax": (_int, 10_000),
    },
    "extremal": {
        "domain": (parse_domain, "interval:D=1"),
        "family": (str, "bump:K=1"),
        "objective": (str, "main"),
        "m": (_int_range, "2"),
        "s": (_float, 0.5),
        "R": (_float, math.e),
        "budget": (_int, 500),
        "restarts": (_int, 5),
    },
    "report": {"from": (str, None)},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("arguments", message)


def _build_parser():
    parser = _Parser(prog="hardylab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd, opts in OPTIONS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config")
        for key in {**COMMON, **opts}:
            sp.add_argument(f"--{key}", dest=key.replace("-", "_"), default=None)
    return parser


def read_config(path):
    """Flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError("config", f"line {lineno} is not key = value")
        out[key.strip().lstrip("-")] = value.strip()
    return out


def resolve(command, flags, config):
    """Merge flags over config over defaults and parse every field."""
    table = {**COMMON, **OPTIONS[command]}
    for key in config:
        if key not in table:
            raise ConfigError(key, f"unknown key for {command!r}")
    raw = {}
    for key, (_, default) in table.items():
        v = flags.get(key.replace("-", "_"))
        raw[key] = v if v is not None else config.get(key, default)
    if raw["seed"] is None:
        raw["seed"] = os.environ.get(SEED_ENV, "0")
    cfg = {}
    deferred = {"fn", "family"}
    for key, (conv, _) in table.items():
        if key in deferred or raw[key] is None:
            cfg[key] = raw[key]
            continue
        try:
            cfg[key] = conv(raw[key])
        except (ValueError, HardyLabError) as exc:
            raise ConfigError(key, str(exc)) from None
    if command == "report" and cfg["from"] is None:
        raise ConfigError("from", "report needs --from <directory>")
    if cfg["jobs"] < 1:
        raise ConfigError("jobs", "must be at least 1")
    dom = cfg.get("domain")
    if "fn" in cfg:
        if command == "series" and str(cfg["fn"]).startswith("tensor"):
            cfg["fn"] = str(cfg["fn"])
        else:
            try:
                cfg["fn"] = parse_function(cfg["fn"], dom)
            except (ValueError, HardyLabError) as exc:
                raise ConfigError("fn", str(exc)) from None
    if "family" in cfg:
        if isinstance(dom, tuple):
            raise ConfigError("domain", "extremal search needs an Interval domain")
        try:
            cfg["family"] = parse_family(cfg["family"], dom)
        except (ValueError, HardyLabError) as exc:
            raise ConfigError("family", str(exc)) from None
        if cfg["objective"] not in ("main", "frac"):
            raise ConfigError("objective", "must be 'main' or 'frac'")
    for key in ("s",):
        vals = cfg.get(key)
        if vals is not None:
            for v in np.atleast_1d(vals):
                if not 0 < v < 1:
                    raise ConfigError(key, f"s = {v} outside (0, 1)")
    if command == "verify-frac" and isinstance(dom, Polygon2D):
        raise ConfigError("domain", "verify-frac supports interval, flat and box domains")
    if command in ("verify-main", "series") and isinstance(dom, tuple):
        raise ConfigError("domain", "the flat interval is only used by verify-frac")
    return cfg


# ---------------------------------------------------------------------------
# formatting


def fmt(v):
    """17 significant digits for floats; JSON-style literals otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def to_json(obj):
    """Deterministic JSON with keys in insertion order and %.17g floats."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (bool, np.bool_, int, np.integer, float, np.floating)):
        return fmt(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


SUMMARY_COLUMNS = ["case_id", "command", "m", "s", "alpha", "beta", "lhs", "rhs_terms", "measured_constant", "verdict", "pass"]


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def summary_csv(records):
    rows = []
    for r in records:
        rhs = r.get("rhs_components") or {}
        rhs_text = ";".join(f"{k}={fmt(v)}" for k, v in rhs.items())
        rows.append([r.get("case_id"), r.get("command"), r.get("m"), r.get("s"), r.get("alpha"), r.get("beta"),
                     r.get("lhs"), rhs_text, r.get("measured_constant"), r.get("verdict"), r.get("pass")])
    return _csv_text(SUMMARY_COLUMNS, rows)


def sweep_csvs(records):
    """{filename: text} for every (command, sweep variable) present in the records."""
    tables = {}
    for r in records:
        sweep = r.get("sweep")
        if not sweep:
            continue
        name = f"{r['command']}-{sweep['variable']}.csv"
        cols, rows = tables.setdefault(name, (list(sweep["columns"]), []))
        if list(sweep["columns"]) != cols:
            raise HardyLabError(f"inconsistent columns in {name}")
        rows.extend(sweep["rows"])
    return {name: _csv_text(cols, rows) for name, (cols, rows) in sorted(tables.items())}


def write_outputs(out, records, write_jsonl=True):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if write_jsonl:
        (out / "results.jsonl").write_text("".join(to_json(r) + "\n" for r in records))
    (out / "summary.csv").write_text(summary_csv(records))
    for name, text in sweep_csvs(records).items():
        (out / name).write_text(text)


# ---------------------------------------------------------------------------
# cases


def _record(case_id, command, rep_dict, verdict, variable, columns, rows, **extra):
    rec = {"case_id": case_id, "command": command}
    rec.update(rep_dict)
    rec["verdict"] = verdict
    rec.update(extra)
    rec["sweep"] = {"variable": variable, "columns": columns, "rows": rows}
    return rec


def _verdict(passed):
    return "pass" if passed else "fail"


def _domain_label(dom):
    if isinstance(dom, tuple):
        return {"variant": "flat", "bounds": list(dom)}
    return dom.to_dict()


def cases_weights(cfg):
    chain = WeightChain(cfg["m"], cfg["R"], cfg["tail"])
    n = cfg["grid"]
    if n < 1:
        raise ConfigError("grid", "must be positive")

    def run():
        t = chain.R * np.arange(1, n + 1) / n
        v = np.asarray(chain(t), dtype=float)
        ok = bool(np.all(np.isfinite(v)))
        rep = {"m": chain.m, "R": chain.R, "chain": chain.to_dict(), "pass": ok}
        return _record("weights", "weights", rep, _verdict(ok), "t", ["t", "value"], [[a, b] for a, b in zip(t, v)])

    return [run]


def cases_verify_main(cfg):
    u, dom, R = cfg["fn"], cfg["domain"], cfg["R"]
    tv = tv_seminorm(u, dom)
    cases = []
    for m in cfg["m"]:
        def run(m=m):
            rep = verify_main(u, dom, m, R, tv=tv, explicit=False).to_dict()
            rows = [[m, rep["lhs"], rep["measured_constant"], rep["pass"]]]
            return _record(f"verify-main:m={m}", "verify-main", rep, _verdict(rep["pass"]), "m",
                           ["m", "lhs", "measured_constant", "pass"], rows, domain=_domain_label(dom), fn=u.to_dict())
        cases.append(run)
    return cases


def finish_verify_main(records, cfg):
    ms = [r["m"] for r in records]
    consts = [r["measured_constant"] for r in records]
    rho = spearman_trend(ms, consts)
    ok = all(r["pass"] for r in records) and rho <= 0 and all(map(math.isfinite, consts))
    rep = {"m": None, "lhs": None, "measured_constant": max(consts), "spearman": rho, "pass": ok,
           "paper_constant_form": "C*2^m"}
    return [_record("verify-main:sweep", "verify-main", rep, _verdict(ok), "trend", ["max_constant", "spearman", "pass"],
                    [[max(consts), rho, ok]])]


def cases_verify_frac(cfg):
    u, dom, R = cfg["fn"], cfg["domain"], cfg["R"]
    cases = []
    for m in cfg["m"]:
        for s in cfg["s"]:
            def run(m=m, s=s):
                rep = verify_intermediate(u, dom, s, m, R).to_dict()
                rhs = rep["rhs_components"]
                rows = [[s, m, rep["lhs"], rhs["seminorm_term"], rhs["l1_term"], rhs.get("explicit_1d"),
                         rep["measured_constant"], rep["pass"]]]
                return _record(f"verify-frac:m={m},s={s!r}", "verify-frac", rep, _verdict(rep["pass"]), "s",
                               ["s", "m", "lhs", "seminorm_term", "l1_term", "explicit_1d", "measured_constant", "pass"],
                               rows, domain=_domain_label(dom), fn=u.to_dict())
            cases.append(run)
    return cases


def cases_series(cfg):
    fn = cfg["fn"]
    tensor = isinstance(fn, str)
    if tensor:
        name, p = _kv(fn)
        try:
            n = _take(p, "n", 1, _int)
            _no_leftovers(p)
            case = counterexample_case(m=2, R=cfg["R"], n=n)
        except (ValueError, HardyLabError) as exc:
            raise ConfigError("fn", str(exc)) from None
    else:
        case = HardyCase(fn, cfg["domain"], WeightChain(2, cfg["R"]))
    cases = []
    for a in cfg["alpha"]:
        def run(a=a):
            res = series_sum(case, a, m_max=cfg["mmax"], tol=cfg["tol"], witness_factor=cfg["witness"])
            d = res.to_dict()
            if a < 1:
                ok = res.verdict == "Converged" and (res.envelope is None or res.total <= res.envelope)
            else:
                ok = res.verdict == "DivergenceWitness" and tensor
            if a >= 1 and res.verdict == "DivergenceWitness" and not tensor:
                d["unexpected_divergence"] = True
            rep = {"m": res.m_stop, "alpha": a, "lhs": res.total, "measured_constant": res.measured_constant,
                   "rhs_components": {"tail_bound": res.tail_bound, "reference_total": res.reference_total,
                                      "envelope": res.envelope}, "pass": ok}
            rows = [[a, m, t, s] for m, t, s in zip(range(2, res.m_stop + 1), res.terms, res.partial_sums)]
            return _record(f"series:alpha={a!r}", "series", rep, res.verdict, "m",
                           ["alpha", "m", "term", "partial_sum"], rows,
                           **{k: v for k, v in d.items() if k == "unexpected_divergence"})
        cases.append(run)
    return cases


def cases_bbm(cfg):
    u, dom, tol = cfg["fn"], cfg["domain"], cfg["tol"]

    def run():
        target = bbm_constant(_dom_dim(dom)) * tv_seminorm(u, dom)
        sweep = bbm_limit_sweep(u, dom, sorted(cfg["s"]))
        vals = [v for _, v in sweep]
        increasing = all(b > a for a, b in zip(vals[:-1], vals[1:]))
        rel = abs(vals[-1] - target) / target if target > 0 else math.inf
        ok = increasing and rel < tol
        rep = {"s": sweep[-1][0], "lhs": vals[-1], "rhs_components": {"C_BV*TV": target},
               "measured_constant": vals[-1] / target if target > 0 else None, "rel_error": rel,
               "increasing": increasing, "pass": ok}
        rows = [[s, v, target, abs(v - target) / target] for s, v in sweep]
        return _record("bbm", "bbm", rep, _verdict(ok), "s", ["s", "scaled_seminorm", "target", "rel_error"], rows)

    return [run]


def cases_counterexample(cfg):
    R, n = cfg["R"], cfg["n"]
    cases = []
    for m in cfg["m"]:
        def run(m=m):
            case = counterexample_case(m=m, R=R, n=n)
            lhs = weighted_lhs(case)
            forms = counterexample_closed_form(case)
            rel = abs(lhs - forms["chain_rule"]) / forms["chain_rule"]
            rel_alt = abs(lhs - forms["with_1_over_R"]) / forms["with_1_over_R"]
            reading = "chain_rule" if rel < rel_alt else "with_1_over_R"
            ok = rel < 1e-4
            rep = {"m": m, "R": R, "lhs": lhs, "rhs_components": forms, "measured_constant": None,
                   "reading": reading, "rel_error": rel, "pass": ok}
            rows = [[m, lhs, forms["chain_rule"], forms["with_1_over_R"], rel]]
            return _record(f"counterexample:m={m}", "counterexample", rep, reading, "m",
                           ["m", "lhs", "chain_rule", "with_1_over_R", "rel_error"], rows)
        cases.append(run)
    for a in cfg["alpha"]:
        def run_series(a=a):
            case = counterexample_case(m=2, R=R, n=n)
            res = series_sum(case, a, m_max=cfg["mmax"], closed_form=True)
            lb = [counterexample_lower_bound(case.with_chain(WeightChain(m, R)), a) for m in range(2, res.m_stop + 1)]
            terms_ok = all(a**m * t >= b for m, t, b in zip(range(2, res.m_stop + 1), res.terms, lb))
            ok = terms_ok and (res.verdict == "DivergenceWitness" if a >= 1 else res.verdict == "Converged")
            rep = {"m": res.m_stop, "alpha": a, "lhs": res.total,
                   "rhs_components": {"reference_total": res.reference_total, "tail_bound": res.tail_bound},
                   "measured_constant": None, "lower_bounds_hold": terms_ok, "pass": ok}
            rows = [[a, m, t, s, b] for m, t, s, b in zip(range(2, res.m_stop + 1), res.terms, res.partial_sums, lb)]
            return _record(f"counterexample:alpha={a!r}", "counterexample", rep, res.verdict, "alpha",
                           ["alpha", "m", "term", "partial_sum", "lower_bound"], rows)
        cases.append(run_series)
    return cases


def cases_extremal(cfg):
    fam = cfg["family"]
    cases = []
    for m in cfg["m"]:
        def run(m=m):
            obj = Main(m, cfg["R"]) if cfg["objective"] == "main" else Intermediate(cfg["s"], m, cfg["R"])
            res = maximize_ratio(fam, obj, cfg["budget"], cfg["restarts"], cfg["seed"])
            again = recompute_ratio(fam, obj, res.best_params)
            ok = abs(again - res.best_ratio) <= 1e-9 * abs(res.best_ratio)
            rep = {"m": m, "s": obj.s if isinstance(obj, Intermediate) else "BV", "lhs": None,
                   "measured_constant": res.best_ratio, "pass": ok}
            rep.update(res.to_dict())
            rows = [[m, res.best_ratio, res.best_ratio * 2.0**m, res.restart_dispersion, res.evaluations]]
            return _record(f"extremal:m={m}", "extremal", rep, "recomputed" if ok else "mismatch", "m",
                           ["m", "best_ratio", "raw_ratio", "restart_dispersion", "evaluations"], rows)
        cases.append(run)
    return cases


BUILDERS = {
    "weights": cases_weights,
    "verify-main": cases_verify_main,
    "verify-frac": cases_verify_frac,
    "series": cases_series,
    "bbm": cases_bbm,
    "counterexample": cases_counterexample,
    "extremal": cases_extremal,
}
FINISHERS = {"verify-main": finish_verify_main}
# commands whose purpose is to witness divergence
EXPECTS_DIVERGENCE = {"counterexample"}


class _CaseFailure(Exception):
    def __init__(self, index, exc):
        super().__init__(str(exc))
        self.index, self.exc = index, exc


def _run_case(i, fn):
    try:
        rec = fn()
    except HardyLabError as exc:
        raise _CaseFailure(i, exc) from exc
    return rec


def _has_nan(obj):
    if isinstance(obj, float):
        return math.isnan(obj)
    if isinstance(obj, dict):
        return any(_has_nan(v) for v in obj.values())
    if isinstance(obj, (list, tuple)):
        return any(_has_nan(v) for v in obj)
    return False


def execute(command, cfg, out=sys.stdout):
    """Run a command; return (exit status, records)."""
    cases = BUILDERS[command](cfg)
    jobs = cfg["jobs"]
    records = []
    status = EXIT_OK
    try:
        if jobs > 1:
            with ThreadPoolExecutor(jobs) as ex:
                records = list(ex.map(_run_case, range(len(cases)), cases))
        else:
            records = [_run_case(i, c) for i, c in enumerate(cases)]
    except _CaseFailure as failure:
        exc = failure.exc
        if isinstance(exc, DivergenceError):
            print(f"case {failure.index}: divergence: {exc}", file=sys.stderr)
            return EXIT_DIVERGENCE, records
        print(f"case {failure.index}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL, records
    if command in FINISHERS:
        records = records + FINISHERS[command](records, cfg)
    for r in records:
        if _has_nan({k: v for k, v in r.items() if k != "sweep"}) or _has_nan(r["sweep"]["rows"]):
            print(f"{r['case_id']}: NaN in result", file=sys.stderr)
            return EXIT_FAIL, records
    write_outputs(cfg["out"], records)
    for r in records:
        print(f"{r['case_id']}: {r['verdict']}", file=out)
        if r.get("unexpected_divergence") and command not in EXPECTS_DIVERGENCE:
            status = EXIT_DIVERGENCE
        elif not r.get("pass") and status == EXIT_OK:
            status = EXIT_FAIL
    return status, records


def report(cfg, out=sys.stdout):
    src = Path(cfg["from"])
    try:
        lines = (src / "results.jsonl").read_text().splitlines()
    except OSError as exc:
        raise ConfigError("from", f"cannot read results.jsonl in {src}: {exc.strerror}") from None
    records = [json.loads(line) for line in lines if line.strip()]
    dest = cfg["out"] if cfg["out"] != COMMON["out"][1] else str(src)
    write_outputs(dest, records, write_jsonl=Path(dest).resolve() != src.resolve())
    ok = all(r.get("pass") for r in records)
    print(f"{len(records)} records, {sum(bool(r.get('pass')) for r in records)} passed", file=out)
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = vars(_build_parser().parse_args(argv))
        command = args.pop("command")
        config = read_config(args["config"]) if args.get("config") else {}
        cfg = resolve(command, args, config)
        if command == "report":
            return report(cfg)
        status, _ = execute(command, cfg)
        return status
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
