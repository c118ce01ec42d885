"""Seeded verification campaigns: field/domain specs, scenario runners, deterministic reports."""
from __future__ import annotations

import csv
import io
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import fields as F
from .barrier import Barrier
from .convexity import Verdict, monotonicity_check, classify
from .group import Box, GaugeAnnulus, GaugeBall, Point
from .horizontal import taylor_decay
from .measures import (admissible_pair, compare_pair, geometric_schedule, kinked_approximant, kinked_reference,
                       measure_of_region, oscillation_bound_check, trace_integral, weak_convergence_test,
                       TestFunction)
from .quadrature import SamplePlan

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

SCENARIOS = ("convexity", "measure", "compare", "oscillation", "taylor", "appendix", "weak-convergence")


class ConfigError(ValueError):
    """Bad campaign configuration (exit status 2)."""


# specs ---------------------------------------------------------------------

_TERM = re.compile(r"^([-+]?)(?:(\d*\.?\d+(?:[eE][-+]?\d+)?)\*)?([a-z0-9]+)(?:\((.*)\))?$")


def _split_terms(spec: str) -> list[str]:
    """Split at top-level + and − (binary only; exponents and arguments are left alone)."""
    terms, cur, depth = [], "", 0
    for ch in spec.replace(" ", ""):
        depth += ch == "("
        depth -= ch == ")"
        binary = cur and cur[-1] not in "eE*+-(" and depth == 0
        if ch in "+-" and binary and not (cur[-1] in "eE" and cur[:-1][-1:].isdigit()):
            terms.append(cur)
            cur = ch
        else:
            cur += ch
    terms.append(cur)
    return terms


def _base_field(name: str, args: str | None, n: int) -> F.ScalarField:
    simple = {"t": F.t_field, "sq": F.sq_field, "gauge": F.gauge_field, "gauge4": F.gauge4_field}
    if name in simple:
        if args:
            raise ConfigError(f"field {name!r} takes no arguments")
        return simple[name](n)
    if name == "barrier":
        vals = {}
        parts = [p.strip() for p in (args or "").split(",") if p.strip()]
        keys = ["R", "sigma", "m0"]
        for k, p in enumerate(parts):
            if "=" in p:
                key, val = (s.strip() for s in p.split("=", 1))
            elif k < len(keys):
                key, val = keys[k], p
            else:
                raise ConfigError(f"too many barrier arguments in {args!r}")
            vals[key] = float(val)
        if set(vals) != set(keys):
            raise ConfigError("barrier needs R, sigma and m0")
        try:
            return Barrier(Point.identity(n), vals["R"], vals["sigma"], vals["m0"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown field {name!r}")


def parse_field(spec: str, n: int) -> F.ScalarField:
    """Signed sum of optionally scaled named fields, e.g. ``"sq - 0.5*t"`` or ``"barrier(1,0.5,-1)"``."""
    out = None
    for term in _split_terms(spec):
        m = _TERM.match(term)
        if not m:
            raise ConfigError(f"cannot parse field term {term!r}")
        coef = float(m.group(2)) if m.group(2) else 1.0
        coef = -coef if m.group(1) == "-" else coef
        f = _base_field(m.group(3), m.group(4), n)
        f = f if coef == 1.0 else coef * f
        out = f if out is None else out + f
    if out is None:
        raise ConfigError("empty field spec")
    out.name = spec
    return out


def parse_domain(spec, n: int):
    """Dict form ``{type = "box"|"ball"|"annulus", ...}`` or string ``box:lo,hi``, ``ball:R``, ``annulus:r1,r2``."""
    if isinstance(spec, str):
        kind, _, rest = spec.partition(":")
        nums = [float(x) for x in rest.split(",") if x.strip()] if rest else []
        d = 2 * n + 1
        if kind == "box":
            lo, hi = nums if len(nums) == 2 else (0.0, 1.0)
            spec = {"type": "box", "lower": [lo] * d, "upper": [hi] * d}
        elif kind == "ball":
            spec = {"type": "ball", "center": [0.0] * d, "radius": nums[0] if nums else 1.0}
        elif kind == "annulus":
            if len(nums) != 2:
                raise ConfigError("annulus needs inner,outer")
            spec = {"type": "annulus", "center": [0.0] * d, "inner": nums[0], "outer": nums[1]}
        else:
            raise ConfigError(f"unknown domain {spec!r}")
    try:
        kind = spec["type"]
        if kind == "box":
            dom = Box(np.asarray(spec["lower"], float), np.asarray(spec["upper"], float))
        elif kind == "ball":
            dom = GaugeBall(Point.from_array(spec["center"]), float(spec["radius"]))
        elif kind == "annulus":
            dom = GaugeAnnulus(Point.from_array(spec["center"]), float(spec["inner"]), float(spec["outer"]))
        else:
            raise ConfigError(f"unknown domain type {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad domain {spec!r}: {exc}") from None
    if dom.n != n:
        raise ConfigError(f"domain lives in dimension {2 * dom.n + 1}, expected {2 * n + 1}")
    return dom, spec


# scenario runners -------------------------------------------------------------
# each returns (summary dict with a boolean "pass", list of table rows)

def _plan(sc: dict, seed: int, default_count: int = 2000) -> SamplePlan:
    return SamplePlan(kind=sc.get("sampler", "random"), count=int(sc.get("samples", default_count)),
                      per_axis=int(sc.get("per_axis", 9)), seed=seed)


def run_convexity(sc, n, seed):
    field = parse_field(sc.get("field", "sq"), n)
    dom, dspec = parse_domain(sc.get("domain", "ball:1"), n)
    rep = classify(field, dom, _plan(sc, seed), tol=float(sc.get("tol", 1e-8)), euclidean=field.exact)
    expect = sc.get("expect")
    if expect is not None and expect not in Verdict.__members__:
        raise ConfigError(f"unknown verdict {expect!r}")
    ok = rep.verdict.value == expect if expect else rep.verdict is not Verdict.NEITHER
    summary = {"verdict": rep.verdict.value, "samples": rep.samples, "min_eigenvalue": rep.min_eigenvalue,
               "min_trace": rep.min_trace, "min_sigma2": rep.min_sigma2, "failing_count": rep.failing_count,
               "min_euclidean_eigenvalue": rep.min_euclidean_eigenvalue, "pass": bool(ok)}
    rows = [{"point": p.as_array().tolist()} for p in rep.failing_points]
    return summary, rows


def run_measure(sc, n, seed):
    field = parse_field(sc.get("field", "t"), n)
    dom, _ = parse_domain(sc.get("domain", "box:0,1"), n)
    res = sc.get("resolution", 8)
    res = tuple(res) if isinstance(res, list) else int(res)
    est = measure_of_region(field, dom, res)
    tr = trace_integral(field, dom, res)
    tol = float(sc.get("tol", 1e-9))
    if "expect" in sc:
        ok = abs(est.value - float(sc["expect"])) <= est.error_estimate + tol
    else:
        ok = est.value >= -(est.error_estimate + tol)
    summary = {"value": est.value, "error_estimate": est.error_estimate, "step": est.resolution,
               "trace_value": tr.value, "trace_error_estimate": tr.error_estimate, "pass": bool(ok)}
    if "expect" in sc:
        summary["expect"] = float(sc["expect"])
    return summary, [{"quantity": "measure", "value": est.value, "error_estimate": est.error_estimate},
                     {"quantity": "trace", "value": tr.value, "error_estimate": tr.error_estimate}]


def run_compare(sc, n, seed):
    rng = np.random.default_rng(seed)
    pairs = int(sc.get("pairs", 20))
    res = int(sc.get("resolution", 12 if n == 1 else 8))
    rows, fails, pre = [], 0, 0
    for k in range(pairs):
        p = admissible_pair(n, rng, float(sc.get("theta", 0.5)))
        r = compare_pair(p.u, p.v, p.region, res, seed=seed + k)
        row = {"pair": k, "verdict": r.verdict.value, **{f"param_{a}": b for a, b in p.params.items()}}
        if r.measure_margin is not None:
            row.update(measure_margin=r.measure_margin.value, measure_error=r.measure_margin.error_estimate,
                       trace_margin=r.trace_margin.value, trace_error=r.trace_margin.error_estimate)
        rows.append(row)
        fails += r.verdict.value == "FAIL"
        pre += r.verdict.value == "PRECONDITION_FAILED"
    summary = {"pairs": pairs, "failures": fails, "precondition_failures": pre,
               "min_measure_margin": min((r.get("measure_margin", math.inf) for r in rows), default=math.inf),
               "min_trace_margin": min((r.get("trace_margin", math.inf) for r in rows), default=math.inf),
               "pass": fails == 0 and pre == 0}
    return summary, rows


def run_oscillation(sc, n, seed):
    specs = sc.get("fields", [sc.get("field", "sq")])
    R = float(sc.get("R", 1.0))
    sigma = float(sc.get("sigma", 0.5))
    res = int(sc.get("resolution", 12))
    center = Point.from_array(sc.get("center", [0.0] * (2 * n + 1)))
    outer, inner = GaugeBall(center, R), GaugeBall(center, sigma * R)
    rows = []
    for spec in specs:
        r = oscillation_bound_check(parse_field(spec, n), outer, inner, res, _plan(sc, seed, 4000))
        rows.append({"field": spec, "osc": r.osc, "measure_ratio": r.measure_ratio, "trace_ratio": r.trace_ratio,
                     "sigma2_ratio": r.sigma2_ratio, "ut_ratio": r.ut_ratio, "measure_bound": r.measure_bound,
                     "trace_bound": r.trace_bound, "within_bounds": r.within_bounds})
    summary = {"fields": len(rows), "max_measure_ratio": max(r["measure_ratio"] for r in rows),
               "max_trace_ratio": max(r["trace_ratio"] for r in rows),
               "measure_bound": rows[0]["measure_bound"], "trace_bound": rows[0]["trace_bound"],
               "pass": all(r["within_bounds"] for r in rows)}
    return summary, rows


def run_taylor(sc, n, seed):
    field = parse_field(sc.get("field", "gauge4"), n)
    p0 = sc.get("p0", [0.0] * (2 * n + 1))
    radii = [float(r) for r in sc.get("radii", [0.2, 0.1, 0.05, 0.025])]
    vals = taylor_decay(field, p0, radii, int(sc.get("resolution", 16)))
    factors = [a / b if b > 0 else math.inf for a, b in zip(vals, vals[1:])]
    ok = True
    if "max_value" in sc:
        ok &= max(vals) <= float(sc["max_value"])
    if "factor_range" in sc:
        lo, hi = (float(x) for x in sc["factor_range"])
        ok &= all(lo <= f <= hi for f in factors)
    rows = [{"radius": r, "value": v} for r, v in zip(radii, vals)]
    return {"values": vals, "factors": factors, "pass": bool(ok)}, rows


def run_appendix(sc, n, seed):
    rep = monotonicity_check(int(sc.get("samples", 1000)), seed, tuple(sc.get("dims", (2, 3, 4, 6))))
    d = rep.as_dict()
    return d, [d]


def run_weak(sc, n, seed):
    example = sc.get("example", "kinked")
    steps = int(sc.get("steps", 5))
    d = 2 * n + 1
    f = TestFunction(np.asarray(sc.get("f_center", [0.1, -0.05] + [0.0] * (d - 3) + [0.02])[:d], float),
                     np.asarray(sc.get("f_half_widths", [0.5] * (d - 1) + [0.3]), float))
    region = Box.cube(n, -1.0, 1.0)
    if example == "kinked":
        c = float(sc.get("c", 1.0))
        res = tuple(sc.get("resolution", [24] * (d - 1) + [400]))
        tab = weak_convergence_test(None, geometric_schedule(float(sc.get("eps0", 0.2)), steps), f, region, res,
                                    approximant=kinked_approximant(n, c), reference=kinked_reference(n, c, f))
        ok = tab.non_increasing(float(sc.get("slack", 0.1)))
    elif example == "smooth":
        field = parse_field(sc.get("field", "gauge4 + sq"), n)
        res = int(sc.get("resolution", 16))
        tab = weak_convergence_test(field, geometric_schedule(float(sc.get("eps0", 0.1)), steps), f, region, res)
        eps_star = float(sc.get("eps_star", 0.05))
        ok = all(dd <= tab.reference_error for e, dd in zip(tab.schedule, tab.discrepancies) if e <= eps_star)
    else:
        raise ConfigError(f"unknown weak-convergence example {example!r}")
    summary = {"example": example, "reference": tab.reference, "reference_error": tab.reference_error,
               "discrepancies": tab.discrepancies, "pass": bool(ok)}
    return summary, tab.rows()


RUNNERS = {"convexity": run_convexity, "measure": run_measure, "compare": run_compare,
           "oscillation": run_oscillation, "taylor": run_taylor, "appendix": run_appendix,
           "weak-convergence": run_weak}


# campaigns ---------------------------------------------------------------------

def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        if path.suffix == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None


def resolve_config(cfg: dict) -> dict:
    """Fill defaults and validate; the result is embedded in every report."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a table")
    base = dict(cfg.get("campaign", {}))
    out = {"n": int(base.get("n", cfg.get("n", 1))), "seed": int(base.get("seed", cfg.get("seed", 0))),
           "name": str(base.get("name", cfg.get("name", "campaign")))}
    if out["n"] < 1:
        raise ConfigError("n must be >= 1")
    if not 0 <= out["seed"] < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    scen = cfg.get("scenario", cfg.get("scenarios", []))
    if isinstance(scen, dict):
        scen = [scen]
    if not scen:
        raise ConfigError("no scenarios given")
    resolved = []
    for k, sc in enumerate(scen):
        if not isinstance(sc, dict) or "kind" not in sc:
            raise ConfigError(f"scenario {k} needs a 'kind'")
        if sc["kind"] not in RUNNERS:
            raise ConfigError(f"unknown scenario kind {sc['kind']!r}; choose from {', '.join(SCENARIOS)}")
        sc = dict(sc)
        sc.setdefault("n", out["n"])
        sc.setdefault("seed", out["seed"])
        resolved.append(sc)
    out["scenario"] = resolved
    return out


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def run_campaign(cfg: dict) -> dict:
    resolved = resolve_config(cfg)
    results = []
    for k, sc in enumerate(resolved["scenario"]):
        try:
            summary, rows = RUNNERS[sc["kind"]](sc, int(sc["n"]), int(sc["seed"]))
        except ConfigError:
            raise
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"scenario {k} ({sc['kind']}): bad parameter {exc}") from None
        results.append({"index": k, "kind": sc["kind"], "summary": summary, "table": rows})
    report = {"config": resolved, "results": results, "pass": all(r["summary"]["pass"] for r in results)}
    return _clean(report)


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def dumps_csv(rows: list[dict]) -> str:
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([json.dumps(_clean(r[c])) if isinstance(r.get(c), (list, dict)) else _clean(r.get(c, ""))
                    for c in cols])
    return buf.getvalue()


def write_report(report: dict, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "summary.json"]
    paths[0].write_text(dumps_json(report))
    for r in report["results"]:
        p = out / f"{r['index']:02d}_{r['kind']}.csv"
        p.write_text(dumps_csv(r["table"]))
        paths.append(p)
    return paths
