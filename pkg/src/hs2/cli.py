"""``hs2`` command line: run TOML campaigns or single checks.

Exit status: 0 when every check passes, 1 when a check fails, 2 on
configuration or usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .campaign import ConfigError, dumps_csv, dumps_json, load_config, run_campaign, write_report

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _common(p: argparse.ArgumentParser, resolution=None):
    p.add_argument("--n", type=int, default=1, help="group index n (points live in R^(2n+1))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=int, default=resolution)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hs2", description="Convexity and sigma2-measure checks on the Heisenberg group.")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("run", help="run a campaign config (TOML or JSON)")
    p.add_argument("config")
    p.add_argument("--out", help="directory for summary.json and per-scenario CSV tables")
    p.add_argument("--seed", type=int, help="override the campaign seed")
    p.add_argument("--resolution", type=int, help="override every scenario's resolution")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="stdout format when --out is absent")

    p = sub.add_parser("check-convexity", help="classify a field on a domain")
    _common(p)
    p.add_argument("--field", default="sq")
    p.add_argument("--domain", default="ball:1", help="box:lo,hi | ball:R | annulus:r1,r2")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--expect", choices=("H_CONVEX", "SIGMA2_CONVEX_ONLY", "NEITHER"))

    p = sub.add_parser("measure", help="mu(u)(E) and the trace integral")
    _common(p, 8)
    p.add_argument("--field", default="t")
    p.add_argument("--domain", default="box:0,1")
    p.add_argument("--expect", type=float)
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("compare", help="comparison principle on constructed pairs")
    _common(p)
    p.add_argument("--pairs", type=int, default=20)

    p = sub.add_parser("oscillation", help="oscillation-estimate ratios")
    _common(p, 12)
    p.add_argument("--field", action="append", help="repeatable; default sq")
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=0.5)

    p = sub.add_parser("taylor", help="L1 decay of the weighted Taylor remainder")
    _common(p, 16)
    p.add_argument("--field", default="gauge4")
    p.add_argument("--p0", type=float, nargs="+")
    p.add_argument("--radii", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025])

    p = sub.add_parser("appendix", help="monotonicity of sigma2 on random matrices")
    _common(p)
    p.add_argument("--samples", type=int, default=1000)

    p = sub.add_parser("weak-convergence", help="convergence of int f dmu(u_eps)")
    _common(p)
    p.add_argument("--example", choices=("kinked", "smooth"), default="kinked")
    p.add_argument("--eps0", type=float)
    p.add_argument("--steps", type=int, default=5)
    return ap


def _scenario_from_args(args) -> dict:
    kind = "convexity" if args.command == "check-convexity" else args.command
    sc = {"kind": kind}
    skip = {"command", "n", "seed", "out", "format"}
    for k, v in vars(args).items():
        if k in skip or v is None:
            continue
        if k == "field" and kind == "oscillation":
            sc["fields"] = v
        elif k == "R":
            sc["R"] = v
        else:
            sc[k] = v
    return {"campaign": {"n": args.n, "seed": args.seed, "name": args.command}, "scenario": [sc]}


def _emit(report: dict, args) -> None:
    if args.format == "csv":
        rows = [row for r in report["results"] for row in r["table"]]
        text = dumps_csv(rows)
    else:
        text = dumps_json(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("hs2: error: no command given", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg.setdefault("campaign", {})["seed"] = args.seed
            if args.resolution is not None:
                for sc in cfg.get("scenario", []) if isinstance(cfg.get("scenario"), list) else []:
                    sc["resolution"] = args.resolution
            report = run_campaign(cfg)
            if args.out:
                write_report(report, args.out)
            elif args.format == "csv":
                sys.stdout.write(dumps_csv([row for r in report["results"] for row in r["table"]]))
            else:
                sys.stdout.write(dumps_json(report))
        else:
            report = run_campaign(_scenario_from_args(args))
            _emit(report, args)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"hs2: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    status = EXIT_OK if report["pass"] else EXIT_FAIL
    print(json.dumps({"pass": report["pass"], "scenarios": len(report["results"])}), file=sys.stderr)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
