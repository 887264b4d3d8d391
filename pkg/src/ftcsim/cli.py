"""Command-line interface: ``ftcsim run|sweep|compare|validate``.

Exit codes: 0 success, 1 runtime termination or failed check (``--check``),
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import simkit

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_USAGE = 2


def _run_one(path: str, seed, out, check: bool) -> tuple[str, int, str]:
    cfg = simkit.load_config(path).with_overrides(seed, out)
    log, metrics = simkit.run_scenario(cfg)
    csv_path = simkit.write_outputs(cfg, log, metrics)
    ok = True
    reasons = []
    if cfg.expect_termination == (metrics.completion == simkit.COMPLETED):
        ok = False
        reasons.append(f"completion={metrics.completion}")
    if metrics.constraint_violations:
        ok = False
        reasons.append(f"{metrics.constraint_violations} accepted NMPC solutions violate tolerances")
    code = EXIT_CHECK if (check and not ok) else EXIT_OK
    summary = f"{cfg.scenario_id}: {metrics.completion}, log {csv_path}"
    if reasons:
        summary += " [" + "; ".join(reasons) + "]"
    return summary, code, json.dumps(metrics.to_dict(), sort_keys=True)


def cmd_run(args) -> int:
    summary, code, metrics = _run_one(args.config, args.seed, args.out, args.check)
    print(summary)
    print(metrics)
    return code


def cmd_sweep(args) -> int:
    configs = sorted(str(p) for p in Path(args.config_dir).glob("*.cfg"))
    if not configs:
        print(f"no .cfg files in {args.config_dir}", file=sys.stderr)
        return EXIT_USAGE
    for c in configs:
        simkit.load_config(c)  # fail fast on schema errors
    jobs = max(1, args.jobs)
    argv = [(c, args.seed, None if args.out is None else str(Path(args.out) / Path(c).stem),
             args.check) for c in configs]
    if jobs == 1:
        results = [_run_one(*a) for a in argv]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, *zip(*argv)))
    for summary, _, _ in results:
        print(summary)
    return max(code for _, code, _ in results)


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_flatten(v, f"{prefix}{k}."))
        elif isinstance(v, (int, float)) and not isinstance(v, bool):
            out[f"{prefix}{k}"] = float(v)
    return out


def cmd_compare(args) -> int:
    a = simkit.TimeSeriesLog.read(args.log_a)
    b = simkit.TimeSeriesLog.read(args.log_b)
    ma = _flatten(simkit.compute_metrics(a).to_dict())
    mb = _flatten(simkit.compute_metrics(b).to_dict())
    print(f"{'metric':40s} {'A':>14s} {'B':>14s} {'B - A':>14s}")
    for key in sorted(set(ma) & set(mb)):
        print(f"{key:40s} {ma[key]:14.6g} {mb[key]:14.6g} {mb[key] - ma[key]:14.6g}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = simkit.load_config(args.config)
    print(f"{args.config}: ok ({cfg.scenario_id}, {cfg.plant}, {cfg.controller})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ftcsim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("config")
    s = sub.add_parser("sweep", help="run every .cfg in a directory")
    s.add_argument("config_dir")
    s.add_argument("--jobs", type=int, default=1)
    for q in (r, s):
        q.add_argument("--seed", type=int, default=None)
        q.add_argument("--out", default=None)
        q.add_argument("--check", action="store_true",
                       help="exit 1 on unexpected termination or solver-tolerance violations")
    c = sub.add_parser("compare", help="metric deltas between two logs (B - A)")
    c.add_argument("log_a")
    c.add_argument("log_b")
    v = sub.add_parser("validate", help="schema check only")
    v.add_argument("config")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                         format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare,
                "validate": cmd_validate}
    try:
        return handlers[args.command](args)
    except simkit.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, StopIteration) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
