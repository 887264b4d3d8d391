"""Run every scenario in ``scenarios/`` and print a one-line metric summary each.

Usage: python3 scripts/run_all.py [--out runs] [--only NAME ...]
"""

import argparse
import time
from pathlib import Path

from ftcsim import simkit

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default=str(ROOT / "runs"))
    p.add_argument("--only", nargs="*", default=None, help="scenario ids to run")
    args = p.parse_args()
    for path in sorted((ROOT / "scenarios").glob("*.cfg")):
        if args.only and path.stem not in args.only:
            continue
        cfg = simkit.load_config(path).with_overrides(output_dir=args.out)
        t0 = time.perf_counter()
        log, m = simkit.run_scenario(cfg)
        simkit.write_outputs(cfg, log, m)
        inn = " ".join(f"{k}={v:.3f}" for k, v in m.innovation_in_bounds.items())
        print(f"{cfg.scenario_id:28s} {m.completion:10s} latency={m.detection_latency} "
              f"violations={m.constraint_violations} {inn} ({time.perf_counter() - t0:.0f} s)",
              flush=True)


if __name__ == "__main__":
    main()
