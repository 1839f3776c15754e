"""Run every example configuration through the CLI and write the results to one directory.

Usage::

    python3 scripts/run_examples.py [OUTDIR] [--quick]

``--quick`` skips the logistic sweep, which takes several minutes.
"""
import argparse
import sys
from pathlib import Path

from lapcert import cli

HERE = Path(__file__).resolve().parent / "configs"
JOBS = [
    ("sweep", "poisson_sweep.toml", "poisson_sweep.csv", False),
    ("sweep", "weibull_sweep.toml", "weibull_sweep.csv", False),
    ("audit", "poisson_audit.toml", "poisson_audit.json", False),
    ("oracle-compare", "poisson_audit.toml", "poisson_compare.json", False),
    ("min-n", "logistic_min_n.toml", "logistic_min_n.csv", False),
    ("sweep", "logistic_sweep.toml", "logistic_sweep.csv", True),
]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("outdir", nargs="?", default="results", type=Path)
    p.add_argument("--quick", action="store_true")
    args = p.parse_args(argv)
    args.outdir.mkdir(parents=True, exist_ok=True)
    worst = 0
    for command, cfg, out, slow in JOBS:
        if slow and args.quick:
            continue
        code = cli.main([command, "--config", str(HERE / cfg), "--out", str(args.outdir / out), "-v"])
        print(f"{command:15s} {cfg:22s} -> {out:24s} exit {code}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
