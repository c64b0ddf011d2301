#!/usr/bin/env python3
"""Run a sampler comparison and write records, a summary CSV and gnuplot data.

    python3 scripts/run_experiment.py scripts/desk_scale.json --out-dir results
"""
import argparse
import sys

from tmcts.cli import main


def parse():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("config", help="ExperimentConfig JSON")
    p.add_argument("--out-dir", default="results")
    p.add_argument("--workers", type=int)
    p.add_argument("--trials", type=int)
    return p.parse_args()


if __name__ == "__main__":
    a = parse()
    argv = ["experiment", "--config", a.config, "--out-dir", a.out_dir]
    if a.workers:
        argv += ["--workers", str(a.workers)]
    if a.trials:
        argv += ["--trials", str(a.trials)]
    sys.exit(main(argv))
