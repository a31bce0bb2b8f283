#!/usr/bin/env python3
"""Radius-sweep benchmark on the double integrator testbed.

Writes the default experiment config next to the outputs and runs the
benchmark subcommand, so the whole study is reproducible from the
emitted files alone.
"""

import argparse
import os
import sys

import yaml

from drrlq.cli import main as cli_main

CONFIG = {
    "version": 1,
    "system": {
        "A": [[1.0, 1.0], [0.0, 0.05]],
        "B": [[0.0], [1.0]],
        "horizon": 10,
        "stage_q": 1.0,
        "stage_r": 10.0,
    },
    "benchmark": {
        "rhos": [0.0, 0.3, 0.6, 0.9],
        "trials": 20,
        "p_list": [1, 2, "inf"],
        "r_grid": {"lo": 1e-4, "hi": 1e4, "count": 9},
        "master_seed": 1234,
    },
    "solver": {"tol_relgap": 1e-3, "max_iters": 5000},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/benchmark")
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    cfg = dict(CONFIG)
    if args.trials is not None:
        cfg["benchmark"] = dict(cfg["benchmark"], trials=args.trials)
    os.makedirs(args.out, exist_ok=True)
    cfg_path = os.path.join(args.out, "config.yaml")
    with open(cfg_path, "w") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=False)

    argv = ["benchmark", "--config", cfg_path, "--out", args.out]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    if args.threads is not None:
        argv += ["--threads", str(args.threads)]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
