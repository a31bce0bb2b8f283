#!/usr/bin/env python3
"""Horizon-scaling study: iterations-to-tolerance and wall time as the
planning horizon grows, with the covariance radius tied to the horizon.
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
    "disturbance": {"rho": 0.0, "seed": 1234},
    "convergence": {
        "lo": 10,
        "hi": 200,
        "step": 10,
        "trials": 1,
        "budget_s": 600.0,
        "p": 1,
        "master_seed": 1234,
    },
    "solver": {"tol_relgap": 1e-3, "max_iters": 5000},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/convergence")
    ap.add_argument("--budget-s", type=float, default=None)
    ap.add_argument("--hi", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()

    cfg = dict(CONFIG)
    conv = dict(cfg["convergence"])
    if args.budget_s is not None:
        conv["budget_s"] = args.budget_s
    if args.hi is not None:
        conv["hi"] = args.hi
    cfg["convergence"] = conv
    os.makedirs(args.out, exist_ok=True)
    cfg_path = os.path.join(args.out, "config.yaml")
    with open(cfg_path, "w") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=False)

    argv = ["convergence", "--config", cfg_path, "--out", args.out]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
