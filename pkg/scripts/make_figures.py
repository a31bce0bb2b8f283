#!/usr/bin/env python3
"""Regenerate the standard figures from benchmark and convergence
artifacts produced by run_benchmark.py / run_convergence.py.

Needs the drrlq-plots companion package (plots/ in this repository).
"""

import argparse
import os
import sys

try:
    from drrlq_plots import FigureSpec, render
except ImportError:
    print("error: the drrlq-plots package is not installed; run\n"
          "    pip install -e plots/ --no-build-isolation",
          file=sys.stderr)
    sys.exit(2)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--benchmark", default="results/benchmark",
                    help="output directory of run_benchmark.py")
    ap.add_argument("--convergence", default="results/convergence",
                    help="output directory of run_convergence.py")
    ap.add_argument("--out", default="results/figures")
    ap.add_argument("--rho", type=float, default=0.0,
                    help="correlation slice for the radius sweep")
    ap.add_argument("--format", default="png", choices=("png", "svg"))
    args = ap.parse_args()

    bench_csv = os.path.join(args.benchmark, "benchmark.csv")
    trace_csv = os.path.join(args.convergence, "convergence_trace.csv")
    times_csv = os.path.join(args.convergence, "convergence_times.csv")
    os.makedirs(args.out, exist_ok=True)

    specs = []
    if os.path.exists(bench_csv):
        specs += [
            FigureSpec(bench_csv, "cost_vs_radius",
                       os.path.join(args.out,
                                    f"cost_vs_radius.{args.format}"),
                       rho=args.rho),
            FigureSpec(bench_csv, "cost_vs_rho",
                       os.path.join(args.out,
                                    f"cost_vs_rho.{args.format}")),
            FigureSpec(bench_csv, "regret_vs_rho",
                       os.path.join(args.out,
                                    f"regret_vs_rho.{args.format}")),
        ]
    if os.path.exists(trace_csv):
        specs.append(FigureSpec(trace_csv, "relgap_trace",
                                os.path.join(
                                    args.out,
                                    f"relgap_trace.{args.format}")))
    if os.path.exists(times_csv):
        specs.append(FigureSpec(times_csv, "time_vs_T",
                                os.path.join(
                                    args.out,
                                    f"time_vs_T.{args.format}")))
    if not specs:
        print("error: no input CSVs found; run the experiment scripts "
              "first", file=sys.stderr)
        return 2

    for spec in specs:
        print(f"wrote {render(spec)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
