"""Command line front end: one figure per invocation.

Usage:
    drrlq-plots KIND CSV OUT [--controllers a,b,...] [--rho X]

Exit codes follow the primary CLI: 0 success, 2 bad arguments or
unusable input.
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drrlq-plots",
        description="Render a figure from a drrlq CSV artifact.")
    parser.add_argument("kind", choices=FIGURE_KINDS,
                        help="figure kind")
    parser.add_argument("csv", help="input CSV artifact")
    parser.add_argument("out", help="output image path (.png or .svg)")
    parser.add_argument("--controllers", default=None,
                        help="comma-separated controller names to keep")
    parser.add_argument("--rho", type=float, default=None,
                        help="correlation value to select "
                             "(cost_vs_radius only)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    controllers = (tuple(s.strip() for s in args.controllers.split(","))
                   if args.controllers else None)
    try:
        spec = FigureSpec(csv_path=args.csv, kind=args.kind,
                          out_path=args.out, controllers=controllers,
                          rho=args.rho)
        image = render(spec)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {image} and {spec.sidecar_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
