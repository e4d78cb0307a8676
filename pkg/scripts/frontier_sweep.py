#!/usr/bin/env python3
"""Sweep the posted-price frontier for a batch of distributions.

Writes one CSV (and optionally one SVG) per distribution into --outdir and
prints a summary line per distribution with the maximin price and ratio.

Example:
    python3 scripts/frontier_sweep.py --outdir out/frontier \
        uniform:0,1 exponential:1 left-triangle:0.001 irregular-example:0.01
"""
import argparse
import pathlib
import sys

from riskauctions.cli import main as cli_main
from riskauctions import default_family, frontier_search, make_distribution

DEFAULT_SPECS = ["uniform:0,1", "exponential:1", "left-triangle:0.01",
                 "left-triangle:0.001", "irregular-example:0.01"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("specs", nargs="*", default=DEFAULT_SPECS,
                    help="distribution specs (default: a representative set)")
    ap.add_argument("--outdir", default="out/frontier")
    ap.add_argument("--grid", type=int, default=1000)
    ap.add_argument("--svg", action="store_true", help="also render SVG plots")
    args = ap.parse_args(argv)

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fam = default_family()
    for spec in args.specs:
        d = make_distribution(spec)
        res = frontier_search(d, fam, grid=args.grid)
        stem = spec.replace(":", "_").replace(",", "-").replace(";", "_")
        cli_main(["frontier", spec, "--grid", str(args.grid),
                  "--out", str(outdir / f"{stem}.csv")])
        if args.svg:
            cli_main(["frontier", spec, "--grid", str(args.grid),
                      "--format", "svg", "--out", str(outdir / f"{stem}.svg")])
        print(f"{spec}: maximin ratio {res.best_min_ratio:.6f} "
              f"at price {res.best_price:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
