"""Error vs. grid size on the five 1D targets (SineKAN-1D against a truncated Fourier series).

Runs the full default protocol: grids {25, 50, 100, 200, 400}, G = K = 8,
100 solver iterations per parameter, best of 5 starts for SineKAN.

    python scripts/reproduce_fig1.py --out results/fig1 [--workers 4]
"""
import argparse
import sys

from sinekan.cli import main


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results/fig1")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--workers", type=int, default=1)
    args, extra = parser.parse_known_args(argv)
    return main(["bench1d", "--out", args.out, "--seed", str(args.seed), "--workers", str(args.workers), *extra])


if __name__ == "__main__":
    sys.exit(run())
