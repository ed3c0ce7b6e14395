"""Error vs. parameter count and vs. relative FLOPs on the two 2D targets.

Fits SineKAN-2, MLP-sine, MLP-ReLU and a 2D Fourier series at parameter
budgets {50, 100, 200, 400, 800} on the 100 x 100 mesh.  The full protocol
(100 iterations per parameter, 5 starts) takes many CPU hours; ``--quick``
uses 5 iterations per parameter, 2 starts and budgets up to 200.

    python scripts/reproduce_fig2.py --out results/fig2 --workers 8
    python scripts/reproduce_fig2.py --quick
"""
import argparse
import sys

from sinekan.cli import main


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results/fig2")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--quick", action="store_true")
    args, extra = parser.parse_known_args(argv)
    cli = ["bench2d", "--out", args.out, "--seed", str(args.seed), "--workers", str(args.workers)]
    if args.quick:
        cli += ["--budgets", "50", "100", "200", "--max-iter-per-param", "5", "--starts", "2"]
    return main(cli + extra)


if __name__ == "__main__":
    sys.exit(run())
