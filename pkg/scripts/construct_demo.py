"""Run the explicit sine-sum construction over a range of degrees and tabulate the certificates.

    python scripts/construct_demo.py --func f5 --degrees 2 4 6 8 10 12
"""
import argparse
import sys

import numpy as np

from sinekan.cli import BUILTIN_TARGETS, _unit_interval_target
from sinekan.constructive import IllConditionedError, construct_sine_approx


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--func", default="sin3x", help=f"f1..f5 or one of {', '.join(BUILTIN_TARGETS)}")
    parser.add_argument("--degrees", type=int, nargs="+", default=[2, 4, 6, 8, 10, 12])
    parser.add_argument("--alpha", type=float, default=1.0)
    args = parser.parse_args(argv)
    f = _unit_interval_target(args.func)
    print(f"{'N':>3} {'condition':>10} {'sum|A|':>10} {'bernstein':>10} {'certificate':>12} {'grid sup':>10}")
    for N in args.degrees:
        try:
            c = construct_sine_approx(f, N, args.alpha, rng=np.random.default_rng(0))
        except IllConditionedError as exc:
            print(f"{N:>3} ill-conditioned ({exc.condition:.1e})")
            continue
        print(f"{N:>3} {c.condition:10.2e} {c.amplitude_l1:10.2e} {c.bernstein_error:10.2e} "
              f"{c.certificate:12.2e} {c.sup_error:10.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
