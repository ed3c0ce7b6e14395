"""Command-line entry point: ``sinekan {bench1d,bench2d,construct,flops}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import constructive
from .benchfns import FUNCS_1D, FUNCS_2D, get_function
from .experiments import (
    DEFAULT_BUDGETS,
    DEFAULT_GRIDS_1D,
    DEFAULT_MODELS_1D,
    FAMILIES_2D,
    default_ladder_specs,
    read_sweep_csv,
    run_1d_sweep,
    run_2d_sweep,
    sweep_to_csv,
)
from .metrics import DEFAULT_COSTS, TORCHLIKE_COSTS, measure_costs
from .plotting import plot_bench1d, plot_bench2d
from .solver import SolverConfig

log = logging.getLogger("sinekan")

EXIT_OK, EXIT_FAILED_CELLS, EXIT_USAGE = 0, 1, 2


def _list_arg(values, cast=str):
    """Flatten ``--x a b`` and ``--x a,b`` forms.  Model specs contain commas, so they are never split."""
    out = []
    for v in values:
        out.extend([v] if cast is None else [cast(p) for p in v.split(",") if p])
    return out


def _add_shared(p: argparse.ArgumentParser):
    p.add_argument("--out", default="results", help="output directory (created if absent)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("-v", "--verbose", action="store_true")


def _add_solver(p: argparse.ArgumentParser):
    p.add_argument("--starts", type=int, default=None, help="multi-start count (default 5, Fourier 1)")
    p.add_argument("--max-iter-per-param", type=int, default=100)
    p.add_argument("--ftol", type=float, default=1e-10)
    p.add_argument("--xtol", type=float, default=1e-10)
    p.add_argument("--gtol", type=float, default=1e-10)
    p.add_argument("--subproblem", choices=("exact", "dogleg"), default="exact")
    p.add_argument("--cost-model", choices=("paper", "torchlike", "measured"), default="paper")
    p.add_argument("--plots", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--keep-going", action="store_true", help="exit 0 even if some cells fail")
    p.add_argument("--holdout", action="store_true", help="also report error on a 2x denser grid")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sinekan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    b1 = sub.add_parser("bench1d", help="error vs. grid size on the 1D targets")
    _add_shared(b1)
    _add_solver(b1)
    b1.add_argument("--funcs", nargs="+", default=list(FUNCS_1D))
    b1.add_argument("--grids", nargs="+", default=[str(n) for n in DEFAULT_GRIDS_1D])
    b1.add_argument("--models", nargs="+", default=list(DEFAULT_MODELS_1D))
    b1.add_argument("--k-terms", type=int, default=5)

    b2 = sub.add_parser("bench2d", help="error vs. parameters and FLOPs on the 2D targets")
    _add_shared(b2)
    _add_solver(b2)
    b2.add_argument("--funcs", nargs="+", default=list(FUNCS_2D))
    b2.add_argument("--models", nargs="+", default=None, help="explicit model specs (overrides the ladder)")
    b2.add_argument("--budgets", nargs="+", default=[str(b) for b in DEFAULT_BUDGETS])
    b2.add_argument("--families", nargs="+", default=list(FAMILIES_2D))
    b2.add_argument("--n", type=int, default=100, help="grid points per axis")

    c = sub.add_parser("construct", help="explicit sine-sum construction with error certificate")
    _add_shared(c)
    c.add_argument("--func", default="f1", help=f"one of {', '.join(FUNCS_1D + tuple(BUILTIN_TARGETS))}")
    c.add_argument("--N", type=int, default=8)
    c.add_argument("--alpha", type=float, default=1.0)
    c.add_argument("--frequency-rule", choices=sorted(constructive.FREQUENCY_RULES), default="uniform")

    fl = sub.add_parser("flops", help="print the relative FLOP cost model")
    fl.add_argument("--cost-model", choices=("paper", "torchlike", "measured"), default="paper")
    fl.add_argument("--measure", action="store_true", help="same as --cost-model=measured")
    fl.add_argument("--iterations", type=int, default=20_000)
    fl.add_argument("--batch-size", type=int, default=1024)
    fl.add_argument("-v", "--verbose", action="store_true")
    return parser


BUILTIN_TARGETS = {
    "const1": lambda x: np.ones_like(np.asarray(x, dtype=float)),
    "zero": lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    "identity": lambda x: np.asarray(x, dtype=float),
    "sin3x": lambda x: np.sin(3.0 * np.asarray(x, dtype=float)),
}


def _unit_interval_target(name: str):
    """Target on [0, 1]; benchmarks with 1/x are extended by their limit 0 at x = 0."""
    if name in BUILTIN_TARGETS:
        return BUILTIN_TARGETS[name]
    func = get_function(name)

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = func(x[pos])
        if name == "f2":
            out[~pos] = func(x[~pos])
        return out[()] if out.ndim == 0 else out

    return f


def _costs(name: str):
    if name == "torchlike":
        return TORCHLIKE_COSTS
    if name == "measured":
        return measure_costs()
    return DEFAULT_COSTS


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        max_iter_per_param=args.max_iter_per_param,
        ftol=args.ftol,
        xtol=args.xtol,
        gtol=args.gtol,
        seed=args.seed,
        subproblem=args.subproblem,
    )


def _finish_sweep(result, out: Path, name: str, plot, keep_going: bool) -> int:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    path.write_text(sweep_to_csv(result))
    print(f"wrote {path} ({len(result.rows)} rows)")
    failed = result.failed
    if failed and len(failed) == len(result.rows):
        print("every cell failed", file=sys.stderr)
        return EXIT_FAILED_CELLS
    if plot:
        _, rows = read_sweep_csv(path)
        for p in plot([r for r in rows if r["term_reason"] != "Failed"], out):
            print(f"wrote {p}")
    if failed and not keep_going:
        print(f"{len(failed)} cell(s) failed; rerun with --keep-going to accept", file=sys.stderr)
        return EXIT_FAILED_CELLS
    return EXIT_OK


def cmd_bench1d(args) -> int:
    result = run_1d_sweep(
        _list_arg(args.funcs),
        _list_arg(args.grids, int),
        _list_arg(args.models, None),
        _solver_config(args),
        starts=args.starts,
        k_terms=args.k_terms,
        costs=_costs(args.cost_model),
        holdout=args.holdout,
        workers=args.workers,
    )
    return _finish_sweep(result, Path(args.out), "bench1d", args.plots and plot_bench1d, args.keep_going)


def cmd_bench2d(args) -> int:
    if args.models:
        specs = _list_arg(args.models, None)
    else:
        specs = default_ladder_specs(_list_arg(args.budgets, int), _list_arg(args.families))
    result = run_2d_sweep(
        _list_arg(args.funcs),
        specs,
        _solver_config(args),
        n_per_axis=args.n,
        starts=args.starts,
        costs=_costs(args.cost_model),
        holdout=args.holdout,
        workers=args.workers,
    )
    return _finish_sweep(result, Path(args.out), "bench2d", args.plots and plot_bench2d, args.keep_going)


def cmd_construct(args) -> int:
    f = _unit_interval_target(args.func)
    try:
        c = constructive.construct_sine_approx(
            f, args.N, args.alpha, args.frequency_rule, rng=np.random.default_rng(args.seed)
        )
    except constructive.IllConditionedError as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return EXIT_FAILED_CELLS
    record = {"func": args.func, "seed": args.seed, "frequency_rule": args.frequency_rule, **c.to_dict()}
    print(f"target            {args.func}")
    print(f"degree N          {c.N}")
    print(f"phase base alpha  {c.alpha:g}")
    print(f"condition (equil) {c.condition:.3e}")
    print(f"sum |A_k|         {c.amplitude_l1:.3e}")
    print(f"bernstein error   {c.bernstein_error:.3e}")
    print(f"coeff mismatch    {c.coeff_error:.3e}")
    print(f"taylor tail       {c.taylor_tail:.3e}")
    print(f"rounding          {c.rounding:.3e}")
    print(f"certificate       {c.certificate:.3e}")
    print(f"grid sup error    {c.sup_error:.3e} at x = {c.sup_location:.4f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"construct_{args.func}_N{args.N}.json"
    text = json.dumps(record, indent=2, sort_keys=True)
    path.write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_flops(args) -> int:
    name = "measured" if args.measure else args.cost_model
    if name == "measured":
        try:
            costs = measure_costs(args.iterations, args.batch_size)
        except RuntimeError as exc:
            print(f"measurement failed: {exc}", file=sys.stderr)
            return EXIT_FAILED_CELLS
        record = {**costs.weights(), "source": costs.source, "timings_s": costs.timings,
                  "iterations": args.iterations, "batch_size": args.batch_size}
        print(json.dumps(record))
    else:
        print((TORCHLIKE_COSTS if name == "torchlike" else DEFAULT_COSTS).to_json())
    return EXIT_OK


COMMANDS = {"bench1d": cmd_bench1d, "bench2d": cmd_bench2d, "construct": cmd_construct, "flops": cmd_flops}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "construct" and not 1 <= args.N <= constructive.MAX_DEGREE:
        parser.error(f"--N must be between 1 and {constructive.MAX_DEGREE}")
    if args.command == "construct" and args.func not in FUNCS_1D and args.func not in BUILTIN_TARGETS:
        parser.error(f"unknown --func {args.func!r}")
    for key in ("starts", "workers"):
        if getattr(args, key, 1) is not None and getattr(args, key, 1) < 1:
            parser.error(f"--{key} must be >= 1")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
