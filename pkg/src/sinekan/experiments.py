"""Sampling grids, shared fitting protocol, and the 1D / 2D sweeps.

Every sweep cell builds its dataset, fits one model by least squares with
``multi_start_fit``, and reports the relative L2 error on the grid used for
fitting.  Cells run serially or in a process pool; rows always come back in
config order.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .benchfns import DEFAULT_K_TERMS, FUNCS_1D, FUNCS_2D, BenchFunction1D, BenchFunction2D, get_function
from .metrics import DEFAULT_COSTS, CostModel, model_flops, relative_l2
from .models import FourierModel, Model, SineKan1D, SineKan2Layer, parse_model_spec
from .solver import FitReport, LeastSquaresProblem, SolverConfig, SolverError, multi_start_fit

log = logging.getLogger(__name__)

GRID_LO, GRID_HI = 0.01, 1.0
DEFAULT_GRIDS_1D = (25, 50, 100, 200, 400)
DEFAULT_MODELS_1D = ("sinekan1d:G=8", "fourier:K=8")
DEFAULT_BUDGETS = (50, 100, 200, 400, 800)
FAMILIES_2D = ("sinekan2", "mlp:relu", "mlp:sine", "fourier2d")
DEFAULT_STARTS = 5

CSV_FIELDS = (
    "func", "model_spec", "grid_n", "param_count", "flops", "rel_l2",
    "final_cost", "iters", "term_reason", "seed", "starts",
)


def make_grid_1d(n_points: int) -> np.ndarray:
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    return np.linspace(GRID_LO, GRID_HI, n_points)


def make_grid_2d(n_per_axis: int) -> np.ndarray:
    """Cartesian product of two 1D grids, shape ``(n^2, 2)``, first axis slowest."""
    g = make_grid_1d(n_per_axis)
    X, Y = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


@dataclass
class SampledDataset:
    inputs: np.ndarray
    targets: np.ndarray
    func_id: str
    grid_n: int
    k_terms: int = DEFAULT_K_TERMS

    def __post_init__(self):
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ValueError("inputs and targets differ in length")
        if not np.all(np.isfinite(self.targets)):
            raise ValueError(f"non-finite targets for {self.func_id}")
        if np.any(self.inputs <= 0) or np.any(self.inputs > 1):
            raise ValueError("inputs must lie in (0, 1]")

    @property
    def n_in(self) -> int:
        return 1 if self.inputs.ndim == 1 else self.inputs.shape[1]


def make_dataset(func_id: str, grid_n: int, k_terms: int = DEFAULT_K_TERMS) -> SampledDataset:
    func = get_function(func_id, k_terms)
    if isinstance(func, BenchFunction1D):
        xs = make_grid_1d(grid_n)
        return SampledDataset(xs, func(xs), func_id, grid_n, k_terms)
    xs = make_grid_2d(grid_n)
    return SampledDataset(xs, func(xs[:, 0], xs[:, 1]), func_id, grid_n, k_terms)


def least_squares_problem(model: Model, dataset: SampledDataset, seed: int) -> LeastSquaresProblem:
    xs, y = dataset.inputs, dataset.targets
    return LeastSquaresProblem(
        residual=lambda p: model.forward(xs, p).ravel() - y,
        jacobian=lambda p: model.jacobian(xs, p),
        p0=model.init_params(seed),
        init=model.init_params,
    )


def _fixed_phases(model: Model) -> list[np.ndarray]:
    return [np.array(getattr(model, name)) for name in ("phases", "phases1", "phases2") if hasattr(model, name)]


def fit_model(model: Model, dataset: SampledDataset, config: SolverConfig, starts: int = 1) -> tuple[FitReport, float]:
    """Fit ``model`` to ``dataset`` in place; returns the report and relative L2 on the fit grid."""
    before = _fixed_phases(model)
    report = multi_start_fit(least_squares_problem(model, dataset, config.seed), config, starts)
    model.set_params(report.params)
    for old, new in zip(before, _fixed_phases(model)):
        if not np.array_equal(old, new):
            raise AssertionError("fixed phases changed during fitting")
    return report, relative_l2(dataset.targets, model.forward(dataset.inputs).ravel())


def cell_seed(root: int, *parts) -> int:
    """Per-cell seed: first 4 bytes of sha256 over the root seed and the cell config."""
    key = json.dumps([root, *parts], separators=(",", ":")).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:4], "big")


def default_starts(model_spec: str) -> int:
    return 1 if model_spec.startswith("fourier") else DEFAULT_STARTS


@dataclass
class SweepRow:
    func: str
    model_spec: str
    grid_n: int
    param_count: int
    flops: float
    rel_l2: float
    final_cost: float
    iters: int
    term_reason: str
    seed: int
    starts: int
    holdout_rel_l2: Optional[float] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def csv_values(self, holdout: bool = False) -> list[str]:
        values = [dataclasses.asdict(self)[name] for name in CSV_FIELDS]
        if holdout:
            values.append(self.holdout_rel_l2)
        return [_fmt(v) for v in values]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


@dataclass
class SweepResult:
    rows: list[SweepRow]
    config: SolverConfig
    costs: CostModel = DEFAULT_COSTS
    meta: dict = field(default_factory=dict)

    @property
    def failed(self) -> list[SweepRow]:
        return [r for r in self.rows if r.failed]


@dataclass(frozen=True)
class _Cell:
    func: str
    model_spec: str
    grid_n: int
    config: SolverConfig
    starts: int
    k_terms: int
    costs: CostModel
    holdout: bool


def _run_cell(cell: _Cell) -> SweepRow:
    dataset = make_dataset(cell.func, cell.grid_n, cell.k_terms)
    model = parse_model_spec(cell.model_spec, dataset.n_in)
    seed = cell_seed(cell.config.seed, cell.func, cell.model_spec, cell.grid_n)
    config = dataclasses.replace(cell.config, seed=seed)
    base = dict(
        func=cell.func,
        model_spec=cell.model_spec,
        grid_n=cell.grid_n,
        param_count=model.param_count,
        flops=float(model_flops(model, cell.costs)),
        seed=seed,
        starts=cell.starts,
    )
    try:
        report, err = fit_model(model, dataset, config, cell.starts)
    except (SolverError, ValueError, FloatingPointError) as exc:
        log.warning("cell %s / %s / %d failed: %s", cell.func, cell.model_spec, cell.grid_n, exc)
        return SweepRow(**base, rel_l2=math.nan, final_cost=math.nan, iters=0, term_reason="Failed", error=str(exc))
    holdout_err = None
    if cell.holdout:
        dense = make_dataset(cell.func, 2 * cell.grid_n, cell.k_terms)
        holdout_err = relative_l2(dense.targets, model.forward(dense.inputs).ravel())
    log.info("%s %s n=%d rel_l2=%.3e (%s, %d it)", cell.func, cell.model_spec, cell.grid_n, err,
             report.termination.value, report.iterations)
    return SweepRow(
        **base,
        rel_l2=err,
        final_cost=report.cost,
        iters=report.iterations,
        term_reason=report.termination.value,
        holdout_rel_l2=holdout_err,
    )


def _execute(cells: Sequence[_Cell], workers: int) -> list[SweepRow]:
    if workers <= 1:
        return [_run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell, cells))


def run_1d_sweep(
    func_ids: Iterable[str] = FUNCS_1D,
    grid_sizes: Iterable[int] = DEFAULT_GRIDS_1D,
    model_specs: Iterable[str] = DEFAULT_MODELS_1D,
    config: SolverConfig = SolverConfig(),
    *,
    starts: Optional[int] = None,
    k_terms: int = DEFAULT_K_TERMS,
    costs: CostModel = DEFAULT_COSTS,
    holdout: bool = False,
    workers: int = 1,
) -> SweepResult:
    """Error versus grid size for each (function, grid, model) cell."""
    func_ids, grid_sizes, model_specs = list(func_ids), list(grid_sizes), list(model_specs)
    if not (func_ids and grid_sizes and model_specs):
        raise ValueError("function, grid and model lists must be nonempty")
    for f in func_ids:
        if f not in FUNCS_1D:
            raise ValueError(f"{f!r} is not a 1D benchmark")
    cells = [
        _Cell(f, spec, n, config, starts or default_starts(spec), k_terms, costs, holdout)
        for f in func_ids
        for n in grid_sizes
        for spec in model_specs
    ]
    return SweepResult(_execute(cells, workers), config, costs, {"kind": "bench1d", "k_terms": k_terms})


def run_2d_sweep(
    func_ids: Iterable[str] = FUNCS_2D,
    model_specs: Optional[Iterable[str]] = None,
    config: SolverConfig = SolverConfig(),
    *,
    n_per_axis: int = 100,
    starts: Optional[int] = None,
    costs: CostModel = DEFAULT_COSTS,
    holdout: bool = False,
    workers: int = 1,
) -> SweepResult:
    """Error versus parameter count / FLOPs on the ``n_per_axis``-squared mesh."""
    func_ids = list(func_ids)
    model_specs = list(model_specs) if model_specs is not None else default_ladder_specs()
    if not (func_ids and model_specs):
        raise ValueError("function and model lists must be nonempty")
    for f in func_ids:
        if f not in FUNCS_2D:
            raise ValueError(f"{f!r} is not a 2D benchmark")
    cells = [
        _Cell(f, spec, n_per_axis, config, starts or default_starts(spec), DEFAULT_K_TERMS, costs, holdout)
        for f in func_ids
        for spec in model_specs
    ]
    return SweepResult(_execute(cells, workers), config, costs, {"kind": "bench2d", "n_per_axis": n_per_axis})


# -- parameter budget ladders -------------------------------------------------

def _closest(candidates: Iterable[tuple[int, str]], budget: int) -> tuple[int, str]:
    return min(candidates, key=lambda c: (abs(c[0] - budget), c[0]))


def ladder_spec(family: str, budget: int, n_in: int = 2, grid: int = 4) -> str:
    """Model spec of ``family`` whose parameter count is closest to ``budget``.

    MLP and SineKAN2 vary the hidden width (SineKAN2 at fixed grid sizes);
    Fourier-2D varies the per-axis harmonics, allowing them to differ by one.
    """
    if family == "sinekan2":
        cands = ((SineKan2Layer(n_in, grid, h, grid).param_count, f"sinekan2:G1={grid},H={h},G2={grid}")
                 for h in range(1, 4 * budget))
    elif family.startswith("mlp"):
        act = family.partition(":")[2] or "relu"
        cands = ((h * n_in + 2 * h + 1, f"mlp:H={h},act={act}") for h in range(1, budget + 1))
    elif family == "fourier2d":
        cands = []
        for kx in range(0, int(math.isqrt(budget)) + 2):
            for ky in (kx, kx + 1):
                spec = f"fourier2d:K={kx}" if kx == ky else f"fourier2d:Kx={kx},Ky={ky}"
                cands.append((FourierModel((kx, ky), dim=2).param_count, spec))
    elif family == "sinekan1d":
        cands = ((2 * g + 1, f"sinekan1d:G={g}") for g in range(1, budget + 1))
    elif family == "fourier":
        cands = ((2 * k + 1, f"fourier:K={k}") for k in range(0, budget + 1))
    else:
        raise ValueError(f"unknown family {family!r}")
    return _closest(cands, budget)[1]


def default_ladder_specs(budgets: Sequence[int] = DEFAULT_BUDGETS, families: Sequence[str] = FAMILIES_2D) -> list[str]:
    return [ladder_spec(fam, b) for fam in families for b in sorted(budgets)]


# -- CSV ----------------------------------------------------------------------

def csv_header_line(result: SweepResult) -> str:
    meta = {
        "version": __version__,
        "cost_model": result.costs.weights(),
        "cost_source": result.costs.source,
        "solver": result.config.to_dict(),
        **result.meta,
    }
    return "# sinekan " + json.dumps(meta, sort_keys=True)


def sweep_to_csv(result: SweepResult) -> str:
    holdout = any(r.holdout_rel_l2 is not None for r in result.rows)
    buf = io.StringIO()
    buf.write(csv_header_line(result) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(CSV_FIELDS) + (["holdout_rel_l2"] if holdout else []))
    for row in result.rows:
        writer.writerow(row.csv_values(holdout))
    return buf.getvalue()


def read_sweep_csv(path) -> tuple[dict, list[dict]]:
    """Header metadata and typed rows of a sweep CSV."""
    with open(path, newline="") as fh:
        first = fh.readline()
        meta = json.loads(first.partition(" ")[2].partition(" ")[2]) if first.startswith("#") else {}
        rows = []
        for rec in csv.DictReader(fh):
            for key in ("grid_n", "param_count", "iters", "seed", "starts"):
                rec[key] = int(rec[key])
            for key in ("flops", "rel_l2", "final_cost"):
                rec[key] = float(rec[key])
            rows.append(rec)
    return meta, rows
