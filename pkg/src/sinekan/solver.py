"""Trust-region least squares with optional box bounds.

``fit`` minimizes ``0.5 * ||r(p)||^2`` with trust-region steps computed in the
singular basis of the scaled Jacobian: the exact constrained minimizer of the
Gauss-Newton model by default, or a dogleg step.  Variables are scaled by the
column norms of the initial Jacobian.  Box constraints are handled by
fixing variables that sit on a bound with the gradient pushing outward and
truncating the step at the first bound it crosses, so every iterate is
feasible.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

log = logging.getLogger(__name__)

EPS = np.finfo(float).eps


class Termination(str, enum.Enum):
    Ftol = "Ftol"
    Xtol = "Xtol"
    Gtol = "Gtol"
    MaxIter = "MaxIter"


class SolverError(RuntimeError):
    pass


class NonFiniteError(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: Optional[int] = None  # None -> max_iter_per_param * n_params
    max_iter_per_param: int = 100
    ftol: float = 1e-10
    xtol: float = 1e-10
    gtol: float = 1e-10
    initial_radius: float = 1.0
    seed: int = 42
    subproblem: str = "exact"  # or "dogleg"

    def __post_init__(self):
        if self.subproblem not in ("exact", "dogleg"):
            raise ValueError("subproblem must be 'exact' or 'dogleg'")
        if min(self.ftol, self.xtol, self.gtol, self.initial_radius) <= 0:
            raise ValueError("tolerances and initial radius must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.max_iter_per_param < 1:
            raise ValueError("max_iter_per_param must be >= 1")

    def iteration_budget(self, n_params: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return self.max_iter_per_param * max(n_params, 1)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LeastSquaresProblem:
    residual: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    p0: np.ndarray
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    # seed -> starting point, used by multi_start_fit for starts after the first
    init: Optional[Callable[[int], np.ndarray]] = None

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=float).ravel()
        n = self.p0.size
        self.lower = np.full(n, -np.inf) if self.lower is None else np.broadcast_to(np.asarray(self.lower, float), (n,)).copy()
        self.upper = np.full(n, np.inf) if self.upper is None else np.broadcast_to(np.asarray(self.upper, float), (n,)).copy()
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(self.p0 < self.lower) or np.any(self.p0 > self.upper):
            raise ValueError("p0 lies outside the bounds")

    @property
    def bounded(self) -> bool:
        return bool(np.isfinite(self.lower).any() or np.isfinite(self.upper).any())


@dataclass
class FitReport:
    params: np.ndarray
    cost: float
    initial_cost: float
    cost_history: list[float]
    residual_norms: list[float]
    iterations: int
    njev: int
    nfev: int
    termination: Termination
    seed: int = 0
    starts: int = 1
    start_costs: list[float] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.termination is not Termination.MaxIter


def _dogleg(gn: np.ndarray, g: np.ndarray, Jg_sq: float, delta: float) -> np.ndarray:
    """Dogleg point inside ||s|| <= delta for the scaled model m(s) = g.s + 0.5|Js|^2."""
    gn_norm = np.linalg.norm(gn)
    if gn_norm <= delta:
        return gn
    g_sq = g @ g
    if g_sq == 0.0:
        return gn * (delta / gn_norm)
    if Jg_sq <= 0.0:
        return -g * (delta / np.sqrt(g_sq))
    cauchy = -(g_sq / Jg_sq) * g
    c_norm = np.linalg.norm(cauchy)
    if c_norm >= delta:
        return cauchy * (delta / c_norm)
    d = gn - cauchy
    a, b, c = d @ d, 2.0 * (cauchy @ d), c_norm**2 - delta**2
    t = (-b + np.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
    return cauchy + t * d


# above this many (rows * columns^2), factor through J^T J
GRAM_THRESHOLD = 2e7


def _factor(Js: np.ndarray, r: np.ndarray, gs: np.ndarray):
    """Right singular vectors of ``Js`` and ``num = sv * (U^T r) = V^T Js^T r``.

    Small problems use a thin SVD.  Large ones take the eigendecomposition of
    ``Js^T Js``, which is an order of magnitude cheaper for tall Jacobians at
    the price of resolving singular values only down to ``sqrt(eps)`` of the
    largest; the trust-region damping covers the rest.
    """
    m, n = Js.shape
    if m * n * n <= GRAM_THRESHOLD or m < n:
        U, sv, Vt = np.linalg.svd(Js, full_matrices=False)
        num = sv * (U.T @ r)
        keep = sv > sv[0] * max(m, n) * EPS if sv.size else sv > 0
        return sv, num, Vt, keep
    w, V = np.linalg.eigh(Js.T @ Js)
    w, V = np.maximum(w[::-1], 0.0), V[:, ::-1]
    keep = w > w[0] * n * EPS
    return np.sqrt(w), V.T @ gs, V.T, keep


def _exact_step(sv: np.ndarray, num: np.ndarray, Vt: np.ndarray, gn: np.ndarray, delta: float) -> np.ndarray:
    """Minimizer of the scaled quadratic model on ||s|| <= delta.

    In the singular basis s(lam) = -V (num / (sv^2 + lam)); lam >= 0 is found
    by safeguarded Newton on 1/||s(lam)|| - 1/delta.
    """
    if np.linalg.norm(gn) <= delta:
        return gn
    # directions with a zero numerator never enter s(lam); dropping them also
    # avoids 0/0 at lam = 0 for exactly singular Jacobians (e.g. dead ReLUs)
    active = num != 0
    sv, num, Vt = sv[active], num[active], Vt[active]

    def norm_and_slope(lam):
        den = sv**2 + lam
        q = num / den
        nrm = np.sqrt(q @ q)
        slope = -(q @ (q / den)) / nrm  # d||s||/dlam
        return nrm, slope

    lo, hi = 0.0, np.linalg.norm(num) / delta
    lam = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(50):
            nrm, slope = norm_and_slope(lam)
            if abs(nrm - delta) <= 1e-3 * delta:
                break
            if nrm > delta:
                lo = lam
            else:
                hi = lam
            lam_new = lam - (1.0 / delta - 1.0 / nrm) * nrm**2 / slope
            lam = lam_new if lo < lam_new < hi else 0.5 * (lo + hi)
        coef = np.where(sv**2 + lam > 0, num / (sv**2 + lam), 0.0)
    step = -(Vt.T @ coef)
    nrm = np.linalg.norm(step)
    return step * (delta / nrm) if nrm > delta else step


def _max_feasible(x, step, lower, upper) -> float:
    alpha = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(step > 0, (upper - x) / step, np.inf)
        lo = np.where(step < 0, (lower - x) / step, np.inf)
    alpha = min(alpha, float(np.min(up, initial=np.inf)), float(np.min(lo, initial=np.inf)))
    return max(alpha, 0.0)


def _check_finite(r, J=None):
    if not np.all(np.isfinite(r)):
        raise NonFiniteError("residuals are not finite at the starting point")
    if J is not None and not np.all(np.isfinite(J)):
        raise NonFiniteError("jacobian is not finite at the starting point")


def fit(problem: LeastSquaresProblem, config: SolverConfig = SolverConfig()) -> FitReport:
    """Minimize ``0.5 * ||r(p)||^2`` from ``problem.p0``.

    Costs in the report are non-increasing and every iterate respects the
    bounds.  Non-finite trial residuals count as rejected steps; if the
    radius collapses while trials keep failing, NonFiniteError is raised.
    """
    lower, upper = problem.lower, problem.upper
    x = problem.p0.copy()
    n = x.size
    r = np.asarray(problem.residual(x), dtype=float).ravel()
    J = np.asarray(problem.jacobian(x), dtype=float)
    _check_finite(r, J)
    if J.shape != (r.size, n):
        raise ValueError(f"jacobian shape {J.shape} does not match ({r.size}, {n})")
    nfev = njev = 1

    scale = np.maximum(np.linalg.norm(J, axis=0), 1e-8)
    delta = config.initial_radius
    cost = 0.5 * float(r @ r)
    initial_cost = cost
    history, norms = [cost], [np.sqrt(2 * cost)]
    budget = config.iteration_budget(n)
    it = 0
    termination = None

    while termination is None:
        g = J.T @ r
        at_lower = (x <= lower) & (g > 0)
        at_upper = (x >= upper) & (g < 0)
        free = ~(at_lower | at_upper)

        r_norm = np.sqrt(2 * cost)
        col_norms = np.linalg.norm(J[:, free], axis=0)
        if r_norm == 0.0 or not free.any():
            g_measure = 0.0
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                g_measure = float(np.max(np.where(col_norms > 0, np.abs(g[free]) / (col_norms * r_norm), 0.0)))
        if g_measure <= config.gtol:
            termination = Termination.Gtol
            break
        if it >= budget:
            termination = Termination.MaxIter
            break

        D = scale[free]
        Js = J[:, free] / D
        gs = g[free] / D
        sv, num, Vt, keep = _factor(Js, r, gs)
        gn = -(Vt[keep].T @ (num[keep] / sv[keep] ** 2))
        Jg_sq = float(np.sum((Js @ gs) ** 2))

        failed_trials = 0
        while True:
            if config.subproblem == "exact":
                s_scaled = _exact_step(sv, num, Vt, gn, delta)
            else:
                s_scaled = _dogleg(gn, gs, Jg_sq, delta)
            step = np.zeros(n)
            step[free] = s_scaled / D
            alpha = _max_feasible(x, step, lower, upper)
            if alpha < 1.0:
                step *= alpha
                s_scaled = s_scaled * alpha
            x_new = np.clip(x + step, lower, upper)
            step = x_new - x
            step_norm = float(np.linalg.norm(step))
            x_norm = float(np.linalg.norm(x))

            Js_step = Js @ s_scaled
            predicted = -(gs @ s_scaled + 0.5 * Js_step @ Js_step)

            r_new = np.asarray(problem.residual(x_new), dtype=float).ravel()
            nfev += 1
            if not np.all(np.isfinite(r_new)):
                failed_trials += 1
                delta = 0.25 * np.linalg.norm(s_scaled)
                if step_norm < config.xtol * (config.xtol + x_norm):
                    raise NonFiniteError(f"non-finite residuals persisted after {failed_trials} trial steps")
                continue

            cost_new = 0.5 * float(r_new @ r_new)
            actual = cost - cost_new
            ratio = actual / predicted if predicted > 0 else 0.0
            s_norm = float(np.linalg.norm(s_scaled))
            if ratio < 0.25:
                delta = 0.25 * s_norm
            elif ratio > 0.75 and s_norm >= 0.95 * delta:
                delta = 2.0 * delta

            small_step = step_norm <= config.xtol * (config.xtol + x_norm)
            if actual > 0:
                break
            if small_step or delta == 0.0:
                termination = Termination.Xtol
                break

        if termination is not None:
            break

        x, r, cost = x_new, r_new, cost_new
        J = np.asarray(problem.jacobian(x), dtype=float)
        njev += 1
        it += 1
        history.append(cost)
        norms.append(np.sqrt(2 * cost))

        if actual < config.ftol * (cost + actual) and ratio > 0.25:
            termination = Termination.Ftol
        elif small_step:
            termination = Termination.Xtol

    return FitReport(
        params=x,
        cost=cost,
        initial_cost=initial_cost,
        cost_history=history,
        residual_norms=norms,
        iterations=it,
        njev=njev,
        nfev=nfev,
        termination=termination,
        seed=config.seed,
    )


def fit_linear(X, y) -> np.ndarray:
    """Minimum-norm least-squares coefficients for ``X @ beta ~ y``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape[0] != X.shape[0]:
        raise ValueError(f"design matrix {X.shape} and targets {y.shape} do not match")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return beta


def multi_start_fit(problem: LeastSquaresProblem, config: SolverConfig = SolverConfig(), n_starts: int = 1) -> FitReport:
    """Best of ``n_starts`` fits using seeds ``seed, seed + 1, ...``.

    Start 0 uses ``problem.p0``.  Later starts draw their initial point from
    ``problem.init(seed + i)`` or, without an initializer, perturb ``p0``
    with a generator seeded by ``seed + i``.  Failed starts are skipped; if
    all fail, the last error is re-raised.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    best, last_error, costs = None, None, []
    for i in range(n_starts):
        seed = config.seed + i
        if i == 0:
            p0 = problem.p0
        elif problem.init is not None:
            p0 = np.asarray(problem.init(seed), dtype=float)
        else:
            rng = np.random.default_rng(seed)
            p0 = problem.p0 + 0.1 * (1.0 + np.abs(problem.p0)) * rng.standard_normal(problem.p0.size)
            p0 = np.clip(p0, problem.lower, problem.upper)
        start = LeastSquaresProblem(problem.residual, problem.jacobian, p0, problem.lower, problem.upper, problem.init)
        try:
            report = fit(start, config)
        except SolverError as exc:
            log.warning("start %d (seed %d) failed: %s", i, seed, exc)
            last_error = exc
            costs.append(float("nan"))
            continue
        report.seed = seed
        costs.append(report.cost)
        if best is None or report.cost < best.cost:
            best = report
    if best is None:
        raise last_error
    best.starts = n_starts
    best.start_costs = costs
    return best
