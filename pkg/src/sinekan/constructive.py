"""Explicit sinusoidal approximation of a continuous function on [0, 1].

Pipeline: sample ``f`` at ``l/N`` -> Bernstein polynomial -> monomial
coefficients ``b_l`` -> amplitudes ``A_k`` matching the degree-N Taylor
polynomials of ``sin(omega_k x + alpha_k)`` to ``sum b_l x^l`` -> evaluate
the true sines.  Every construction carries an error certificate::

    sup |f - S| <= bernstein + coefficient mismatch + taylor tail + rounding

where ``S(x) = sum_k A_k sin(omega_k x + alpha_k)``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg

EPS = np.finfo(float).eps
MAX_DEGREE = 16
COND_LIMIT = 1e12
MAX_JITTER_RETRIES = 8
SUP_GRID_POINTS = 10_001


class IllConditionedError(ValueError):
    def __init__(self, message: str, condition: float, omegas: Optional[np.ndarray] = None):
        super().__init__(message)
        self.condition = condition
        self.omegas = omegas


def taylor_sine_coeffs(N: int, omega: float, alpha: float) -> np.ndarray:
    """``c_l = omega^l sin(alpha + l pi / 2) / l!`` for l = 0..N (0^0 = 1)."""
    if N < 0:
        raise ValueError("N must be >= 0")
    l = np.arange(N + 1)
    powers = np.ones(N + 1)
    powers[1:] = np.cumprod(np.full(N, float(omega)))
    fact = np.array([math.factorial(i) for i in l], dtype=float)
    return powers * np.sin(alpha + l * np.pi / 2) / fact


def taylor_sine_eval(N: int, omega: float, alpha: float, x):
    """Degree-N Maclaurin polynomial of ``sin(omega x + alpha)`` at ``x``."""
    c = taylor_sine_coeffs(N, omega, alpha)
    out = np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), c)
    return out[()] if np.ndim(out) == 0 else out


def remainder_bound(N: int) -> float:
    """(2 pi)^(N+1) / (N+1)!, the uniform Taylor error on [0,1] for omega in [0, 2 pi]."""
    if N < 0:
        raise ValueError("N must be >= 0")
    return math.exp((N + 1) * math.log(2 * math.pi) - math.lgamma(N + 2))


def bernstein_eval(f_samples, x):
    """Evaluate ``sum_l f(l/N) C(N,l) x^l (1-x)^(N-l)`` by de Casteljau."""
    beta = np.asarray(f_samples, dtype=float)
    if beta.ndim != 1 or beta.size < 2:
        raise ValueError("need at least two samples (N >= 1)")
    x = np.asarray(x, dtype=float)
    b = np.broadcast_to(beta, x.shape + beta.shape).copy()
    t = x[..., None]
    for j in range(1, beta.size):
        b = (1.0 - t) * b[..., :-1] + t * b[..., 1:]
    out = b[..., 0]
    return out[()] if out.ndim == 0 else out


def bernstein_to_monomial(f_samples, N: Optional[int] = None) -> np.ndarray:
    """Monomial coefficients of the Bernstein polynomial.

    ``b_l = C(N, l) * sum_i (-1)^(l-i) C(l, i) f(i/N)``.  The alternating
    sums are done in exact rational arithmetic on the float samples, so the
    only rounding is the final conversion of each coefficient.
    """
    samples = [Fraction(float(v)) for v in np.asarray(f_samples, dtype=float)]
    if N is None:
        N = len(samples) - 1
    if len(samples) != N + 1:
        raise ValueError(f"expected {N + 1} samples, got {len(samples)}")
    coeffs = []
    for l in range(N + 1):
        diff = sum((-1) ** (l - i) * math.comb(l, i) * samples[i] for i in range(l + 1))
        coeffs.append(float(math.comb(N, l) * diff))
    return np.array(coeffs)


def build_lemma4_matrix(omegas, alphas) -> np.ndarray:
    """``M[l, k] = omega_k^l sin(alpha_k + l pi / 2)``; row 0 uses omega^0 = 1."""
    omegas = np.asarray(omegas, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    if omegas.shape != alphas.shape or omegas.ndim != 1:
        raise ValueError("omegas and alphas must be 1D arrays of equal length")
    l = np.arange(omegas.size)[:, None]
    powers = np.ones((omegas.size, omegas.size))
    for i in range(1, omegas.size):
        powers[i] = powers[i - 1] * omegas
    return powers * np.sin(alphas[None, :] + l * np.pi / 2)


def equilibrated_condition(M: np.ndarray) -> float:
    """2-norm condition number after scaling rows, then columns, to unit max-abs."""
    row = np.abs(M).max(axis=1, keepdims=True)
    row[row == 0] = 1.0
    Mr = M / row
    col = np.abs(Mr).max(axis=0, keepdims=True)
    col[col == 0] = 1.0
    return float(np.linalg.cond(Mr / col))


@dataclass
class AmplitudeSolution:
    amplitudes: np.ndarray
    condition: float
    residual: float  # max |M A - rhs| / max |rhs|
    coeff_mismatch: np.ndarray  # recovered b_l minus requested b_l


def solve_amplitudes(coeffs, alphas, omegas, *, cond_limit: float = COND_LIMIT, refine_steps: int = 2) -> AmplitudeSolution:
    """Solve ``sum_k A_k omega_k^l sin(alpha_k + l pi/2) = b_l l!``.

    Uses a column-pivoted QR of the row-equilibrated matrix plus iterative
    refinement.  Raises IllConditionedError when the equilibrated condition
    number exceeds ``cond_limit``.
    """
    b = np.asarray(coeffs, dtype=float)
    M = build_lemma4_matrix(omegas, alphas)
    if b.shape != (M.shape[0],):
        raise ValueError(f"expected {M.shape[0]} coefficients, got {b.shape}")
    cond = equilibrated_condition(M)
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedError(
            f"amplitude system condition {cond:.3e} exceeds {cond_limit:.1e}", cond, np.asarray(omegas, float)
        )
    fact = np.array([math.factorial(l) for l in range(b.size)], dtype=float)
    rhs = b * fact

    row = np.abs(M).max(axis=1)
    row[row == 0] = 1.0
    Ms, rs = M / row[:, None], rhs / row
    Q, R, piv = scipy.linalg.qr(Ms, pivoting=True)

    def lsolve(v):
        z = scipy.linalg.solve_triangular(R, Q.T @ v)
        out = np.empty_like(z)
        out[piv] = z
        return out

    A = lsolve(rs)
    for _ in range(refine_steps):
        A = A + lsolve(rs - Ms @ A)

    MA = M @ A
    scale = max(np.abs(rhs).max(), np.finfo(float).tiny)
    residual = float(np.abs(MA - rhs).max() / scale) if np.any(rhs) else float(np.abs(MA).max())
    return AmplitudeSolution(A, cond, residual, MA / fact - b)


def default_phases(N: int, alpha: float) -> np.ndarray:
    """Strictly positive, linearly spaced phases ``(k+1) alpha / (N+2)``, k = 0..N."""
    return (np.arange(N + 1) + 1.0) * alpha / (N + 2.0)


def frequencies_uniform(N: int) -> np.ndarray:
    """``2 pi k / (N+1)`` for k = 0..N; includes omega = 0, which carries constants exactly."""
    return 2.0 * np.pi * np.arange(N + 1) / (N + 1.0)


def frequencies_nonzero(N: int) -> np.ndarray:
    """``2 pi (k+1) / (N+1)`` for k = 0..N."""
    return 2.0 * np.pi * (np.arange(N + 1) + 1.0) / (N + 1.0)


FREQUENCY_RULES = {"uniform": frequencies_uniform, "nonzero": frequencies_nonzero}


@dataclass
class SineConstruction:
    N: int
    alpha: float
    phases: np.ndarray
    omegas: np.ndarray
    amplitudes: np.ndarray
    condition: float
    solve_residual: float
    bernstein_error: float  # grid sup |f - B_N f|
    coeff_error: float  # sum |recovered b_l - b_l|, bounds sup |B_N f - sum A_k T_N|
    taylor_tail: float  # sum |A_k| omega_k^(N+1) / (N+1)!
    taylor_tail_uniform: float  # sum |A_k| (2 pi)^(N+1) / (N+1)!
    rounding: float
    sup_error: float = float("nan")
    sup_location: float = float("nan")
    jitter_retries: int = 0

    @property
    def certificate(self) -> float:
        return self.bernstein_error + self.coeff_error + self.taylor_tail + self.rounding

    @property
    def amplitude_l1(self) -> float:
        return float(np.abs(self.amplitudes).sum())

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.sin(x[..., None] * self.omegas + self.phases) @ self.amplitudes
        return out[()] if out.ndim == 0 else out

    def to_dict(self) -> dict:
        d = asdict(self)
        for key, value in d.items():
            if isinstance(value, np.ndarray):
                d[key] = value.tolist()
        d["certificate"] = self.certificate
        d["amplitude_l1"] = self.amplitude_l1
        return d


def sup_grid(n: int = SUP_GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)


def verify_construction(construction: SineConstruction, f: Callable, grid=None) -> tuple[float, float]:
    """Max |f(x) - construction(x)| over ``grid`` and where it occurs."""
    grid = sup_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0 or grid.min() < 0 or grid.max() > 1:
        raise ValueError("grid must be a nonempty subset of [0, 1]")
    err = np.abs(np.asarray(f(grid), dtype=float) - construction(grid))
    i = int(np.argmax(err))
    return float(err[i]), float(grid[i])


def construct_sine_approx(
    f: Callable,
    N: int,
    alpha: float = 1.0,
    frequency_rule: Union[str, Callable[[int], np.ndarray]] = "uniform",
    *,
    rng: Optional[np.random.Generator] = None,
    grid=None,
) -> SineConstruction:
    """Build ``sum_k A_k sin(omega_k x + alpha_k)`` approximating ``f`` on [0, 1].

    If the amplitude system is too ill-conditioned, the frequencies are
    jittered (seeded, clipped to [0, 2 pi]) up to MAX_JITTER_RETRIES times
    before the IllConditionedError is propagated.
    """
    if not 1 <= N <= MAX_DEGREE:
        raise ValueError(f"N must be in [1, {MAX_DEGREE}], got {N}")
    if not 0 < alpha <= np.pi / 2:
        raise ValueError("alpha must lie in (0, pi/2]")
    rule = FREQUENCY_RULES[frequency_rule] if isinstance(frequency_rule, str) else frequency_rule
    rng = np.random.default_rng(0) if rng is None else rng
    grid = sup_grid() if grid is None else np.asarray(grid, dtype=float)

    samples = np.asarray([f(l / N) for l in range(N + 1)], dtype=float)
    b = bernstein_to_monomial(samples, N)
    phases = default_phases(N, alpha)
    omegas = np.asarray(rule(N), dtype=float)

    retries = 0
    while True:
        try:
            sol = solve_amplitudes(b, phases, omegas)
            break
        except IllConditionedError:
            if retries >= MAX_JITTER_RETRIES:
                raise
            retries += 1
            spacing = 2.0 * np.pi / (N + 1)
            omegas = np.clip(rule(N) + rng.uniform(-0.25, 0.25, N + 1) * spacing, 0.0, 2.0 * np.pi)

    A = sol.amplitudes
    f_grid = np.asarray(f(grid), dtype=float)
    bern_err = float(np.abs(f_grid - bernstein_eval(samples, grid)).max())
    fact = math.factorial(N + 1)
    tail = float(np.sum(np.abs(A) * omegas ** (N + 1)) / fact)
    l1 = float(np.abs(A).sum())
    construction = SineConstruction(
        N=N,
        alpha=float(alpha),
        phases=phases,
        omegas=omegas,
        amplitudes=A,
        condition=sol.condition,
        solve_residual=sol.residual,
        bernstein_error=bern_err,
        coeff_error=float(np.abs(sol.coeff_mismatch).sum()),
        taylor_tail=tail,
        taylor_tail_uniform=l1 * remainder_bound(N),
        # float error of evaluating the sine sum and the recovered coefficients
        rounding=4.0 * (N + 2) * EPS * (l1 + float(np.abs(b).sum()) + float(np.abs(f_grid).max())),
        jitter_retries=retries,
    )
    construction.sup_error, construction.sup_location = verify_construction(construction, f, grid)
    return construction
