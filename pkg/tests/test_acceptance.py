"""Acceptance suite.  Each test records one PASS/FAIL line (see conftest.py).

Criterion 7 runs the 2D comparison on the full 100 x 100 mesh.  To fit the
30-minute limit on a single core it uses a reduced iteration budget and
fewer restarts than the default protocol; the budget constants below are the
only departure and the ordering claim is asserted unchanged.
"""
import math
import time

import numpy as np
import pytest

from sinekan.cli import main
from sinekan.constructive import (
    bernstein_eval,
    construct_sine_approx,
    default_phases,
    frequencies_uniform,
    remainder_bound,
    solve_amplitudes,
    taylor_sine_coeffs,
    taylor_sine_eval,
)
from sinekan.experiments import ladder_spec, run_1d_sweep, run_2d_sweep
from sinekan.metrics import DEFAULT_COSTS, CostModel, model_flops, relative_l2
from sinekan.models import FourierModel, MlpModel, SineKan1D, SineKan2Layer
from sinekan.solver import LeastSquaresProblem, SolverConfig, fit, fit_linear

# criterion 7 protocol on one core
FIG2_BUDGET = 200
FIG2_ITER_PER_PARAM = 5
FIG2_STARTS = 2


def _finish(acceptance, number, checks: dict, elapsed: float, limit: float):
    checks = {**checks, f"runtime {elapsed:.1f}s < {limit:g}s": elapsed < limit}
    failed = [name for name, ok in checks.items() if not ok]
    detail = "all checks ok" if not failed else "failed: " + ", ".join(failed)
    acceptance.record(number, not failed, f"{detail} ({elapsed:.1f}s)")
    assert not failed, failed


def test_criterion_1_taylor_certificate(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    violations = 0
    for _ in range(200):
        N = int(rng.integers(0, 13))
        omega, alpha, x = rng.uniform(0, 2 * np.pi), rng.uniform(0, np.pi / 2), rng.uniform(0, 1)
        if abs(math.sin(omega * x + alpha) - taylor_sine_eval(N, omega, alpha, x)) > remainder_bound(N):
            violations += 1
    _finish(acceptance, 1, {"zero violations in 200 draws": violations == 0}, time.perf_counter() - t0, 1.0)


def test_criterion_2_bernstein(acceptance):
    t0 = time.perf_counter()
    grid = np.linspace(0, 1, 1001)
    const_err = max(np.abs(bernstein_eval(np.full(N + 1, 2.5), grid) - 2.5).max() for N in (1, 5, 20, 64))
    lin_err = max(np.abs(bernstein_eval(np.arange(N + 1) / N * 3 - 1, grid) - (3 * grid - 1)).max() for N in (1, 5, 20, 64))
    samples = np.random.default_rng(1).normal(size=17)
    sup = []
    for N in (8, 16, 32, 64):
        s = np.sin(3 * np.arange(N + 1) / N)
        sup.append(np.abs(bernstein_eval(s, grid) - np.sin(3 * grid)).max())
    checks = {
        "constants < 1e-12": const_err < 1e-12,
        "linears < 1e-12": lin_err < 1e-12,
        "x^2 at N=2, x=0.5 is 0.375": abs(bernstein_eval([0, 0.25, 1], 0.5) - 0.375) < 1e-12,
        "endpoints exact": bernstein_eval(samples, 0.0) == samples[0] and bernstein_eval(samples, 1.0) == samples[-1],
        "sin(3x) sup error strictly decreasing": all(a > b for a, b in zip(sup, sup[1:])),
    }
    _finish(acceptance, 2, checks, time.perf_counter() - t0, 1.0)


def test_criterion_3_amplitude_round_trip(acceptance):
    t0 = time.perf_counter()
    checks = {}
    rng = np.random.default_rng(7)
    for N in (2, 4, 8):
        b = rng.normal(size=N + 1)
        alphas, omegas = default_phases(N, 1.0), frequencies_uniform(N)
        sol = solve_amplitudes(b, alphas, omegas)
        rec = sum(a * taylor_sine_coeffs(N, w, al) for a, w, al in zip(sol.amplitudes, omegas, alphas))
        checks[f"N={N} relative mismatch < 1e-6"] = np.abs(rec - b).max() / np.abs(b).max() < 1e-6
        checks[f"N={N} condition reported"] = math.isfinite(sol.condition) and sol.condition >= 1
    one = solve_amplitudes([3.0], [math.pi / 6], [1.3])
    checks["1x1 gives b0/sin(alpha0)"] = one.amplitudes[0] == 3.0 / math.sin(math.pi / 6)
    _finish(acceptance, 3, checks, time.perf_counter() - t0, 1.0)


def test_criterion_4_end_to_end_construction(acceptance):
    t0 = time.perf_counter()
    lin = construct_sine_approx(lambda x: np.asarray(x, float), 6)
    one = construct_sine_approx(lambda x: np.ones_like(np.asarray(x, float)), 4)
    checks = {
        "f=x: sup error <= certificate": lin.sup_error <= lin.certificate,
        "f=x: Bernstein term < 1e-12": lin.bernstein_error < 1e-12,
        "f=1, N=4: sup error < 1e-6": one.sup_error < 1e-6,
    }
    _finish(acceptance, 4, checks, time.perf_counter() - t0, 1.0)


def _fd_jacobian(model, xs, p, h=1e-6):
    cols = []
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = h
        cols.append((model.forward(xs, p + e) - model.forward(xs, p - e)).ravel() / (2 * h))
    return np.column_stack(cols)


def test_criterion_5_solver(acceptance):
    t0 = time.perf_counter()
    checks = {}

    s2 = math.sqrt(2.0)
    rosen = fit(
        LeastSquaresProblem(
            lambda p: np.array([1 - p[0], s2 * (p[1] - p[0] ** 2)]),
            lambda p: np.array([[-1.0, 0.0], [-2 * s2 * p[0], s2]]),
            np.array([-1.2, 1.0]),
        )
    )
    checks["Rosenbrock reaches (1,1)"] = np.allclose(rosen.params, 1.0, atol=1e-6)
    checks["Rosenbrock cost < 1e-12"] = rosen.cost < 1e-12

    rng = np.random.default_rng(5)
    lin_ok, mono_ok = True, True
    for _ in range(10):
        A = rng.normal(size=(25, 6))
        y = rng.normal(size=25)
        rep = fit(LeastSquaresProblem(lambda p, A=A, y=y: A @ p - y, lambda p, A=A: A, np.zeros(6)))
        lin_ok &= bool(np.abs(rep.params - fit_linear(A, y)).max() < 1e-8)
        mono_ok &= bool(np.all(np.diff(rep.cost_history) < 0))
    checks["linear matches fit_linear within 1e-8"] = lin_ok

    bounded = fit(LeastSquaresProblem(lambda p: p - 5.0, lambda p: np.eye(1), np.array([1.0]), lower=0.0, upper=2.0))
    checks["bounded pins upper bound"] = bounded.params[0] == 2.0

    m = SineKan1D(4)
    xs = np.linspace(0.01, 1, 60)
    y = np.exp(-1 / xs) * np.sin(1 / xs)
    rep = fit(LeastSquaresProblem(lambda p: m.forward(xs, p).ravel() - y, lambda p: m.jacobian(xs, p), m.init_params(1)),
              SolverConfig(max_iterations=200))
    mono_ok &= bool(np.all(np.diff(rep.cost_history) < 0))
    mono_ok &= bool(np.all(np.diff(rosen.cost_history) < 0))
    checks["cost strictly decreasing on accepted steps"] = mono_ok

    families = [SineKan1D(5), SineKan2Layer(2, 3, 4, 3, 1), MlpModel(2, 6, 1, "sine"), FourierModel((2, 3), dim=2)]
    jac_ok = True
    for model in families:
        for seed in range(20):
            r = np.random.default_rng(seed)
            p = r.normal(size=model.param_count)
            pts = r.uniform(0.01, 1, (7, model.n_in))
            pts = pts.ravel() if model.n_in == 1 else pts
            J, F = model.jacobian(pts, p), _fd_jacobian(model, pts, p)
            jac_ok &= bool(np.abs(J - F).max() / max(np.abs(F).max(), 1e-12) < 1e-5)
    checks["Jacobians of four families match central differences"] = jac_ok
    _finish(acceptance, 5, checks, time.perf_counter() - t0, 10.0)


def test_criterion_6_one_dimensional_ordering(acceptance):
    t0 = time.perf_counter()
    specs = ["sinekan1d:G=8", "fourier:K=8"]
    assert SineKan1D(8).param_count == FourierModel(8).param_count == 17
    res = run_1d_sweep(["f1", "f2", "f3", "f4"], [100], specs, SolverConfig(), starts=5)
    err = {(r.func, r.model_spec.split(":")[0]): r.rel_l2 for r in res.rows}
    # Fourier is linear: more starts cannot change it, so starts=5 is harmless there
    checks = {}
    for f in ("f1", "f2", "f3"):
        checks[f"{f}: SineKAN {err[f, 'sinekan1d']:.2e} < Fourier {err[f, 'fourier']:.2e}"] = err[f, "sinekan1d"] < err[f, "fourier"]
    a, b = err["f4", "sinekan1d"], err["f4", "fourier"]
    checks[f"f4: within one order ({a:.2e} vs {b:.2e})"] = max(a, b) / min(a, b) < 10
    _finish(acceptance, 6, checks, time.perf_counter() - t0, 300.0)


@pytest.mark.slow
def test_criterion_7_two_dimensional_ordering(acceptance):
    t0 = time.perf_counter()
    families = ("sinekan2", "mlp:sine", "mlp:relu", "fourier2d")
    specs = [ladder_spec(fam, FIG2_BUDGET) for fam in families]
    cfg = SolverConfig(max_iter_per_param=FIG2_ITER_PER_PARAM)
    res = run_2d_sweep(["gauss2d", "rosenbrock"], specs, cfg, n_per_axis=100, starts=FIG2_STARTS)
    checks = {}
    for func in ("gauss2d", "rosenbrock"):
        e = [r.rel_l2 for r in res.rows if r.func == func]
        label = " < ".join(f"{fam} {v:.2e}" for fam, v in zip(families, e))
        checks[f"{func}: {label}"] = e[0] < e[1] < e[2] < e[3]
    counts = [r.param_count for r in res.rows[:4]]
    checks[f"shared budget {FIG2_BUDGET} within 10% ({counts})"] = all(abs(c - FIG2_BUDGET) <= 0.1 * FIG2_BUDGET for c in counts)
    _finish(acceptance, 7, checks, time.perf_counter() - t0, 1800.0)


def test_criterion_8_metrics_and_flops(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    scale_ok = True
    for _ in range(100):
        y, yh = rng.normal(size=(2, 50))
        c = rng.choice([-1, 1]) * 10 ** rng.uniform(-3, 3)
        scale_ok &= abs(relative_l2(c * y, c * yh) - relative_l2(y, yh)) <= 4 * np.finfo(float).eps * relative_l2(y, yh)
    checks = {
        "relative_l2 examples": relative_l2([1, 2], [1, 2]) == 0.0
        and relative_l2([1, 0], [0, 0]) == 1.0
        and abs(relative_l2([3, 4], [3, 0]) - 0.8) < 1e-15,
        "relative_l2 scale invariance": scale_ok,
        "default CostModel serializes to {1, 1, 1.5, 12}": DEFAULT_COSTS.to_json() == '{"add": 1.0, "mul": 1.0, "relu": 1.5, "sin": 12.0}',
        "G=1 SineKAN is 17": model_flops(SineKan1D(1)) == 17.0,
        "1-1-1 ReLU MLP itemized count (5.5)": model_flops(MlpModel(1, 1, 1, "relu")) == 5.5,
        "zero weights give 0": model_flops(SineKan1D(3), CostModel(0, 0, 0, 0)) == 0.0,
    }
    _finish(acceptance, 8, checks, time.perf_counter() - t0, 10.0)


@pytest.mark.xfail(strict=True, reason="stated 6.5 disagrees with its own itemized terms 1+1+1.5+1+1 = 5.5")
def test_criterion_8_mlp_stated_total(acceptance):
    value = model_flops(MlpModel(1, 1, 1, "relu"))
    acceptance.record(8, value == 6.5, f"1-1-1 ReLU MLP stated total 6.5: got {value:g} (itemized sum is 5.5)")
    assert value == 6.5


def test_criterion_9_determinism(acceptance, tmp_path):
    t0 = time.perf_counter()
    args = ["bench1d", "--funcs", "f1", "f4", "--grids", "25", "50", "--starts", "3",
            "--max-iter-per-param", "20", "--no-plots"]
    codes = [main(args + ["--out", str(tmp_path / d)]) for d in ("a", "b")]
    a = (tmp_path / "a" / "bench1d.csv").read_text().split("\n", 1)[1]
    b = (tmp_path / "b" / "bench1d.csv").read_text().split("\n", 1)[1]
    checks = {"both runs exit 0": codes == [0, 0], "byte-identical CSV body": a == b, "8 rows": a.count("\n") == 9}
    _finish(acceptance, 9, checks, time.perf_counter() - t0, 600.0)
