"""Relative L2 error and the relative-FLOP cost model.

Per-forward-evaluation counts (``w_*`` are the CostModel weights):

SineKan1D, grid G::

    2G mul + (2G + 1) add + G sin
    (omega_k x, phase add, sine, A_k scale, accumulate, bias)

SineKan2Layer, n inputs, G1, H hidden, G2, m outputs.  Each layer computes
its sines once and shares them across outputs::

    layer 1: G1 n (mul + add + sin) + H G1 n (mul + add) + H add
    layer 2: G2 H (mul + add + sin) + m G2 H (mul + add) + m add

MlpModel, n inputs, H hidden, m outputs (dot products plus bias)::

    (H n + m H) (mul + add) + H act

FourierModel, per-axis harmonics K_i, P coefficients::

    per axis: K_i mul (2 pi k x) + 2 K_i sin (cos counted as sin)
    2D cross terms: 4 Kx Ky mul
    combination: P mul + (P - 1) add
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .models import FourierModel, MlpModel, Model, SineKan1D, SineKan2Layer, parse_model_spec


def relative_l2(y_true, y_fit) -> float:
    """||y_true - y_fit|| / ||y_true||."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_fit = np.asarray(y_fit, dtype=float).ravel()
    if y_true.shape != y_fit.shape or y_true.size == 0:
        raise ValueError(f"shape mismatch or empty input: {y_true.shape} vs {y_fit.shape}")
    denom = np.linalg.norm(y_true)
    if denom == 0:
        raise ValueError("relative L2 error is undefined for an all-zero reference")
    return float(np.linalg.norm(y_true - y_fit) / denom)


@dataclass(frozen=True)
class CostModel:
    add: float = 1.0
    mul: float = 1.0
    relu: float = 1.5
    sin: float = 12.0
    source: str = "PaperDefaults"
    timings: Optional[dict] = field(default=None, compare=False)

    def weights(self) -> dict:
        return {"add": self.add, "mul": self.mul, "relu": self.relu, "sin": self.sin}

    def to_json(self) -> str:
        return json.dumps(self.weights(), sort_keys=False)

    @classmethod
    def from_json(cls, text: str, source: str = "PaperDefaults") -> "CostModel":
        d = json.loads(text)
        return cls(add=d["add"], mul=d["mul"], relu=d["relu"], sin=d["sin"], source=d.get("source", source))


DEFAULT_COSTS = CostModel()
TORCHLIKE_COSTS = CostModel(relu=1.0, sin=3.5, source="TorchLike")


def model_flops(model, costs: CostModel = DEFAULT_COSTS, n_in: int = 1) -> float:
    """Relative FLOPs for one forward evaluation of ``model`` (a Model or spec string)."""
    if isinstance(model, str):
        model = parse_model_spec(model, n_in)
    add, mul, sin = costs.add, costs.mul, costs.sin
    if isinstance(model, SineKan1D):
        G = model.grid_size
        return 2 * G * mul + (2 * G + 1) * add + G * sin
    if isinstance(model, SineKan2Layer):
        n, G1, H, G2, m = model.n_in, model.grid1, model.hidden, model.grid2, model.n_out
        layer1 = G1 * n * (mul + add + sin) + H * G1 * n * (mul + add) + H * add
        layer2 = G2 * H * (mul + add + sin) + m * G2 * H * (mul + add) + m * add
        return layer1 + layer2
    if isinstance(model, MlpModel):
        n, H, m = model.n_in, model.hidden, model.n_out
        act = costs.relu if model.activation == "relu" else sin
        return (H * n + m * H) * (mul + add) + H * act
    if isinstance(model, FourierModel):
        P = model.param_count
        total = sum(K * mul + 2 * K * sin for K in model.harmonics)
        if model.n_in == 2:
            total += 4 * model.harmonics[0] * model.harmonics[1] * mul
        return total + P * mul + (P - 1) * add
    if isinstance(model, Model):
        raise ValueError(f"no FLOP formula for {type(model).__name__}")
    raise ValueError(f"unknown model family: {model!r}")


# Shortest timed block accepted as a measurement; below this, call overhead and
# scheduler noise dominate the kernel cost.
_MIN_TIMED_SECONDS = 1e-4


def measure_costs(iterations: int = 20_000, batch_size: int = 1024, repeats: int = 5) -> CostModel:
    """Time add/mul/relu/sine over contiguous arrays and normalize to add = 1.

    Each kernel is timed ``repeats`` times and the fastest run is kept.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    rng = np.random.default_rng(0)
    a = rng.uniform(-1.0, 1.0, batch_size)
    b = rng.uniform(-1.0, 1.0, batch_size)
    out = np.empty(batch_size)
    kernels = {
        "add": lambda: np.add(a, b, out=out),
        "mul": lambda: np.multiply(a, b, out=out),
        "relu": lambda: np.maximum(a, 0.0, out=out),
        "sin": lambda: np.sin(a, out=out),
    }
    resolution = time.get_clock_info("perf_counter").resolution
    # Kernels are interleaved within each repeat so that machine-load drift
    # affects all of them alike; the fastest repeat per kernel is kept.
    timings = {name: float("inf") for name in kernels}
    for _ in range(repeats):
        for name, kernel in kernels.items():
            t0 = time.perf_counter()
            for _ in range(iterations):
                kernel()
            timings[name] = min(timings[name], time.perf_counter() - t0)
    if min(timings.values()) < max(1000 * resolution, _MIN_TIMED_SECONDS):
        raise RuntimeError("timings are too close to the clock resolution; increase iterations")
    base = timings["add"]
    return CostModel(
        add=1.0,
        mul=timings["mul"] / base,
        relu=timings["relu"] / base,
        sin=timings["sin"] / base,
        source="Measured",
        timings=timings,
    )
