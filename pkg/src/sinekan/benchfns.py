"""Benchmark target functions on the unit interval and the unit square.

Five one-dimensional targets (``f1``..``f5``) and two surfaces (``gauss2d``,
``rosenbrock``).  All evaluators are vectorized over numpy arrays.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

DEFAULT_K_TERMS = 5


class Func1D(str, enum.Enum):
    Func1 = "f1"
    Func2 = "f2"
    Func3 = "f3"
    Func4 = "f4"
    Func5 = "f5"


class Func2D(str, enum.Enum):
    GaussianWells = "gauss2d"
    Rosenbrock = "rosenbrock"


# f2 is entire; the others involve 1/x
_SINGULAR = {Func1D.Func1, Func1D.Func3, Func1D.Func4, Func1D.Func5}


@dataclass(frozen=True)
class BenchFunction1D:
    id: Func1D
    k_terms: int = DEFAULT_K_TERMS

    def __post_init__(self):
        object.__setattr__(self, "id", Func1D(self.id))
        if self.k_terms < 1:
            raise ValueError(f"k_terms must be >= 1, got {self.k_terms}")

    @property
    def name(self) -> str:
        return self.id.value

    def __call__(self, x):
        return eval_1d(self, x)


_DEFAULTS_2D = {
    Func2D.GaussianWells: dict(a=1.5, b=1.0, c=0.5, d=0.5),
    Func2D.Rosenbrock: dict(a=1.0, b=2.0, c=0.0, d=0.0),
}


@dataclass(frozen=True)
class BenchFunction2D:
    """Two-input target.  ``c`` and ``d`` are only used by the Gaussian wells."""

    id: Func2D
    a: float = field(default=None)
    b: float = field(default=None)
    c: float = field(default=None)
    d: float = field(default=None)

    def __post_init__(self):
        fid = Func2D(self.id)
        object.__setattr__(self, "id", fid)
        for key, value in _DEFAULTS_2D[fid].items():
            if getattr(self, key) is None:
                object.__setattr__(self, key, value)
        if fid is Func2D.GaussianWells and (self.c <= 0 or self.d <= 0):
            raise ValueError("GaussianWells needs c > 0 and d > 0")

    @property
    def name(self) -> str:
        return self.id.value

    def __call__(self, x, y):
        return eval_2d(self, x, y)


def eval_1d(func: BenchFunction1D, x):
    """Evaluate a 1D benchmark at ``x`` (scalar or array).

    Raises ValueError for ``x <= 0`` on the targets that contain ``1/x``.
    ``exp(-1/x)`` is left to underflow to zero for small ``x``.
    """
    x = np.asarray(x, dtype=float)
    if func.id in _SINGULAR and np.any(x <= 0):
        raise ValueError(f"{func.name} is undefined for x <= 0")

    if func.id is Func1D.Func1:
        out = np.exp(-1.0 / x) * np.sin(1.0 / x)
    elif func.id is Func1D.Func2:
        k = np.arange(1, func.k_terms + 1, dtype=float)
        xk = x[..., None] * k
        out = np.sum(np.exp(xk / np.pi) * np.sin(xk), axis=-1)
    elif func.id is Func1D.Func3:
        k = np.arange(1, func.k_terms + 1, dtype=float)
        out = np.exp(-1.0 / x) * np.sum(np.sin(x[..., None] * k + np.pi / k), axis=-1)
    elif func.id is Func1D.Func4:
        out = x ** 0.2 * np.sin(1.0 / x)
    else:
        out = x ** 0.8 * np.sin(1.0 / x)
    return out[()] if out.ndim == 0 else out


def eval_2d(func: BenchFunction2D, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if func.id is Func2D.GaussianWells:
        out = (
            x**2
            + y**2
            - func.a * np.exp(-((x - 1.0) ** 2 + y**2) / func.c)
            - func.b * np.exp(-((x + 1.0) ** 2 + y**2) / func.d)
        )
    else:
        out = (func.a - x) ** 2 + func.b * (y - x**2) ** 2
    return out[()] if np.ndim(out) == 0 else out


FUNCS_1D = tuple(f.value for f in Func1D)
FUNCS_2D = tuple(f.value for f in Func2D)


def get_function(name: str, k_terms: int = DEFAULT_K_TERMS):
    """Look up a benchmark by its stable string id."""
    if name in FUNCS_1D:
        return BenchFunction1D(Func1D(name), k_terms=k_terms)
    if name in FUNCS_2D:
        return BenchFunction2D(Func2D(name))
    raise KeyError(f"unknown function id {name!r}; known: {FUNCS_1D + FUNCS_2D}")
