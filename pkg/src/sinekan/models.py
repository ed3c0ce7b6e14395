"""Model families fitted by least squares.

Every model keeps its learnable parameters as one flat float vector and
exposes a batch ``forward`` plus an analytic ``jacobian`` with respect to
that vector.  Both accept an explicit ``params`` argument so a solver can
evaluate trial points without mutating the model.

Jacobian rows are sample-major, then output index: row ``s * n_out + o``
holds d(output o at sample s) / d(params).

Parameter layouts (amplitudes, then frequencies, then biases, layer by layer):

* ``SineKan1D``     ``[A (G), omega (G), b]``
* ``SineKan2Layer`` ``[A (H, G1, n), omega (G1), b (H), B (m, G2, H), nu (G2), c (m)]``
* ``MlpModel``      ``[W1 (H, n), beta1 (H), W2 (m, H), beta2 (m)]``
* ``FourierModel``  1D: ``[a0, a_1..a_K, b_1..b_K]``; 2D: row-major coefficient
  grid over the per-axis basis ``[1, cos_1..cos_K, sin_1..sin_K]``.
"""
from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * np.pi


def _as_batch(xs, n_in: int) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if n_in == 1 and xs.ndim <= 1:
        xs = xs.reshape(-1, 1)
    if xs.ndim == 1:
        xs = xs.reshape(1, -1)
    if xs.ndim != 2 or xs.shape[1] != n_in:
        raise ValueError(f"expected inputs of dimension {n_in}, got shape {np.shape(xs)}")
    return xs


class Model:
    """Common plumbing; subclasses define ``_shapes``, ``_forward`` and ``_jacobian``."""

    n_in: int = 1
    n_out: int = 1

    def _shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        raise NotImplementedError

    @property
    def param_count(self) -> int:
        return sum(math.prod(shape) for _, shape in self._shapes())

    def _unpack(self, p: np.ndarray) -> dict[str, np.ndarray]:
        out, i = {}, 0
        for name, shape in self._shapes():
            size = math.prod(shape)
            out[name] = p[i : i + size].reshape(shape)
            i += size
        return out

    def _resolve(self, params) -> np.ndarray:
        p = self._params if params is None else np.asarray(params, dtype=float)
        if p.shape != (self.param_count,):
            raise ValueError(f"expected {self.param_count} parameters, got shape {p.shape}")
        return p

    def get_params(self) -> np.ndarray:
        return self._params.copy()

    def set_params(self, v) -> "Model":
        v = np.asarray(v, dtype=float)
        if v.shape != (self.param_count,):
            raise ValueError(f"expected {self.param_count} parameters, got shape {v.shape}")
        self._params = v.copy()
        return self

    def forward(self, xs, params=None) -> np.ndarray:
        """Evaluate on a batch; returns shape ``(N, n_out)``."""
        return self._forward(_as_batch(xs, self.n_in), self._unpack(self._resolve(params)))

    def jacobian(self, xs, params=None) -> np.ndarray:
        xs = _as_batch(xs, self.n_in)
        J = self._jacobian(xs, self._unpack(self._resolve(params)))
        return J.reshape(xs.shape[0] * self.n_out, self.param_count)

    def __call__(self, x):
        y = self.forward(x)
        return y[0, 0] if y.size == 1 else (y[0] if y.shape[0] == 1 else y)

    def init_params(self, seed: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def spec(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.spec!r})"


class SineKan1D(Model):
    """y = sum_k A_k sin(omega_k x + k/(G+1)) + b, k = 1..G."""

    def __init__(self, grid_size: int, params=None):
        if grid_size < 1:
            raise ValueError("grid_size must be positive")
        self.grid_size = grid_size
        self.phases = np.arange(1, grid_size + 1) / (grid_size + 1.0)
        self.phases.flags.writeable = False
        self._params = np.zeros(self.param_count)
        if params is not None:
            self.set_params(params)

    def _shapes(self):
        G = self.grid_size
        return [("A", (G,)), ("omega", (G,)), ("b", (1,))]

    @property
    def spec(self):
        return f"sinekan1d:G={self.grid_size}"

    def _forward(self, xs, p):
        arg = xs * p["omega"] + self.phases  # (N, G)
        return (np.sin(arg) @ p["A"] + p["b"][0])[:, None]

    def _jacobian(self, xs, p):
        arg = xs * p["omega"] + self.phases
        return np.hstack([np.sin(arg), p["A"] * xs * np.cos(arg), np.ones((xs.shape[0], 1))])

    def init_params(self, seed):
        G = self.grid_size
        rng = np.random.default_rng(seed)
        amp = rng.uniform(-1.0, 1.0, G) / np.sqrt(G)
        omega = TWO_PI * np.arange(1, G + 1) / G
        return np.concatenate([amp, omega, [0.0]])


class SineKan2Layer(Model):
    """Two stacked sinusoidal KAN layers with fixed phase grids.

    y_j = sum_{k,l} A[j,k,l] sin(omega_k x_l + k/(G1+1) + l pi/(n+1)) + b_j
    z_m = sum_{q,j} B[m,q,j] sin(nu_q y_j + j/(G2+1) + q pi/(H+1)) + c_m

    with 1-based k, l, q, j.
    """

    def __init__(self, n_in: int = 2, grid1: int = 4, hidden: int = 8, grid2: int = 4, n_out: int = 1, params=None):
        if min(n_in, grid1, hidden, grid2, n_out) < 1:
            raise ValueError("all layer sizes must be positive")
        self.n_in, self.grid1, self.hidden, self.grid2, self.n_out = n_in, grid1, hidden, grid2, n_out
        k = np.arange(1, grid1 + 1)[:, None]
        l = np.arange(1, n_in + 1)[None, :]
        self.phases1 = k / (grid1 + 1.0) + l * np.pi / (n_in + 1.0)  # (G1, n)
        q = np.arange(1, grid2 + 1)[:, None]
        j = np.arange(1, hidden + 1)[None, :]
        self.phases2 = j / (grid2 + 1.0) + q * np.pi / (hidden + 1.0)  # (G2, H)
        self.phases1.flags.writeable = False
        self.phases2.flags.writeable = False
        self._params = np.zeros(self.param_count)
        if params is not None:
            self.set_params(params)

    def _shapes(self):
        n, G1, H, G2, m = self.n_in, self.grid1, self.hidden, self.grid2, self.n_out
        return [
            ("A", (H, G1, n)),
            ("omega", (G1,)),
            ("b", (H,)),
            ("B", (m, G2, H)),
            ("nu", (G2,)),
            ("c", (m,)),
        ]

    @property
    def spec(self):
        s = f"sinekan2:G1={self.grid1},H={self.hidden},G2={self.grid2}"
        return s if self.n_out == 1 else s + f",m={self.n_out}"

    def _hidden(self, xs, p):
        arg1 = xs[:, None, :] * p["omega"][None, :, None] + self.phases1  # (N, G1, n)
        S1 = np.sin(arg1)
        y = np.einsum("jkl,skl->sj", p["A"], S1) + p["b"]
        arg2 = y[:, None, :] * p["nu"][None, :, None] + self.phases2  # (N, G2, H)
        return arg1, S1, y, arg2

    def _forward(self, xs, p):
        _, _, _, arg2 = self._hidden(xs, p)
        return np.einsum("mqj,sqj->sm", p["B"], np.sin(arg2)) + p["c"]

    def _jacobian(self, xs, p):
        N, m = xs.shape[0], self.n_out
        n, G1, H, G2 = self.n_in, self.grid1, self.hidden, self.grid2
        arg1, S1, y, arg2 = self._hidden(xs, p)
        S2, C2 = np.sin(arg2), np.cos(arg2)
        BC = p["B"][None] * C2[:, None]  # (N, m, G2, H)
        dz_dy = np.einsum("smqj,q->smj", BC, p["nu"])
        # sum_l A[j,k,l] cos(arg1[s,k,l]) x[s,l] as a batched matmul over k
        CX = np.cos(arg1) * xs[:, None, :]  # (N, G1, n)
        AC = np.matmul(CX.transpose(1, 0, 2), p["A"].transpose(1, 2, 0))  # (G1, N, H)

        out = np.zeros((N, m, self.param_count))
        i = 0
        out[:, :, i : i + H * G1 * n] = (dz_dy[:, :, :, None] * S1.reshape(N, 1, 1, G1 * n)).reshape(N, m, -1)
        i += H * G1 * n
        out[:, :, i : i + G1] = np.matmul(dz_dy, AC.transpose(1, 2, 0))
        i += G1
        out[:, :, i : i + H] = dz_dy
        i += H
        for o in range(m):
            out[:, o, i + o * G2 * H : i + (o + 1) * G2 * H] = S2.reshape(N, -1)
        i += m * G2 * H
        out[:, :, i : i + G2] = np.einsum("smqj,sj->smq", BC, y)
        i += G2
        out[:, :, i : i + m] = np.eye(m)
        return out

    def init_params(self, seed):
        n, G1, H, G2, m = self.n_in, self.grid1, self.hidden, self.grid2, self.n_out
        rng = np.random.default_rng(seed)
        A = rng.uniform(-1.0, 1.0, (H, G1, n)) / np.sqrt(G1 * n)
        B = rng.uniform(-1.0, 1.0, (m, G2, H)) / np.sqrt(G2 * H)
        omega = TWO_PI * np.arange(1, G1 + 1) / G1
        nu = TWO_PI * np.arange(1, G2 + 1) / G2
        return np.concatenate([A.ravel(), omega, np.zeros(H), B.ravel(), nu, np.zeros(m)])


ACTIVATIONS = ("relu", "sine")


class MlpModel(Model):
    """out = W2 act(W1 x + beta1) + beta2."""

    def __init__(self, n_in: int = 1, hidden: int = 8, n_out: int = 1, activation: str = "relu", params=None):
        if activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if min(n_in, hidden, n_out) < 1:
            raise ValueError("all layer sizes must be positive")
        self.n_in, self.hidden, self.n_out, self.activation = n_in, hidden, n_out, activation
        self._params = np.zeros(self.param_count)
        if params is not None:
            self.set_params(params)

    def _shapes(self):
        n, H, m = self.n_in, self.hidden, self.n_out
        return [("W1", (H, n)), ("beta1", (H,)), ("W2", (m, H)), ("beta2", (m,))]

    @property
    def spec(self):
        s = f"mlp:H={self.hidden},act={self.activation}"
        return s if self.n_out == 1 else s + f",m={self.n_out}"

    def _act(self, h):
        if self.activation == "relu":
            return np.maximum(h, 0.0), (h > 0).astype(float)
        return np.sin(h), np.cos(h)

    def _forward(self, xs, p):
        a, _ = self._act(xs @ p["W1"].T + p["beta1"])
        return a @ p["W2"].T + p["beta2"]

    def _jacobian(self, xs, p):
        N, m = xs.shape[0], self.n_out
        a, da = self._act(xs @ p["W1"].T + p["beta1"])
        dpre = p["W2"][None, :, :] * da[:, None, :]  # (N, m, H) d out / d pre-activation
        dW1 = dpre[:, :, :, None] * xs[:, None, None, :]
        eye = np.eye(m)
        dW2 = np.einsum("mo,sj->somj", eye, a)
        return np.concatenate(
            [
                dW1.reshape(N, m, -1),
                dpre,
                dW2.reshape(N, m, -1),
                np.broadcast_to(eye, (N, m, m)),
            ],
            axis=2,
        )

    def init_params(self, seed):
        n, H, m = self.n_in, self.hidden, self.n_out
        rng = np.random.default_rng(seed)
        b1, b2 = 1.0 / np.sqrt(n), 1.0 / np.sqrt(H)
        return np.concatenate(
            [
                rng.uniform(-b1, b1, H * n),
                rng.uniform(-b1, b1, H),
                rng.uniform(-b2, b2, m * H),
                rng.uniform(-b2, b2, m),
            ]
        )


def _fourier_basis(x: np.ndarray, K: int, length: float) -> np.ndarray:
    """Columns ``[1, cos(2 pi k x / L) for k=1..K, sin(2 pi k x / L) for k=1..K]``."""
    arg = TWO_PI / length * x[:, None] * np.arange(1, K + 1)
    return np.hstack([np.ones((x.shape[0], 1)), np.cos(arg), np.sin(arg)])


class FourierModel(Model):
    """Truncated Fourier series with fixed frequencies 2 pi k / L.

    In 2D the basis is the full tensor product of the per-axis bases, so every
    {cos, sin} x {cos, sin} cross term is present.  ``harmonics`` may differ
    per axis to hit parameter budgets that odd squares miss.
    """

    def __init__(self, harmonics, dim: int = 1, length: float = 1.0, params=None):
        if np.ndim(harmonics) == 0:
            harmonics = (int(harmonics),) * dim
        harmonics = tuple(int(k) for k in harmonics)
        if dim not in (1, 2) or len(harmonics) != dim:
            raise ValueError("FourierModel supports dim 1 or 2 with one harmonic count per axis")
        if min(harmonics) < 0:
            raise ValueError("harmonic counts must be >= 0")
        self.harmonics, self.n_in, self.length = harmonics, dim, float(length)
        self._params = np.zeros(self.param_count)
        if params is not None:
            self.set_params(params)

    def _shapes(self):
        return [("coef", tuple(2 * k + 1 for k in self.harmonics))]

    @property
    def spec(self):
        if self.n_in == 1:
            return f"fourier:K={self.harmonics[0]}"
        kx, ky = self.harmonics
        return f"fourier2d:K={kx}" if kx == ky else f"fourier2d:Kx={kx},Ky={ky}"

    def design_matrix(self, xs) -> np.ndarray:
        xs = _as_batch(xs, self.n_in)
        bases = [_fourier_basis(xs[:, i], K, self.length) for i, K in enumerate(self.harmonics)]
        if self.n_in == 1:
            return bases[0]
        return (bases[0][:, :, None] * bases[1][:, None, :]).reshape(xs.shape[0], -1)

    def _forward(self, xs, p):
        return (self.design_matrix(xs) @ p["coef"].ravel())[:, None]

    def _jacobian(self, xs, p):
        return self.design_matrix(xs)

    def init_params(self, seed):
        return np.zeros(self.param_count)


def _parse_kv(body: str) -> dict[str, str]:
    out = {}
    for item in filter(None, body.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"malformed model option {item!r}")
        out[key.strip()] = value.strip()
    return out


def parse_model_spec(spec: str, n_in: int = 1, n_out: int = 1) -> Model:
    """Build a model from a config string such as ``sinekan1d:G=16`` or ``mlp:H=32,act=relu``."""
    family, _, body = spec.partition(":")
    opts = _parse_kv(body)

    def take(key, default=None, cast=int):
        if key in opts:
            return cast(opts.pop(key))
        if default is None:
            raise ValueError(f"model spec {spec!r} is missing {key}")
        return default

    if family == "sinekan1d":
        if n_in != 1:
            raise ValueError("sinekan1d takes one input")
        model = SineKan1D(take("G"))
    elif family == "sinekan2":
        grid = take("G", 4)
        model = SineKan2Layer(n_in, take("G1", grid), take("H"), take("G2", grid), take("m", n_out))
    elif family == "mlp":
        model = MlpModel(n_in, take("H"), take("m", n_out), take("act", "relu", str))
    elif family in ("fourier", "fourier2d"):
        dim = 2 if family == "fourier2d" else n_in
        if dim == 1:
            model = FourierModel(take("K"), dim=1, length=take("L", 1.0, float))
        else:
            K = take("K", -1)
            kx, ky = take("Kx", K), take("Ky", K)
            if kx < 0 or ky < 0:
                raise ValueError(f"model spec {spec!r} needs K or Kx/Ky")
            model = FourierModel((kx, ky), dim=2, length=take("L", 1.0, float))
    else:
        raise ValueError(f"unknown model family {family!r}")
    if opts:
        raise ValueError(f"unused options {sorted(opts)} in model spec {spec!r}")
    if model.n_in != n_in:
        raise ValueError(f"model spec {spec!r} takes {model.n_in} inputs, dataset has {n_in}")
    return model


def param_count(model: Model) -> int:
    return model.param_count
