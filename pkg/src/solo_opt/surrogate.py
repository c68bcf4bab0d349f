"""From-scratch MLP surrogate of the expensive objective.

The network maps a design vector to the reciprocal of the objective value
(better resolution near low objectives).  Hidden blocks are
Linear -> BatchNorm -> LeakyReLU -> Dropout; training is full backprop
with Adam on mean-square error in reciprocal space.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, DesignVector, RngStream

BN_EPS = 1e-5
BN_MOMENTUM = 0.1
Y_FLOOR = 1e-9  # reciprocal-space floor so predicted objectives stay finite


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden: tuple = (256, 512, 256)
    leaky_slope: float = 0.01
    dropout: float = 0.1
    batchnorm: bool = True

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_dim < 1 or any(h < 1 for h in self.hidden):
            raise ValueError("all layer widths must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")

    @property
    def widths(self):
        return (self.input_dim, *self.hidden, 1)


@dataclass(frozen=True)
class TrainHyper:
    learning_rate: float = 0.01
    epochs: int = 1000
    batch_size: int = 1024
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("invalid training hyperparameters")


class MlpParams:
    """Weights, batchnorm state and input-normalization statistics."""

    def __init__(self, spec: MlpSpec):
        self.spec = spec
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        self.bn_gamma: list[np.ndarray] = []
        self.bn_beta: list[np.ndarray] = []
        self.bn_mean: list[np.ndarray] = []
        self.bn_var: list[np.ndarray] = []
        self.x_mean = np.zeros(spec.input_dim)
        self.x_std = np.ones(spec.input_dim)

    def trainable(self) -> list[np.ndarray]:
        """All arrays updated by the optimizer, in a fixed order."""
        out = []
        for i in range(len(self.weights)):
            out.append(self.weights[i])
            out.append(self.biases[i])
        out.extend(self.bn_gamma)
        out.extend(self.bn_beta)
        return out

    def copy(self) -> "MlpParams":
        other = MlpParams(self.spec)
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        other.bn_gamma = [g.copy() for g in self.bn_gamma]
        other.bn_beta = [b.copy() for b in self.bn_beta]
        other.bn_mean = [m.copy() for m in self.bn_mean]
        other.bn_var = [v.copy() for v in self.bn_var]
        other.x_mean = self.x_mean.copy()
        other.x_std = self.x_std.copy()
        return other


def init_network(spec: MlpSpec, rng: RngStream) -> MlpParams:
    """Kaiming-uniform fan-in initialization (suits LeakyReLU)."""
    g = rng.generator
    params = MlpParams(spec)
    widths = spec.widths
    gain = np.sqrt(2.0 / (1.0 + spec.leaky_slope**2))
    for d_in, d_out in zip(widths[:-1], widths[1:]):
        bound = gain * np.sqrt(3.0 / d_in)
        params.weights.append(g.uniform(-bound, bound, size=(d_in, d_out)))
        params.biases.append(np.zeros(d_out))
    if spec.batchnorm:
        for h in spec.hidden:
            params.bn_gamma.append(np.ones(h))
            params.bn_beta.append(np.zeros(h))
            params.bn_mean.append(np.zeros(h))
            params.bn_var.append(np.ones(h))
    return params


def _forward_cached(params: MlpParams, batch: np.ndarray, mode: str,
                    rng: RngStream | None, update_stats: bool):
    """Forward pass keeping the intermediates backprop needs."""
    spec = params.spec
    x = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite network input")
    if x.shape[1] != spec.input_dim:
        raise ValueError(f"expected {spec.input_dim} features, got {x.shape[1]}")
    train = mode == "train"
    a = (x - params.x_mean) / params.x_std
    caches = []
    n_hidden = len(spec.hidden)
    for i in range(n_hidden):
        cache = {"a_in": a}
        z = a @ params.weights[i] + params.biases[i]
        if spec.batchnorm:
            if train:
                mu = z.mean(axis=0)
                var = z.var(axis=0)
                if update_stats:
                    params.bn_mean[i] = (1 - BN_MOMENTUM) * params.bn_mean[i] + BN_MOMENTUM * mu
                    params.bn_var[i] = (1 - BN_MOMENTUM) * params.bn_var[i] + BN_MOMENTUM * var
            else:
                mu = params.bn_mean[i]
                var = params.bn_var[i]
            inv_std = 1.0 / np.sqrt(var + BN_EPS)
            zhat = (z - mu) * inv_std
            z = params.bn_gamma[i] * zhat + params.bn_beta[i]
            cache.update(zhat=zhat, inv_std=inv_std, bn_train=train)
        neg = z < 0
        a = np.where(neg, spec.leaky_slope * z, z)
        cache["neg"] = neg
        if train and spec.dropout > 0.0:
            keep = 1.0 - spec.dropout
            mask = (rng.generator.random(a.shape) < keep) / keep
            a = a * mask
            cache["drop_mask"] = mask
        caches.append(cache)
    caches.append({"a_in": a})
    y = (a @ params.weights[-1] + params.biases[-1])[:, 0]
    return y, caches


def forward(params: MlpParams, batch: np.ndarray, mode: str = "eval",
            rng: RngStream | None = None) -> np.ndarray:
    """Raw reciprocal-space prediction for each row of `batch`.

    Eval mode is deterministic (running batchnorm stats, no dropout).
    """
    if mode == "train" and params.spec.batchnorm and np.atleast_2d(batch).shape[0] < 2:
        raise ValueError("train-mode batchnorm needs a batch of at least 2 rows")
    y, _ = _forward_cached(params, batch, mode, rng, update_stats=(mode == "train"))
    return y


def _backward(params: MlpParams, caches, dy: np.ndarray):
    """Gradients of the scalar loss wrt params.trainable(), given dL/dy."""
    spec = params.spec
    n_hidden = len(spec.hidden)
    grad_w = [None] * len(params.weights)
    grad_b = [None] * len(params.biases)
    grad_gamma = [None] * n_hidden
    grad_beta = [None] * n_hidden

    da = dy[:, None]  # (n, 1)
    a_in = caches[-1]["a_in"]
    grad_w[-1] = a_in.T @ da
    grad_b[-1] = da.sum(axis=0)
    da = da @ params.weights[-1].T
    for i in range(n_hidden - 1, -1, -1):
        cache = caches[i]
        if "drop_mask" in cache:
            da = da * cache["drop_mask"]
        dz = np.where(cache["neg"], spec.leaky_slope * da, da)
        if spec.batchnorm:
            zhat = cache["zhat"]
            grad_gamma[i] = (dz * zhat).sum(axis=0)
            grad_beta[i] = dz.sum(axis=0)
            dzhat = dz * params.bn_gamma[i]
            if cache["bn_train"]:
                n = zhat.shape[0]
                dz = (cache["inv_std"] / n) * (
                    n * dzhat
                    - dzhat.sum(axis=0)
                    - zhat * (dzhat * zhat).sum(axis=0)
                )
            else:
                dz = dzhat * cache["inv_std"]
        grad_w[i] = cache["a_in"].T @ dz
        grad_b[i] = dz.sum(axis=0)
        da = dz @ params.weights[i].T

    grads = []
    for i in range(len(grad_w)):
        grads.append(grad_w[i])
        grads.append(grad_b[i])
    grads.extend(grad_gamma[:n_hidden] if spec.batchnorm else [])
    grads.extend(grad_beta[:n_hidden] if spec.batchnorm else [])
    return grads


class AdamState:
    def __init__(self, arrays):
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.step = 0

    def update(self, arrays, grads, hyper: TrainHyper):
        self.step += 1
        b1, b2 = hyper.beta1, hyper.beta2
        corr1 = 1.0 - b1**self.step
        corr2 = 1.0 - b2**self.step
        for a, g, m, v in zip(arrays, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            a -= hyper.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + hyper.eps_adam)


def train(params: MlpParams, data: Dataset, hyper: TrainHyper):
    """Fit the network to reciprocal targets 1/F; returns (params, loss trace).

    Inputs are standardized with per-feature statistics of the training set
    (stored in params).  The trace holds one eval-mode full-dataset MSE per
    epoch, computed after that epoch's updates.
    """
    if data.n_train < 1:
        raise ValueError("need at least one training record")
    x = data.designs_matrix().astype(np.float64)
    f = data.objectives()
    if np.any(f <= 0.0) or not np.all(np.isfinite(f)):
        raise ValueError("all objectives must be positive and finite")
    t = 1.0 / f

    params.x_mean = x.mean(axis=0)
    std = x.std(axis=0)
    params.x_std = np.where(std < 1e-12, 1.0, std)

    rng = RngStream(hyper.seed, 6)
    arrays = params.trainable()
    adam = AdamState(arrays)
    n = x.shape[0]
    batch_size = min(hyper.batch_size, n)
    trace = []
    for _ in range(hyper.epochs):
        order = rng.generator.permutation(n) if n > batch_size else np.arange(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            xb, tb = x[idx], t[idx]
            mode = "train" if (params.spec.batchnorm and len(idx) >= 2) or not params.spec.batchnorm else "eval"
            y, caches = _forward_cached(params, xb, mode, rng, update_stats=mode == "train")
            dy = 2.0 * (y - tb) / len(idx)
            grads = _backward(params, caches, dy)
            adam.update(arrays, grads, hyper)
        y_all = forward(params, x, mode="eval")
        trace.append(float(np.mean((y_all - t) ** 2)))
    return params, trace


def empirical_mse(params: MlpParams, data: Dataset) -> float:
    """Mean squared training error in reciprocal space (eval mode)."""
    x = data.designs_matrix().astype(np.float64)
    t = 1.0 / data.objectives()
    y = forward(params, x, mode="eval")
    return float(np.mean((y - t) ** 2))


def predict_objective(params: MlpParams, v: DesignVector | np.ndarray) -> float:
    values = v.values if isinstance(v, DesignVector) else np.asarray(v)
    y = float(forward(params, values[None, :], mode="eval")[0])
    return 1.0 / max(y, Y_FLOOR)


def fold_eval(params: MlpParams):
    """Collapse eval-mode normalization + batchnorm into per-layer affine maps.

    Returns (A_list, b_list, slope): y = chain of (x @ A + b, leakyrelu)
    with no activation after the last layer.  Bitwise-equivalent fast path
    for the eval-mode forward up to float associativity.
    """
    spec = params.spec
    a_list, b_list = [], []
    for i in range(len(params.weights)):
        w = params.weights[i].copy()
        b = params.biases[i].copy()
        if i == 0:
            w = w / params.x_std[:, None]
            b = b - (params.x_mean / params.x_std) @ params.weights[0]
        if spec.batchnorm and i < len(spec.hidden):
            s = params.bn_gamma[i] / np.sqrt(params.bn_var[i] + BN_EPS)
            t = params.bn_beta[i] - params.bn_mean[i] * s
            w = w * s
            b = b * s + t
        a_list.append(w)
        b_list.append(b)
    return a_list, b_list, spec.leaky_slope


def eval_folded(folded, x: np.ndarray) -> np.ndarray:
    """Reciprocal-space prediction via the folded network; x is (n, N) or (N,)."""
    a_list, b_list, slope = folded
    a = np.atleast_2d(x)
    for i in range(len(a_list) - 1):
        z = a @ a_list[i] + b_list[i]
        a = np.where(z < 0, slope * z, z)
    return (a @ a_list[-1] + b_list[-1])[:, 0]


def folded_objective(params: MlpParams):
    """h(x) callables (single and batched) returning predicted objectives."""
    folded = fold_eval(params)

    def h(x):
        y = float(eval_folded(folded, x)[0])
        return 1.0 / max(y, Y_FLOOR)

    def h_batch(xs):
        y = eval_folded(folded, xs)
        return 1.0 / np.maximum(y, Y_FLOOR)

    return h, h_batch


def gradient_check(params: MlpParams, probe: DesignVector | np.ndarray,
                   h: float = 1e-5, target: float = 0.5) -> float:
    """Max relative error between backprop and central finite differences.

    Uses eval-mode batchnorm and no dropout, on the squared error of one
    probe sample against `target`.
    """
    x = (probe.values if isinstance(probe, DesignVector) else np.asarray(probe))[None, :]

    def loss():
        y = forward(params, x, mode="eval")
        return float((y[0] - target) ** 2)

    y, caches = _forward_cached(params, x, "eval", None, update_stats=False)
    dy = 2.0 * (y - target)
    grads = _backward(params, caches, dy)
    arrays = params.trainable()

    worst = 0.0
    for arr, g in zip(arrays, grads):
        flat = arr.ravel()
        gflat = g.ravel()
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            lp = loss()
            flat[j] = orig - h
            lm = loss()
            flat[j] = orig
            fd = (lp - lm) / (2 * h)
            scale = max(abs(fd), abs(gflat[j]))
            if scale > 1e-10:
                worst = max(worst, abs(fd - gflat[j]) / scale)
    return worst


def save_checkpoint(params: MlpParams, path):
    """Self-describing dump; loading reproduces eval outputs bitwise."""
    spec = params.spec
    meta = {
        "input_dim": spec.input_dim,
        "hidden": list(spec.hidden),
        "leaky_slope": spec.leaky_slope,
        "dropout": spec.dropout,
        "batchnorm": spec.batchnorm,
    }
    arrays = {"x_mean": params.x_mean, "x_std": params.x_std}
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    for i in range(len(params.bn_gamma)):
        arrays[f"bn_gamma{i}"] = params.bn_gamma[i]
        arrays[f"bn_beta{i}"] = params.bn_beta[i]
        arrays[f"bn_mean{i}"] = params.bn_mean[i]
        arrays[f"bn_var{i}"] = params.bn_var[i]
    np.savez(path, spec=json.dumps(meta), **arrays)


def load_checkpoint(path) -> MlpParams:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["spec"]))
        spec = MlpSpec(
            input_dim=meta["input_dim"],
            hidden=tuple(meta["hidden"]),
            leaky_slope=meta["leaky_slope"],
            dropout=meta["dropout"],
            batchnorm=meta["batchnorm"],
        )
        params = MlpParams(spec)
        params.x_mean = data["x_mean"]
        params.x_std = data["x_std"]
        n_layers = len(spec.hidden) + 1
        for i in range(n_layers):
            params.weights.append(data[f"w{i}"])
            params.biases.append(data[f"b{i}"])
        if spec.batchnorm:
            for i in range(len(spec.hidden)):
                params.bn_gamma.append(data[f"bn_gamma{i}"])
                params.bn_beta.append(data[f"bn_beta{i}"])
                params.bn_mean.append(data[f"bn_mean{i}"])
                params.bn_var.append(data[f"bn_var{i}"])
    return params
