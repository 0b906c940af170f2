"""Dense neural networks with hand-written exact gradients.

This is the substrate for both the effort policies (bounded output via a
scaled sigmoid) and the value critics (linear output). Everything is plain
numpy in double precision: forward/backward accept single vectors or
batches, backward also returns the gradient with respect to the *input*
(needed to chain a policy through a critic), and updates are bitwise
reproducible for a given seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConfigError, ShapeError

IDENTITY = "identity"
SCALED_SIGMOID = "scaled_sigmoid"


@dataclass
class Mlp:
    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]        # per layer, shape (out, in)
    biases: list[np.ndarray]         # per layer, shape (out,)
    output_activation: str = IDENTITY
    x_max: float = 1.0               # scale of the sigmoid output
    use_skip: bool = False           # raw input concatenated into the last hidden layer

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def _layer_in_dim(dims: tuple[int, ...], layer: int, use_skip: bool) -> int:
    base = dims[layer]
    n_layers = len(dims) - 1
    if use_skip and n_layers >= 2 and layer == n_layers - 2:
        return base + dims[0]
    return base


def init(
    layer_dims,
    output_activation: str = IDENTITY,
    seed: int = 0,
    *,
    x_max: float = 1.0,
    use_skip: bool = False,
) -> Mlp:
    """Build an Mlp with uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2 or any(d <= 0 for d in dims):
        raise ConfigError(f"layer_dims needs >= 2 positive entries, got {dims}")
    if output_activation not in (IDENTITY, SCALED_SIGMOID):
        raise ConfigError(f"unknown output activation {output_activation!r}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for layer in range(len(dims) - 1):
        fan_in = _layer_in_dim(dims, layer, use_skip)
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(dims[layer + 1], fan_in)))
        biases.append(np.zeros(dims[layer + 1]))
    return Mlp(dims, weights, biases, output_activation, float(x_max), use_skip)


@dataclass
class ForwardCache:
    x0: np.ndarray                   # network input, shape (B, d0)
    inputs: list[np.ndarray]         # per-layer input (post-concat), shape (B, fan_in)
    pre: list[np.ndarray]            # per-layer pre-activation, shape (B, out)
    sigmoid: np.ndarray | None       # sigmoid(pre) of the output layer, if used
    batched: bool


def forward(mlp: Mlp, x) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the network; returns (output, cache for backward)."""
    x = np.asarray(x, dtype=float)
    batched = x.ndim == 2
    if not batched:
        if x.ndim != 1:
            raise ShapeError(f"input must be a vector or batch matrix, got ndim {x.ndim}")
        x = x[None, :]
    if x.shape[1] != mlp.in_dim:
        raise ShapeError(f"input has {x.shape[1]} features, network expects {mlp.in_dim}")

    n_layers = mlp.n_layers
    weights = mlp.weights
    biases = mlp.biases
    skip_at = n_layers - 2 if (mlp.use_skip and n_layers >= 2) else -1
    a = x
    inputs, pre = [], []
    sig = None
    for layer in range(n_layers):
        if layer == skip_at:
            a = np.concatenate([a, x], axis=1)
        inputs.append(a)
        z = a @ weights[layer].T
        z += biases[layer]
        pre.append(z)
        if layer < n_layers - 1:
            a = np.maximum(z, 0.0)
        elif mlp.output_activation == SCALED_SIGMOID:
            sig = expit(z)
            a = mlp.x_max * sig
        else:
            a = z
    out = a if batched else a[0]
    return out, ForwardCache(x, inputs, pre, sig, batched)


def backward(mlp: Mlp, cache: ForwardCache, d_output) -> tuple[Gradients, np.ndarray]:
    """Exact reverse-mode gradients of sum(output * d_output).

    Returns parameter gradients (summed over the batch) and the gradient
    with respect to the network input, matching the input's batch shape.
    """
    g = np.asarray(d_output, dtype=float)
    if not cache.batched:
        g = g[None, :]
    if g.shape != cache.pre[-1].shape:
        raise ShapeError(
            f"d_output shape {g.shape} does not match forward output {cache.pre[-1].shape}"
        )

    n_layers = mlp.n_layers
    d_weights = [np.empty(0)] * n_layers
    d_biases = [np.empty(0)] * n_layers
    d_x0 = np.zeros_like(cache.x0)

    if mlp.output_activation == SCALED_SIGMOID:
        s = cache.sigmoid
        g = g * (mlp.x_max * s * (1.0 - s))
    da = g
    for layer in reversed(range(n_layers)):
        dz = da if layer == n_layers - 1 else da * (cache.pre[layer] > 0)
        d_weights[layer] = dz.T @ cache.inputs[layer]
        d_biases[layer] = dz.sum(axis=0)
        da = dz @ mlp.weights[layer]
        if mlp.use_skip and n_layers >= 2 and layer == n_layers - 2:
            d_x0 += da[:, -mlp.in_dim:]
            da = da[:, : -mlp.in_dim]
    d_x0 += da
    if not cache.batched:
        d_x0 = d_x0[0]
    return Gradients(d_weights, d_biases), d_x0


def zeros_like_grads(mlp: Mlp) -> Gradients:
    return Gradients(
        [np.zeros_like(w) for w in mlp.weights],
        [np.zeros_like(b) for b in mlp.biases],
    )


def scale_grads(grads: Gradients, factor: float) -> Gradients:
    return Gradients(
        [factor * w for w in grads.weights],
        [factor * b for b in grads.biases],
    )


# --- optimizer ----------------------------------------------------------------

ADAM = "adam"
SGD = "sgd"


@dataclass
class OptimizerState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    algorithm: str = ADAM
    step_count: int = 0
    m: Gradients | None = field(default=None, repr=False)
    v: Gradients | None = field(default=None, repr=False)


def _check_congruent(mlp: Mlp, grads: Gradients):
    if len(grads.weights) != len(mlp.weights):
        raise ShapeError("gradient layer count does not match network")
    for w, gw, b, gb in zip(mlp.weights, grads.weights, mlp.biases, grads.biases):
        if w.shape != gw.shape or b.shape != gb.shape:
            raise ShapeError(
                f"gradient shape {gw.shape}/{gb.shape} does not match parameters {w.shape}/{b.shape}"
            )


def apply_update(opt: OptimizerState, mlp: Mlp, grads: Gradients) -> None:
    """One in-place descent step on the Mlp parameters (Adam by default)."""
    _check_congruent(mlp, grads)
    if opt.algorithm == SGD:
        for target, g in zip(mlp.weights + mlp.biases, grads.weights + grads.biases):
            target -= opt.lr * g
        opt.step_count += 1
        return
    if opt.m is None:
        opt.m = zeros_like_grads(mlp)
        opt.v = zeros_like_grads(mlp)
    _check_congruent(mlp, opt.m)
    opt.step_count += 1
    t = opt.step_count
    c1 = 1.0 - opt.beta1 ** t
    c2 = 1.0 - opt.beta2 ** t
    params = mlp.weights + mlp.biases
    moments1 = opt.m.weights + opt.m.biases
    moments2 = opt.v.weights + opt.v.biases
    gs = grads.weights + grads.biases
    for p, m, v, g in zip(params, moments1, moments2, gs):
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * np.square(g)
        p -= opt.lr * (m / c1) / (np.sqrt(v / c2) + opt.eps)


# --- finite-difference verification ------------------------------------------


def grad_check(mlp: Mlp, x, loss, h: float = 1e-5) -> float:
    """Max relative error of backward vs central finite differences.

    `loss` maps the network output to (scalar value, d_loss/d_output).
    Every parameter coordinate and every input coordinate is perturbed.
    """
    x = np.asarray(x, dtype=float)
    out, cache = forward(mlp, x)
    _, d_out = loss(out)
    grads, d_input = backward(mlp, cache, d_out)

    def numeric(read, write):
        base = read()
        write(base + h)
        hi, _ = loss(forward(mlp, x)[0])
        write(base - h)
        lo, _ = loss(forward(mlp, x)[0])
        write(base)
        return (hi - lo) / (2.0 * h)

    worst = 0.0

    def compare(analytic, numeric_val):
        nonlocal worst
        err = abs(analytic - numeric_val) / max(abs(analytic) + abs(numeric_val), 1e-6)
        worst = max(worst, err)

    for tensor, gtensor in zip(
        mlp.weights + mlp.biases, grads.weights + grads.biases
    ):
        flat = tensor.reshape(-1)
        gflat = gtensor.reshape(-1)
        for idx in range(flat.size):
            def read(i=idx):
                return flat[i]

            def write(val, i=idx):
                flat[i] = val

            compare(gflat[idx], numeric(read, write))

    for idx in range(x.size):
        def read(i=idx):
            return x.reshape(-1)[i]

        def write(val, i=idx):
            x.reshape(-1)[i] = val

        compare(d_input.reshape(-1)[idx], numeric(read, write))
    return worst


# --- checkpoints --------------------------------------------------------------
#
# Structured text: layer dims and activation tags in the clear, parameters
# as hexadecimal float strings so a round trip restores every bit.


def mlp_to_dict(mlp: Mlp) -> dict:
    return {
        "layer_dims": list(mlp.layer_dims),
        "output_activation": mlp.output_activation,
        "x_max": float(mlp.x_max).hex(),
        "use_skip": mlp.use_skip,
        "weights": [[[v.hex() for v in row] for row in w] for w in mlp.weights],
        "biases": [[v.hex() for v in b] for b in mlp.biases],
    }


def mlp_from_dict(data: dict) -> Mlp:
    dims = tuple(int(d) for d in data["layer_dims"])
    weights = [
        np.array([[float.fromhex(v) for v in row] for row in w]) for w in data["weights"]
    ]
    biases = [np.array([float.fromhex(v) for v in b]) for b in data["biases"]]
    return Mlp(
        layer_dims=dims,
        weights=weights,
        biases=biases,
        output_activation=data["output_activation"],
        x_max=float.fromhex(data["x_max"]),
        use_skip=bool(data["use_skip"]),
    )


def save_mlp(mlp: Mlp, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mlp_to_dict(mlp), fh, indent=1)
        fh.write("\n")


def load_mlp(path) -> Mlp:
    with open(path, "r", encoding="utf-8") as fh:
        return mlp_from_dict(json.load(fh))


def clone_mlp(mlp: Mlp) -> Mlp:
    return Mlp(
        layer_dims=mlp.layer_dims,
        weights=[w.copy() for w in mlp.weights],
        biases=[b.copy() for b in mlp.biases],
        output_activation=mlp.output_activation,
        x_max=mlp.x_max,
        use_skip=mlp.use_skip,
    )
