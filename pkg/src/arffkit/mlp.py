"""Dense coordinate networks, reverse-mode gradients, and Adam.

Everything here is plain numpy; no autodiff framework. The networks are
small stacks of affine layers with an activation schedule given by name:

    cos        first-layer feature map, cos(W x + b)
    relu       middle layers
    sigmoid    RGB image output, squashes into (0, 1)
    identity   scalar regression output

Two conventions are fixed throughout. The output-layer bias is pinned to
zero (it is never updated, and its gradient is discarded), and the loss is
the mean squared error averaged over samples and output channels jointly.

A cosine first layer is interchangeable with a trained frequency set: the
bias-extended frequencies split losslessly into (weight row, bias entry)
pairs, so a network can start exactly at the feature expansion the sampler
produced and fine-tune from there.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigError

__all__ = [
    "AdamState",
    "MlpModel",
    "adam_init",
    "adam_step",
    "forward",
    "glorot_init",
    "gradients",
    "init_mlp",
    "merge_rff_layer",
    "mse",
    "psnr",
    "rff_layer_from_arff",
    "train_adam",
]

ACTIVATION_NAMES = ("cos", "relu", "sigmoid", "identity")


def _act(name, z):
    if name == "cos":
        return np.cos(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if name == "identity":
        return z
    raise ConfigError(f"unknown activation {name!r}, expected one of {ACTIVATION_NAMES}")


def _act_deriv(name, z, out):
    # derivative w.r.t. the preactivation; `out` is _act(name, z), reused
    # where the derivative is cheaper in terms of the output
    if name == "cos":
        return -np.sin(z)
    if name == "relu":
        return (z > 0.0).astype(z.dtype)
    if name == "sigmoid":
        return out * (1.0 - out)
    if name == "identity":
        return np.ones_like(z)
    raise ConfigError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class MlpModel:
    """Immutable stack of affine layers with per-layer activations.

    weights[l] has shape (out_l, in_l); biases[l] has shape (out_l,).
    activations[l] names the nonlinearity applied after layer l; the last
    entry is the output activation. The output bias is identically zero.
    """

    weights: tuple
    biases: tuple
    activations: tuple

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations) >= 1):
            raise ConfigError("weights, biases and activations must align, one per layer")
        for name in self.activations:
            if name not in ACTIVATION_NAMES:
                raise ConfigError(f"unknown activation {name!r}")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ConfigError(f"layer {l}: weight {w.shape} and bias {b.shape} mismatch")
            if l > 0 and w.shape[1] != self.weights[l - 1].shape[0]:
                raise ConfigError(
                    f"layer {l} expects {w.shape[1]} inputs, "
                    f"layer {l - 1} emits {self.weights[l - 1].shape[0]}"
                )
        if np.any(self.biases[-1] != 0.0):
            raise ConfigError("output-layer bias must be zero")

    @property
    def input_dim(self):
        return self.weights[0].shape[1]

    @property
    def output_dim(self):
        return self.weights[-1].shape[0]

    @property
    def layer_sizes(self):
        return (self.input_dim,) + tuple(w.shape[0] for w in self.weights)


def glorot_init(shape, rng):
    """Normal entries with variance 2/(fan_in + fan_out), shape (out, in)."""
    fan_out, fan_in = int(shape[0]), int(shape[1])
    if fan_out < 1 or fan_in < 1:
        raise ConfigError(f"need positive dimensions, got {shape}")
    scale = np.sqrt(2.0 / (fan_in + fan_out))
    return scale * rng.standard_normal((fan_out, fan_in))


def init_mlp(layer_sizes, activations, rng):
    """Glorot-normal weights and zero biases for the given size chain."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ConfigError("need at least input and output sizes")
    if len(activations) != len(sizes) - 1:
        raise ConfigError(
            f"{len(sizes) - 1} layers need {len(sizes) - 1} activations, "
            f"got {len(activations)}"
        )
    weights = tuple(
        glorot_init((sizes[l + 1], sizes[l]), rng) for l in range(len(sizes) - 1)
    )
    biases = tuple(np.zeros(sizes[l + 1]) for l in range(len(sizes) - 1))
    return MlpModel(weights=weights, biases=biases, activations=tuple(activations))


def _as_batch(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :] if x.shape[0] == dim else x[:, None]
    if x.shape[1] != dim:
        raise ConfigError(f"expected {dim} columns, got shape {x.shape}")
    return x


def _forward_states(model, x):
    acts = [x]
    pres = []
    h = x
    for w, b, name in zip(model.weights, model.biases, model.activations):
        z = h @ w.T + b
        h = _act(name, z)
        pres.append(z)
        acts.append(h)
    return acts, pres


def forward(model, x):
    """Evaluate the network on a batch; returns shape (n, output_dim)."""
    x = _as_batch(x, model.input_dim)
    return _forward_states(model, x)[0][-1]


def _as_targets(y, n, out_dim):
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape != (n, out_dim):
        raise ConfigError(f"targets must have shape {(n, out_dim)}, got {y.shape}")
    return y


def mse(model, x, y):
    """Mean squared error over all samples and output channels."""
    x = _as_batch(x, model.input_dim)
    pred = forward(model, x)
    y = _as_targets(y, x.shape[0], model.output_dim)
    r = pred - y
    return float(np.mean(r * r))


def gradients(model, x, y):
    """Reverse-mode gradients of the batch MSE.

    Returns (weight grads, bias grads, loss). The output-layer bias gradient
    is returned as zeros; that bias is a constant of the model.
    """
    x = _as_batch(x, model.input_dim)
    if x.shape[0] == 0:
        raise ConfigError("empty batch")
    y = _as_targets(y, x.shape[0], model.output_dim)
    acts, pres = _forward_states(model, x)
    pred = acts[-1]
    r = pred - y
    loss = float(np.mean(r * r))

    grad_w = [None] * len(model.weights)
    grad_b = [None] * len(model.biases)
    delta = (2.0 / r.size) * r
    for l in range(len(model.weights) - 1, -1, -1):
        delta = delta * _act_deriv(model.activations[l], pres[l], acts[l + 1])
        grad_w[l] = delta.T @ acts[l]
        grad_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = delta @ model.weights[l]
    grad_b[-1] = np.zeros_like(grad_b[-1])
    return grad_w, grad_b, loss


@dataclass(frozen=True)
class AdamState:
    """Per-parameter moment accumulators plus the step count."""

    m_w: tuple
    v_w: tuple
    m_b: tuple
    v_b: tuple
    step: int
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7


def adam_init(model, learning_rate, beta1=0.9, beta2=0.999, eps=1e-7):
    if learning_rate < 0.0:
        raise ConfigError(f"learning rate must be nonnegative, got {learning_rate}")
    return AdamState(
        m_w=tuple(np.zeros_like(w) for w in model.weights),
        v_w=tuple(np.zeros_like(w) for w in model.weights),
        m_b=tuple(np.zeros_like(b) for b in model.biases),
        v_b=tuple(np.zeros_like(b) for b in model.biases),
        step=0,
        learning_rate=float(learning_rate),
        beta1=float(beta1),
        beta2=float(beta2),
        eps=float(eps),
    )


def adam_step(model, grads, state, skip_layers=()):
    """One bias-corrected Adam update; returns (model, state).

    ``skip_layers`` freezes whole layers (weight and bias) by index. The
    output bias never moves regardless: its gradient is zero and its moments
    stay zero, keeping the zero-bias model invariant intact.
    """
    grad_w, grad_b = grads
    t = state.step + 1
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    lr, b1, b2, eps = state.learning_rate, state.beta1, state.beta2, state.eps

    new_w, new_b = [], []
    m_w, v_w, m_b, v_b = [], [], [], []
    for l in range(len(model.weights)):
        frozen = l in skip_layers
        for cur, g, m_acc, v_acc, out_p, out_m, out_v in (
            (model.weights[l], grad_w[l], state.m_w[l], state.v_w[l], new_w, m_w, v_w),
            (model.biases[l], grad_b[l], state.m_b[l], state.v_b[l], new_b, m_b, v_b),
        ):
            if frozen:
                out_p.append(cur)
                out_m.append(m_acc)
                out_v.append(v_acc)
                continue
            m = b1 * m_acc + (1.0 - b1) * g
            v = b2 * v_acc + (1.0 - b2) * (g * g)
            update = lr * (m / c1) / (np.sqrt(v / c2) + eps)
            out_p.append(cur - update)
            out_m.append(m)
            out_v.append(v)

    new_model = replace(model, weights=tuple(new_w), biases=tuple(new_b))
    new_state = replace(
        state, m_w=tuple(m_w), v_w=tuple(v_w), m_b=tuple(m_b), v_b=tuple(v_b), step=t
    )
    return new_model, new_state


def train_adam(model, inputs, targets, epochs, batch_size, learning_rate, rng,
               eval_inputs=None, eval_targets=None, freeze_first_layer=False):
    """Epoch-shuffled minibatch Adam.

    Each epoch draws a fresh permutation from ``rng`` and walks it in
    batches of ``batch_size`` (the final short batch is kept). Records
    full-data train MSE, eval MSE (NaN when no eval set is given), and
    elapsed monotonic seconds, one entry per epoch.

    Returns (model, curves) where curves has keys epoch, train_mse,
    val_mse, wall_time.
    """
    x = _as_batch(inputs, model.input_dim)
    y = _as_targets(targets, x.shape[0], model.output_dim)
    if batch_size < 1:
        raise ConfigError(f"batch size must be >= 1, got {batch_size}")
    if epochs < 0:
        raise ConfigError(f"epoch count must be >= 0, got {epochs}")
    state = adam_init(model, learning_rate)
    skip = (0,) if freeze_first_layer else ()
    n = x.shape[0]
    curves = {k: [] for k in ("epoch", "train_mse", "val_mse", "wall_time")}
    t0 = time.monotonic()
    for epoch in range(1, int(epochs) + 1):
        order = rng.permutation(n)
        for lo in range(0, n, int(batch_size)):
            idx = order[lo:lo + int(batch_size)]
            gw, gb, _ = gradients(model, x[idx], y[idx])
            model, state = adam_step(model, (gw, gb), state, skip_layers=skip)
        curves["epoch"].append(epoch)
        curves["train_mse"].append(mse(model, x, y))
        if eval_inputs is not None:
            curves["val_mse"].append(mse(model, eval_inputs, eval_targets))
        else:
            curves["val_mse"].append(np.nan)
        curves["wall_time"].append(time.monotonic() - t0)
    return model, {k: np.asarray(v) for k, v in curves.items()}


def rff_layer_from_arff(freqs, input_dim):
    """Split bias-extended frequencies into a cosine layer's (W, b).

    Row k of the frequency matrix is (w_k1 .. w_kd, b_k); the feature
    cos(w_k . x + b_k) then equals the cosine layer's unit k exactly.
    """
    freqs = np.asarray(freqs, dtype=float)
    if freqs.ndim != 2 or freqs.shape[1] != input_dim + 1:
        raise ConfigError(
            f"expected bias-extended frequencies with {input_dim + 1} columns, "
            f"got shape {freqs.shape}"
        )
    return freqs[:, :-1].copy(), freqs[:, -1].copy()


def merge_rff_layer(weight, bias):
    """Inverse of rff_layer_from_arff; bitwise round trip."""
    weight = np.asarray(weight, dtype=float)
    bias = np.asarray(bias, dtype=float)
    if weight.ndim != 2 or bias.shape != (weight.shape[0],):
        raise ConfigError(f"weight {weight.shape} and bias {bias.shape} mismatch")
    return np.hstack([weight, bias[:, None]])


def psnr(pred, truth, max_intensity=None):
    """Peak signal-to-noise ratio 10 log10(MAX_I^2 / MSE) in decibels.

    MAX_I defaults to the maximum intensity present in the reference image.
    Identical images give +inf.
    """
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ConfigError(f"shape mismatch {pred.shape} vs {truth.shape}")
    peak = float(truth.max()) if max_intensity is None else float(max_intensity)
    if peak <= 0.0:
        raise ConfigError(f"peak intensity must be positive, got {peak}")
    err = float(np.mean((pred - truth) ** 2))
    if err == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / err)
