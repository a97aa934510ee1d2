"""A small numpy feed-forward network engine.

Dense layers with relu / sigmoid / identity / softmax activations, mean
mse and cross-entropy losses with backpropagated gradients, and plain
mini-batch SGD. Everything is float64 and every random draw comes from an
explicit seed.

The dense product in :func:`forward` goes through ``np.einsum`` rather than
BLAS so that evaluating one row gives bitwise the same result as evaluating
that row inside a batch.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, NumericOverflowError, ShapeError, TrainingDivergedError

ACTIVATIONS = ("relu", "sigmoid", "identity", "softmax")
LOSSES = ("bce", "mse")
PROB_FLOOR = 1e-12
SCHEMA_FORMAT = "alime.mlp"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Layer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str

    @property
    def fan_in(self) -> int:
        return self.weight.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weight.shape[0]


@dataclass(frozen=True)
class MlpModel:
    layers: tuple[Layer, ...]
    input_dim: int
    # loss_history[0] is the loss before the first update, then one entry per epoch
    loss_history: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.layers:
            raise ConfigurationError("a model needs at least one layer")
        width = self.input_dim
        for i, layer in enumerate(self.layers):
            if layer.activation not in ACTIVATIONS:
                raise ConfigurationError(f"unknown activation {layer.activation!r}")
            if layer.activation == "softmax" and i != len(self.layers) - 1:
                raise ConfigurationError("softmax is only allowed on the final layer")
            if layer.weight.ndim != 2 or layer.bias.shape != (layer.fan_out,):
                raise ShapeError(f"layer {i}: weight {layer.weight.shape} / bias {layer.bias.shape}")
            if layer.fan_in != width:
                raise ShapeError(f"layer {i} expects width {layer.fan_in}, previous width is {width}")
            width = layer.fan_out

    @property
    def output_dim(self) -> int:
        return self.layers[-1].fan_out

    @property
    def dims(self) -> list[int]:
        return [self.input_dim] + [layer.fan_out for layer in self.layers]

    @property
    def activations(self) -> list[str]:
        return [layer.activation for layer in self.layers]

    def __call__(self, x):
        return forward(self, x)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 0.05
    seed: int = 0
    loss: str = "bce"

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be positive")
        if self.learning_rate < 0:
            raise ConfigurationError("learning_rate must be non-negative")
        if self.loss not in LOSSES:
            raise ConfigurationError(f"unknown loss {self.loss!r}")


def init_model(dims: Sequence[int], activations: Sequence[str], seed: int) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    if len(dims) < 2:
        raise ConfigurationError("dims needs an input and at least one output width")
    if len(activations) != len(dims) - 1:
        raise ConfigurationError("need exactly one activation per layer")
    if any(int(d) < 1 for d in dims):
        raise ConfigurationError(f"layer widths must be positive, got {list(dims)}")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out, act in zip(dims[:-1], dims[1:], activations):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(Layer(weight, np.zeros(fan_out), act))
    return MlpModel(tuple(layers), int(dims[0]))


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "identity":
        return z
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _activation_backward(grad_out: np.ndarray, z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "identity":
        return grad_out
    if kind == "relu":
        return grad_out * (z > 0)
    if kind == "sigmoid":
        return grad_out * a * (1.0 - a)
    # softmax Jacobian-vector product
    return a * (grad_out - (grad_out * a).sum(axis=-1, keepdims=True))


def _dense(x: np.ndarray, layer: Layer) -> np.ndarray:
    return np.einsum("ij,kj->ik", x, layer.weight) + layer.bias


def _as_batch(model: MlpModel, x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    batch = arr[None, :] if single else arr
    if batch.ndim != 2 or batch.shape[1] != model.input_dim:
        raise ShapeError(f"expected input width {model.input_dim}, got shape {arr.shape}")
    return batch, single


def _forward_cache(model: MlpModel, batch: np.ndarray):
    pre, post = [], [batch]
    a = batch
    with np.errstate(over="ignore", invalid="ignore"):
        for layer in model.layers:
            z = _dense(a, layer)
            a = _activate(z, layer.activation)
            pre.append(z)
            post.append(a)
    if not np.isfinite(a).all():
        raise NumericOverflowError("non-finite activations in forward pass")
    return pre, post


def forward(model: MlpModel, x) -> np.ndarray:
    """Evaluate the network on one vector or on a batch of rows."""
    batch, single = _as_batch(model, x)
    out = _forward_cache(model, batch)[1][-1]
    return out[0] if single else out


def loss_and_grad(model: MlpModel, inputs, targets, loss: str):
    """Mean batch loss and its gradient as a list of ``(dW, db)`` per layer.

    ``mse`` averages the squared error over rows and output units. ``bce``
    is cross-entropy on probability outputs (softmax rows or independent
    sigmoid units), with probabilities clamped at 1e-12.
    """
    if loss not in LOSSES:
        raise ConfigurationError(f"unknown loss {loss!r}")
    X, _ = _as_batch(model, inputs)
    T = np.asarray(targets, dtype=np.float64).reshape(X.shape[0], -1)
    if T.shape[1] != model.output_dim:
        raise ShapeError(f"targets have width {T.shape[1]}, model outputs {model.output_dim}")
    pre, post = _forward_cache(model, X)
    with np.errstate(over="ignore", invalid="ignore"):
        value, grads = _backward(model, pre, post, T, loss)
    if not np.isfinite(value):
        raise NumericOverflowError(f"non-finite loss {value}")
    return value, grads


def _backward(model: MlpModel, pre, post, T, loss: str):
    out = post[-1]
    n = T.shape[0]
    last = model.layers[-1].activation

    if loss == "mse":
        diff = out - T
        value = float(np.mean(diff**2))
        grad = 2.0 * diff / diff.size
        delta = _activation_backward(grad, pre[-1], out, last)
    else:
        if last not in ("softmax", "sigmoid"):
            raise ConfigurationError("bce needs a softmax or sigmoid output layer")
        # the clamp has zero slope, so clamped entries contribute no gradient
        p = np.clip(out, PROB_FLOOR, 1.0)
        grad = np.where(out > PROB_FLOOR, -T / p, 0.0)
        if last == "softmax":
            value = float(-np.sum(T * np.log(p)) / n)
        else:
            q = np.clip(1.0 - out, PROB_FLOOR, 1.0)
            value = float(-np.sum(T * np.log(p) + (1.0 - T) * np.log(q)) / n)
            grad = grad + np.where(1.0 - out > PROB_FLOOR, (1.0 - T) / q, 0.0)
        delta = _activation_backward(grad / n, pre[-1], out, last)

    grads = [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        grads[i] = (delta.T @ post[i], delta.sum(axis=0))
        if i:
            back = delta @ layer.weight
            delta = _activation_backward(back, pre[i - 1], post[i], model.layers[i - 1].activation)
    return value, grads


def _apply_step(layers: list[Layer], grads, lr: float) -> list[Layer]:
    return [
        Layer(layer.weight - lr * dW, layer.bias - lr * db, layer.activation)
        for layer, (dW, db) in zip(layers, grads)
    ]


def train(
    model: MlpModel,
    inputs,
    targets,
    cfg: TrainConfig,
    input_transform: Callable[[np.ndarray, np.random.Generator], np.ndarray] | None = None,
) -> MlpModel:
    """Mini-batch SGD with a seeded reshuffle every epoch.

    ``input_transform`` is applied to the whole input matrix once per epoch
    (fresh corruption for denoising). The returned model carries the full
    training loss before training and after each epoch in ``loss_history``.
    """
    X = np.asarray(inputs, dtype=np.float64)
    T = np.asarray(targets, dtype=np.float64)
    if X.shape[0] != T.shape[0]:
        raise ShapeError(f"{X.shape[0]} input rows but {T.shape[0]} target rows")
    if cfg.batch_size > X.shape[0]:
        raise ConfigurationError(f"batch_size {cfg.batch_size} exceeds {X.shape[0]} training rows")
    shuffle_seq, noise_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_seq)
    noise_rng = np.random.default_rng(noise_seq)

    history = [loss_and_grad(model, X, T, cfg.loss)[0]]
    layers = list(model.layers)
    current = model
    for epoch in range(1, cfg.epochs + 1):
        X_epoch = X if input_transform is None else input_transform(X, noise_rng)
        order = shuffle_rng.permutation(X.shape[0])
        try:
            for start in range(0, len(order), cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                _, grads = loss_and_grad(current, X_epoch[idx], T[idx], cfg.loss)
                layers = _apply_step(layers, grads, cfg.learning_rate)
                current = MlpModel(tuple(layers), model.input_dim)
            epoch_loss = loss_and_grad(current, X_epoch, T, cfg.loss)[0]
        except NumericOverflowError:
            raise TrainingDivergedError(epoch) from None
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(epoch, epoch_loss)
        history.append(epoch_loss)
    return replace(current, loss_history=tuple(history))


# -- serialization --------------------------------------------------------


def model_to_dict(model: MlpModel) -> dict:
    return {
        "format": SCHEMA_FORMAT,
        "version": SCHEMA_VERSION,
        "input_dim": model.input_dim,
        "layers": [
            {
                "in": layer.fan_in,
                "out": layer.fan_out,
                "activation": layer.activation,
                "weights": layer.weight.tolist(),
                "bias": layer.bias.tolist(),
            }
            for layer in model.layers
        ],
    }


def model_from_dict(doc: dict) -> MlpModel:
    if doc.get("format") != SCHEMA_FORMAT or doc.get("version") != SCHEMA_VERSION:
        raise ConfigurationError(
            f"not a {SCHEMA_FORMAT} v{SCHEMA_VERSION} document: "
            f"{doc.get('format')!r} v{doc.get('version')!r}"
        )
    layers = []
    for spec in doc["layers"]:
        weight = np.asarray(spec["weights"], dtype=np.float64).reshape(spec["out"], spec["in"])
        layers.append(Layer(weight, np.asarray(spec["bias"], dtype=np.float64), spec["activation"]))
    return MlpModel(tuple(layers), int(doc["input_dim"]))


def dumps(model: MlpModel) -> str:
    return json.dumps(model_to_dict(model))


def loads(text: str) -> MlpModel:
    return model_from_dict(json.loads(text))
