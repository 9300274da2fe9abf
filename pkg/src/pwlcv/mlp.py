"""Small fully-connected networks with piecewise-linear activations.

Inputs are ``(x, y)`` in the unit square followed by ``cond_dim`` conditioning
values. Hidden layers share one width; the output layer is linear.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    LayerBudgetExceeded,
    MaskOverflow,
    NonFiniteLoss,
    SchemaError,
    UnsupportedActivation,
)
from .geometry import MASK_CAPACITY, AffineFn2

MAX_HIDDEN_LAYERS = 8
ACTIVATIONS = ("relu", "leaky_relu")


@dataclass(frozen=True)
class ActivationSpec:
    kind: str = "relu"
    negative_slope: float = 0.0

    def __post_init__(self):
        if self.kind not in ACTIVATIONS:
            raise UnsupportedActivation(f"unsupported activation {self.kind!r}")
        if self.kind == "relu" and self.negative_slope != 0.0:
            raise ValueError("relu must have negative_slope 0")
        if self.kind == "leaky_relu" and not 0.0 < self.negative_slope < 1.0:
            raise ValueError("leaky_relu negative_slope must lie in (0, 1)")

    @classmethod
    def leaky(cls, slope: float) -> "ActivationSpec":
        return cls("leaky_relu", float(slope))

    def __call__(self, z):
        if self.negative_slope == 0.0:
            return np.maximum(z, 0.0)
        return np.where(z > 0, z, self.negative_slope * z)

    def derivative(self, z):
        return np.where(z > 0, 1.0, self.negative_slope)


@dataclass
class Layer:
    weights: np.ndarray  # (fan_out, fan_in)
    biases: np.ndarray  # (fan_out,)

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64, ndmin=2)
        self.biases = np.array(self.biases, dtype=np.float64).reshape(-1)
        if self.weights.shape[0] != self.biases.shape[0]:
            raise DimensionMismatch(
                f"weights have {self.weights.shape[0]} rows but {self.biases.shape[0]} biases")


@dataclass
class Mlp:
    hidden: list[Layer]
    output: Layer
    activation: ActivationSpec = field(default_factory=ActivationSpec)
    cond_dim: int = 0

    def __post_init__(self):
        if not self.hidden:
            raise DimensionMismatch("at least one hidden layer is required")
        if len(self.hidden) > MAX_HIDDEN_LAYERS:
            raise LayerBudgetExceeded(
                f"{len(self.hidden)} hidden layers exceed the budget of {MAX_HIDDEN_LAYERS}")
        width = self.width
        if width > MASK_CAPACITY:
            raise MaskOverflow(f"hidden width {width} exceeds mask capacity {MASK_CAPACITY}")
        fan_in = self.input_dim
        for i, layer in enumerate(self.hidden):
            if layer.weights.shape != (width, fan_in):
                raise DimensionMismatch(
                    f"hidden layer {i} has shape {layer.weights.shape}, expected {(width, fan_in)}")
            fan_in = width
        if self.output.weights.shape[1] != width:
            raise DimensionMismatch("output layer fan-in does not match hidden width")

    @property
    def width(self) -> int:
        return self.hidden[0].weights.shape[0]

    @property
    def depth(self) -> int:
        return len(self.hidden)

    @property
    def n_outputs(self) -> int:
        return self.output.weights.shape[0]

    @property
    def input_dim(self) -> int:
        return 2 + self.cond_dim

    def layers(self) -> list[Layer]:
        return [*self.hidden, self.output]

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers() for p in (layer.weights, layer.biases)]

    def copy(self) -> "Mlp":
        return copy.deepcopy(self)

    @classmethod
    def init(cls, layers: int, width: int, *, cond_dim: int = 0, outputs: int = 1,
             activation: ActivationSpec | None = None, seed: int = 42) -> "Mlp":
        """He-uniform hidden weights; the linear output layer and all biases
        are uniform in +-1/sqrt(fan_in)."""
        if width > MASK_CAPACITY:
            raise MaskOverflow(f"hidden width {width} exceeds mask capacity {MASK_CAPACITY}")
        rng = np.random.default_rng(seed)

        def make(fan_out, fan_in, gain):
            w = rng.uniform(-1, 1, (fan_out, fan_in)) * np.sqrt(gain / fan_in)
            b = rng.uniform(-1, 1, fan_out) / np.sqrt(fan_in)
            return Layer(w, b)

        fan_in = 2 + cond_dim
        hidden = []
        for _ in range(layers):
            hidden.append(make(width, fan_in, 6.0))
            fan_in = width
        return cls(hidden, make(outputs, width, 1.0), activation or ActivationSpec(), cond_dim)

    def forward_batch(self, inputs: np.ndarray) -> np.ndarray:
        """Evaluate on an ``(n, input_dim)`` array; returns ``(n, K)``."""
        a = np.asarray(inputs, dtype=np.float64)
        if a.ndim != 2 or a.shape[1] != self.input_dim:
            raise DimensionMismatch(f"expected inputs of shape (n, {self.input_dim}), got {a.shape}")
        for layer in self.hidden:
            a = self.activation(a @ layer.weights.T + layer.biases)
        return a @ self.output.weights.T + self.output.biases

    def slice(self, phi: Sequence[float] = ()) -> "ConditionedSlice":
        return ConditionedSlice(self, phi)


class ConditionedSlice:
    """The 2D function ``(x, y) -> mlp(x, y, phi)`` for a fixed ``phi``.

    Conditioning only ever enters through the first layer, so it is folded
    into that layer's bias once.
    """

    def __init__(self, mlp: Mlp, phi: Sequence[float] = ()):
        phi = np.asarray(phi, dtype=np.float64).reshape(-1)
        if phi.shape[0] != mlp.cond_dim:
            raise DimensionMismatch(f"phi has length {phi.shape[0]}, model expects {mlp.cond_dim}")
        self.mlp = mlp
        self.phi = phi
        first = mlp.hidden[0]
        self.first_weights = first.weights[:, :2]
        self.first_biases = first.biases + first.weights[:, 2:] @ phi

    def folded_mlp(self) -> Mlp:
        """An unconditioned network equal to this slice."""
        first = Layer(self.first_weights.copy(), self.first_biases.copy())
        rest = [Layer(l.weights.copy(), l.biases.copy()) for l in self.mlp.hidden[1:]]
        out = Layer(self.mlp.output.weights.copy(), self.mlp.output.biases.copy())
        return Mlp([first, *rest], out, self.mlp.activation, 0)

    def forward_batch(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=np.float64)
        act = self.mlp.activation
        a = act(xy @ self.first_weights.T + self.first_biases)
        for layer in self.mlp.hidden[1:]:
            a = act(a @ layer.weights.T + layer.biases)
        out = self.mlp.output
        return a @ out.weights.T + out.biases

    def forward(self, x: float, y: float) -> np.ndarray:
        return self.forward_batch(np.array([[x, y]]))[0]

    __call__ = forward


def forward(slice: ConditionedSlice, x: float, y: float) -> np.ndarray:
    return slice.forward(x, y)


def first_layer_lines(slice: ConditionedSlice) -> list[AffineFn2]:
    w, b = slice.first_weights, slice.first_biases
    return [AffineFn2(float(w[i, 0]), float(w[i, 1]), float(b[i])) for i in range(len(b))]


# -- training ---------------------------------------------------------------


@dataclass
class TrainConfig:
    epochs: int = 5000
    batch_size: int = 4096
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 42

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")


def loss_and_grads(mlp: Mlp, inputs: np.ndarray, targets: np.ndarray):
    """MSE over all samples and channels, and its gradient per parameter.

    Gradients come back in ``mlp.parameters()`` order.
    """
    act = mlp.activation
    a = np.asarray(inputs, dtype=np.float64)
    acts, pre = [a], []
    for layer in mlp.hidden:
        z = a @ layer.weights.T + layer.biases
        a = act(z)
        pre.append(z)
        acts.append(a)
    y = a @ mlp.output.weights.T + mlp.output.biases
    t = np.asarray(targets, dtype=np.float64).reshape(y.shape)
    r = y - t
    loss = float(np.mean(r * r))

    d = 2.0 * r / r.size
    grads = [d.T @ acts[-1], d.sum(axis=0)]
    da = d @ mlp.output.weights
    for i in range(mlp.depth - 1, -1, -1):
        dz = da * act.derivative(pre[i])
        grads = [dz.T @ acts[i], dz.sum(axis=0), *grads]
        if i:
            da = dz @ mlp.hidden[i].weights
    return loss, grads


Target = Callable[[np.ndarray], np.ndarray]


def train(mlp: Mlp, target: Target | tuple[np.ndarray, np.ndarray], cfg: TrainConfig):
    """Fit ``mlp`` to ``target`` with Adam on the MSE loss.

    ``target`` is either a vectorized callable mapping ``(n, input_dim)``
    inputs to ``(n, K)`` (or ``(n,)``) values, queried on fresh uniform
    samples every epoch, or an ``(inputs, values)`` table sampled with
    replacement. Returns a trained copy and the per-epoch loss trace.
    """
    model = mlp.copy()
    rng = np.random.default_rng(cfg.seed)
    if callable(target):
        def batch():
            x = rng.random((cfg.batch_size, model.input_dim))
            return x, target(x)
    else:
        tab_x = np.asarray(target[0], dtype=np.float64)
        tab_y = np.asarray(target[1], dtype=np.float64).reshape(len(tab_x), -1)
        if tab_x.shape[1] != model.input_dim or tab_y.shape[1] != model.n_outputs:
            raise DimensionMismatch("training table does not match the model's dimensions")

        def batch():
            idx = rng.integers(0, len(tab_x), cfg.batch_size)
            return tab_x[idx], tab_y[idx]

    params = model.parameters()
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    losses = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        x, t = batch()
        loss, grads = loss_and_grads(model, x, t)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss} at epoch {epoch}")
        losses[epoch] = loss
        step = epoch + 1
        lr = cfg.learning_rate * np.sqrt(1 - b2**step) / (1 - b1**step)
        for p, g, mi, vi in zip(params, grads, m, v):
            mi *= b1
            mi += (1 - b1) * g
            vi *= b2
            vi += (1 - b2) * g * g
            p -= lr * mi / (np.sqrt(vi) + cfg.adam_eps)
    return model, losses


# -- serialization ----------------------------------------------------------


def model_to_dict(mlp: Mlp) -> dict:
    return {
        "activation": mlp.activation.kind,
        "negative_slope": mlp.activation.negative_slope,
        "input_dim": mlp.input_dim,
        "cond_dim": mlp.cond_dim,
        "hidden": [{"weights": l.weights.tolist(), "biases": l.biases.tolist()} for l in mlp.hidden],
        "output": {"weights": mlp.output.weights.tolist(), "biases": mlp.output.biases.tolist()},
    }


def save_model(mlp: Mlp) -> str:
    return json.dumps(model_to_dict(mlp), indent=1)


def _layer_from(doc, fan_in, where):
    if not isinstance(doc, dict) or "weights" not in doc or "biases" not in doc:
        raise SchemaError(f"{where} needs 'weights' and 'biases'")
    try:
        b = np.asarray(doc["biases"], dtype=np.float64)
        w = np.asarray(doc["weights"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: non-numeric values ({exc})") from None
    if b.ndim != 1:
        raise SchemaError(f"{where}: biases must be a flat list")
    if w.size != b.size * fan_in:
        raise SchemaError(f"{where}: expected {b.size}x{fan_in} weights, got {w.size} values")
    return Layer(w.reshape(b.size, fan_in), b)


def model_from_dict(doc: dict) -> Mlp:
    if not isinstance(doc, dict):
        raise SchemaError("model document must be an object")
    required = ("activation", "negative_slope", "input_dim", "cond_dim", "hidden", "output")
    missing = [k for k in required if k not in doc]
    if missing:
        raise SchemaError(f"missing fields: {', '.join(missing)}")
    if doc["activation"] not in ACTIVATIONS:
        raise UnsupportedActivation(f"unsupported activation {doc['activation']!r}")
    try:
        activation = ActivationSpec(doc["activation"], float(doc["negative_slope"]))
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    cond_dim = doc["cond_dim"]
    if not isinstance(cond_dim, int) or cond_dim < 0 or doc["input_dim"] != 2 + cond_dim:
        raise SchemaError("input_dim must equal 2 + cond_dim")
    if not isinstance(doc["hidden"], list) or not doc["hidden"]:
        raise SchemaError("'hidden' must be a non-empty list")
    hidden = []
    fan_in = doc["input_dim"]
    for i, ld in enumerate(doc["hidden"]):
        layer = _layer_from(ld, fan_in, f"hidden[{i}]")
        if layer.biases.size > MASK_CAPACITY:
            raise MaskOverflow(
                f"hidden width {layer.biases.size} exceeds mask capacity {MASK_CAPACITY}")
        hidden.append(layer)
        fan_in = layer.biases.size
    output = _layer_from(doc["output"], fan_in, "output")
    return Mlp(hidden, output, activation, cond_dim)


def load_model(blob: str) -> Mlp:
    try:
        doc = json.loads(blob)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return model_from_dict(doc)
