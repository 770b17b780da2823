"""
Dense feed-forward network: initialisation, forward pass, backpropagation
and random-data pre-training.

Topology: ``input_dim -> hidden_width``, then ``hidden_layers - 1`` further
``hidden_width -> hidden_width`` layers, then ``hidden_width -> output_dim``.
Hidden layers apply the hidden activation; the last layer is linear unless
an output activation is configured.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from ..utils.error_handling import DivergenceError, ShapeMismatchError, ValidationError
from ..utils.logging_config import get_logger
from ..utils.validation import require_valid, validate_network_config
from .activations import (
    DEFAULT_PARAMS,
    ActivationKind,
    ActivationParams,
    ActivationTrace,
    EvalMode,
    apply_traced,
)
from .optim import OptimizerKind, OptimizerState, create_optimizer, optimizer_step

logger = get_logger(__name__)

# Probabilities are clipped away from 0 and 1 when BCE is taken on outputs
_BCE_EPS = 1e-12


class LossKind(str, Enum):
    MSE = "mse"
    BCE = "bce"


@dataclass
class NetworkConfig:
    """Shape, activations and seed of a dense network."""

    input_dim: int = 64
    hidden_layers: int = 4
    hidden_width: int = 1024
    output_dim: int = 16
    hidden_activation: ActivationKind = ActivationKind.RELU
    output_activation: Optional[ActivationKind] = None
    seed: int = 0
    dtype: str = "float64"
    activation_params: ActivationParams = field(default=DEFAULT_PARAMS, repr=False)

    def __post_init__(self):
        self.hidden_activation = ActivationKind.parse(self.hidden_activation)
        if self.output_activation is not None:
            self.output_activation = ActivationKind.parse(self.output_activation)
        require_valid(validate_network_config(self), "network_config", self)
        if np.dtype(self.dtype).kind != "f":
            raise ValidationError("dtype", self.dtype, "network dtype must be a float type")

    @classmethod
    def benchmark(
        cls, activation: ActivationKind = ActivationKind.RELU, seed: int = 0, **overrides
    ) -> "NetworkConfig":
        """Inference benchmark preset: 64 -> 4 x 1024 -> 16, linear output, float32."""
        settings = dict(
            input_dim=64, hidden_layers=4, hidden_width=1024, output_dim=16, dtype="float32"
        )
        settings.update(overrides)
        return cls(hidden_activation=activation, seed=seed, **settings)

    @classmethod
    def mnist(
        cls, activation: ActivationKind = ActivationKind.RELU, seed: int = 0, **overrides
    ) -> "NetworkConfig":
        """Digit classifier preset: 784 -> 4 x 1024 -> 10 with sigmoid outputs."""
        settings = dict(
            input_dim=784,
            hidden_layers=4,
            hidden_width=1024,
            output_dim=10,
            output_activation=ActivationKind.SIGMOID,
        )
        settings.update(overrides)
        return cls(hidden_activation=activation, seed=seed, **settings)

    def layer_dims(self) -> List[Tuple[int, int]]:
        """(fan_in, fan_out) of every layer in order."""
        if self.hidden_layers == 0:
            return [(self.input_dim, self.output_dim)]
        dims = [(self.input_dim, self.hidden_width)]
        dims += [(self.hidden_width, self.hidden_width)] * (self.hidden_layers - 1)
        dims.append((self.hidden_width, self.output_dim))
        return dims


@dataclass(eq=False)
class DenseLayer:
    weights: np.ndarray  # [in x out]
    bias: np.ndarray  # [out]

    @property
    def in_dim(self) -> int:
        return int(self.weights.shape[0])

    @property
    def out_dim(self) -> int:
        return int(self.weights.shape[1])


@dataclass(eq=False)
class DenseNetwork:
    """Weights and biases of a dense network plus its activations."""

    layers: List[DenseLayer]
    hidden_activation: ActivationKind
    output_activation: Optional[ActivationKind] = None
    activation_params: ActivationParams = field(default=DEFAULT_PARAMS, repr=False)

    def __post_init__(self):
        if not self.layers:
            raise ValidationError("layers", self.layers, "a network needs at least one layer")
        for index, layer in enumerate(self.layers):
            if layer.weights.ndim != 2 or layer.bias.shape != (layer.out_dim,):
                raise ShapeMismatchError(
                    f"layer[{index}]", f"[in x out] weights and [{layer.out_dim}] bias",
                    (layer.weights.shape, layer.bias.shape),
                )
            if index > 0 and self.layers[index - 1].out_dim != layer.in_dim:
                raise ShapeMismatchError(
                    f"layer[{index}].in_dim", self.layers[index - 1].out_dim, layer.in_dim
                )

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def dtype(self) -> np.dtype:
        return self.layers[0].weights.dtype

    @property
    def parameter_count(self) -> int:
        return sum(layer.weights.size + layer.bias.size for layer in self.layers)

    def parameters(self) -> List[np.ndarray]:
        """Flat parameter list: W0, b0, W1, b1, ..."""
        params: List[np.ndarray] = []
        for layer in self.layers:
            params.extend((layer.weights, layer.bias))
        return params

    def with_parameters(self, params: Sequence[np.ndarray]) -> "DenseNetwork":
        """Copy of this network holding ``params`` (same order as ``parameters()``)."""
        if len(params) != 2 * len(self.layers):
            raise ShapeMismatchError("parameters", 2 * len(self.layers), len(params))
        layers = []
        for index, layer in enumerate(self.layers):
            w, b = params[2 * index], params[2 * index + 1]
            if w.shape != layer.weights.shape or b.shape != layer.bias.shape:
                raise ShapeMismatchError(
                    f"layer[{index}]", (layer.weights.shape, layer.bias.shape), (w.shape, b.shape)
                )
            layers.append(DenseLayer(w, b))
        return DenseNetwork(layers, self.hidden_activation, self.output_activation,
                            self.activation_params)

    def copy(self) -> "DenseNetwork":
        return self.with_parameters([p.copy() for p in self.parameters()])

    def is_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(p))) for p in self.parameters())


def init_network(config: NetworkConfig) -> DenseNetwork:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases from ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    dtype = np.dtype(config.dtype)
    layers = []
    for fan_in, fan_out in config.layer_dims():
        bound = 1.0 / np.sqrt(fan_in)
        weights = rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype)
        bias = rng.uniform(-bound, bound, size=fan_out).astype(dtype)
        layers.append(DenseLayer(weights, bias))

    logger.debug(
        f"Initialised {len(layers)}-layer network "
        f"({sum(w * b + b for w, b in config.layer_dims())} parameters, seed {config.seed})"
    )
    return DenseNetwork(layers, config.hidden_activation, config.output_activation,
                        config.activation_params)


def _check_batch(net: DenseNetwork, batch) -> np.ndarray:
    batch = np.asarray(batch)
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise ShapeMismatchError("batch", f"[n x {net.input_dim}]", batch.shape)
    if batch.dtype != net.dtype:
        batch = batch.astype(net.dtype)
    return batch


@dataclass(eq=False)
class _ForwardCache:
    inputs: List[np.ndarray]  # input of every layer
    hidden: List[ActivationTrace]
    logits: np.ndarray
    output_trace: Optional[ActivationTrace]
    output: np.ndarray


def _forward_cached(
    net: DenseNetwork,
    batch: np.ndarray,
    mode: EvalMode,
    rng: Optional[np.random.Generator],
) -> _ForwardCache:
    inputs = []
    hidden = []
    a = batch
    last = len(net.layers) - 1
    for index, layer in enumerate(net.layers):
        inputs.append(a)
        z = a @ layer.weights + layer.bias
        if index < last:
            trace = apply_traced(net.hidden_activation, z, mode, rng, net.activation_params)
            hidden.append(trace)
            a = trace.output
        else:
            logits = z

    output_trace = None
    output = logits
    if net.output_activation is not None:
        output_trace = apply_traced(net.output_activation, logits, mode, rng,
                                    net.activation_params)
        output = output_trace.output
    return _ForwardCache(inputs, hidden, logits, output_trace, output)


def forward(
    net: DenseNetwork,
    batch,
    mode: EvalMode = EvalMode.EVAL,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Output ``[n x output_dim]`` for a batch ``[n x input_dim]``."""
    batch = _check_batch(net, batch)
    a = batch
    last = len(net.layers) - 1
    for index, layer in enumerate(net.layers):
        a = a @ layer.weights + layer.bias
        if index < last:
            a = apply_traced(net.hidden_activation, a, mode, rng, net.activation_params).output
    if net.output_activation is not None:
        a = apply_traced(net.output_activation, a, mode, rng, net.activation_params).output
    return a


def _loss_and_output_grad(
    cache: _ForwardCache,
    targets: np.ndarray,
    loss: LossKind,
    output_activation: Optional[ActivationKind],
) -> Tuple[float, np.ndarray]:
    """Batch-mean loss and its gradient with respect to the final logits."""
    n = targets.shape[0]
    y = cache.output

    if loss is LossKind.MSE:
        diff = y - targets
        value = float(np.sum(np.square(diff)) / n)
        grad_y = 2.0 * diff / n
    elif output_activation is ActivationKind.SIGMOID:
        # Logit form of per-node BCE
        z = cache.logits
        per_node = np.maximum(z, 0) - targets * z + np.log1p(np.exp(-np.abs(z)))
        value = float(np.sum(per_node) / n)
        return value, (special.expit(z) - targets) / n
    else:
        p = np.clip(y, _BCE_EPS, 1.0 - _BCE_EPS)
        per_node = -(targets * np.log(p) + (1.0 - targets) * np.log1p(-p))
        value = float(np.sum(per_node) / n)
        grad_y = (p - targets) / (p * (1.0 - p)) / n

    if cache.output_trace is not None:
        return value, cache.output_trace.vjp(grad_y)
    return value, grad_y


def backward(
    net: DenseNetwork,
    batch,
    targets,
    loss: LossKind = LossKind.MSE,
    mode: EvalMode = EvalMode.EVAL,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[List[np.ndarray], float]:
    """
    Gradients of the batch-mean loss for every parameter, plus the loss.

    The per-instance loss is summed over output nodes. Gradients come back in
    ``net.parameters()`` order.
    """
    batch = _check_batch(net, batch)
    targets = np.asarray(targets)
    if targets.shape != (batch.shape[0], net.output_dim):
        raise ShapeMismatchError("targets", (batch.shape[0], net.output_dim), targets.shape)
    loss = LossKind(loss)

    cache = _forward_cached(net, batch, mode, rng)
    value, delta = _loss_and_output_grad(cache, targets, loss, net.output_activation)

    grads: List[np.ndarray] = [np.empty(0)] * (2 * len(net.layers))
    for index in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[index]
        grads[2 * index] = (cache.inputs[index].T @ delta).astype(net.dtype, copy=False)
        grads[2 * index + 1] = np.sum(delta, axis=0).astype(net.dtype, copy=False)
        if index > 0:
            delta = cache.hidden[index - 1].vjp(delta @ layer.weights.T)
    return grads, value


def pretrain_random(
    net: DenseNetwork,
    epochs: int,
    rng: np.random.Generator,
    batch_size: int = 64,
    loss: LossKind = LossKind.MSE,
    optimizer: Optional[OptimizerState] = None,
) -> DenseNetwork:
    """
    Train on freshly drawn uniform(-1, 1) inputs and targets, one Adam update
    per epoch. ``epochs=0`` returns the network unchanged.
    """
    if epochs < 0:
        raise ValidationError("epochs", epochs, "epochs must be >= 0")
    if batch_size < 1:
        raise ValidationError("batch_size", batch_size, "batch_size must be >= 1")
    if epochs == 0:
        return net

    state = optimizer or create_optimizer(OptimizerKind.ADAM, net.parameters())
    for epoch in range(epochs):
        inputs = rng.uniform(-1.0, 1.0, size=(batch_size, net.input_dim)).astype(net.dtype)
        targets = rng.uniform(-1.0, 1.0, size=(batch_size, net.output_dim)).astype(net.dtype)
        grads, value = backward(net, inputs, targets, loss, EvalMode.TRAIN, rng)
        if not np.isfinite(value):
            raise DivergenceError("random pre-training", epoch, f"loss is {value}")
        try:
            params, state = optimizer_step(state, net.parameters(), grads)
        except DivergenceError as e:
            raise DivergenceError("random pre-training", epoch, e.message) from e
        net = net.with_parameters(params)
        if not net.is_finite():
            raise DivergenceError("random pre-training", epoch, "non-finite parameters")
        if epoch % 500 == 0:
            logger.debug(f"pre-training epoch {epoch}: loss {value:.4g}", extra={"epoch": epoch})

    return net
