"""
Activation, dropout and identity kernels.

Every benchmarked function has a forward implementation and a derivative.
Elementwise kinds return the Jacobian diagonal; the softmax family reduces
over the last (feature) axis and returns the full row Jacobian. Dropout
layers and RReLU depend on EvalMode: in EVAL they are deterministic and the
dropouts are exact pass-throughs.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy import special

from ..utils.error_handling import ValidationError


class FunctionGroup(str, Enum):
    """Partition used for spread statistics and table layout."""
    ACTIVATION = "Activation"
    DROPOUT = "Dropout"
    IDENTITY = "IdentityGroup"


class EvalMode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


class ActivationKind(str, Enum):
    """The 26 benchmarked functions, declared in table row order."""

    CELU = "CELU"
    ELU = "ELU"
    GELU = "GELU"
    HARDSHRINK = "Hardshrink"
    HARDTANH = "Hardtanh"
    LEAKY_RELU = "LeakyReLU"
    LOG_SIGMOID = "LogSigmoid"
    LOG_SOFTMAX = "LogSoftmax"
    PRELU = "PReLU"
    RRELU = "RReLU"
    RELU = "ReLU"
    RELU6 = "ReLU6"
    SELU = "SELU"
    SIGMOID = "Sigmoid"
    SOFTMAX = "Softmax"
    SOFTMIN = "Softmin"
    SOFTPLUS = "Softplus"
    SOFTSHRINK = "Softshrink"
    SOFTSIGN = "Softsign"
    TANH = "Tanh"
    TANHSHRINK = "Tanhshrink"
    ALPHA_DROPOUT = "AlphaDropout"
    DROPOUT = "Dropout"
    DROPOUT2D = "Dropout2d"
    DROPOUT3D = "Dropout3d"
    IDENTITY = "Identity"

    def __str__(self) -> str:
        return self.value

    @property
    def group(self) -> FunctionGroup:
        if self in _DROPOUT_KINDS:
            return FunctionGroup.DROPOUT
        if self is ActivationKind.IDENTITY:
            return FunctionGroup.IDENTITY
        return FunctionGroup.ACTIVATION

    @property
    def is_row_wise(self) -> bool:
        """True for the softmax family, which reduces over the feature axis."""
        return self in _ROW_WISE_KINDS

    @property
    def is_stochastic(self) -> bool:
        """True for kinds that draw random numbers in TRAIN mode."""
        return self in _DROPOUT_KINDS or self is ActivationKind.RRELU

    @classmethod
    def parse(cls, name: Union[str, "ActivationKind"]) -> "ActivationKind":
        """Case-insensitive lookup by function name."""
        if isinstance(name, ActivationKind):
            return name
        key = str(name).strip().lower()
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        valid = ", ".join(kind.value for kind in cls)
        raise ValidationError(
            "function",
            name,
            f"Unknown activation function '{name}'. Valid names: {valid}",
            user_message=f"Choose one of: {valid}",
        )


_DROPOUT_KINDS = frozenset(
    {
        ActivationKind.ALPHA_DROPOUT,
        ActivationKind.DROPOUT,
        ActivationKind.DROPOUT2D,
        ActivationKind.DROPOUT3D,
    }
)
_ROW_WISE_KINDS = frozenset(
    {ActivationKind.SOFTMAX, ActivationKind.SOFTMIN, ActivationKind.LOG_SOFTMAX}
)

# Negative saturation magnitude of SELU (scale * alpha), used by AlphaDropout
ALPHA_DROPOUT_SATURATION = 1.7580993408473766


def ordered_kinds() -> Tuple[ActivationKind, ...]:
    """All kinds in table row order: activations, dropouts, identity."""
    return tuple(ActivationKind)


def kinds_in_group(group: FunctionGroup) -> Tuple[ActivationKind, ...]:
    return tuple(kind for kind in ActivationKind if kind.group is group)


@dataclass(frozen=True)
class ActivationParams:
    """Fixed hyperparameters, defaulting to the common framework values."""

    elu_alpha: float = 1.0
    celu_alpha: float = 1.0
    leaky_slope: float = 0.01
    shrink_lambda: float = 0.5
    hardtanh_min: float = -1.0
    hardtanh_max: float = 1.0
    relu6_cap: float = 6.0
    prelu_weight: float = 0.25
    selu_alpha: float = 1.6732632423543772
    selu_scale: float = 1.0507009873554805
    rrelu_lower: float = 1.0 / 8.0
    rrelu_upper: float = 1.0 / 3.0
    dropout_p: float = 0.5
    softplus_beta: float = 1.0
    softplus_threshold: float = 20.0

    def __post_init__(self):
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValidationError("dropout_p", self.dropout_p, "dropout_p must lie in [0, 1)")
        if self.rrelu_lower > self.rrelu_upper:
            raise ValidationError(
                "rrelu_bounds",
                (self.rrelu_lower, self.rrelu_upper),
                "RReLU lower bound exceeds upper bound",
            )
        if self.hardtanh_min >= self.hardtanh_max:
            raise ValidationError(
                "hardtanh_bounds", (self.hardtanh_min, self.hardtanh_max),
                "Hardtanh min must be below max",
            )
        if self.shrink_lambda < 0:
            raise ValidationError("shrink_lambda", self.shrink_lambda, "lambda must be >= 0")
        if self.celu_alpha == 0:
            raise ValidationError("celu_alpha", self.celu_alpha, "CELU alpha must be nonzero")
        if self.softplus_beta <= 0:
            raise ValidationError("softplus_beta", self.softplus_beta, "beta must be positive")
        if self.relu6_cap <= 0:
            raise ValidationError("relu6_cap", self.relu6_cap, "cap must be positive")


DEFAULT_PARAMS = ActivationParams()

ElementwiseFn = Callable[[np.ndarray, ActivationParams], np.ndarray]


def eval_slope(params: ActivationParams = DEFAULT_PARAMS) -> float:
    """Negative-side slope RReLU uses in EVAL mode: the midpoint of its bounds."""
    return (params.rrelu_lower + params.rrelu_upper) / 2.0


def _as_float_array(x) -> np.ndarray:
    arr = np.asarray(x)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float64)
    return arr


def _cast(values, like: np.ndarray) -> np.ndarray:
    return np.asarray(values).astype(like.dtype, copy=False)


# Forward kernels ----------------------------------------------------------

def _softplus(x: np.ndarray, p: ActivationParams) -> np.ndarray:
    bx = p.softplus_beta * x
    stable = (np.maximum(bx, 0) + np.log1p(np.exp(-np.abs(bx)))) / p.softplus_beta
    return np.where(bx > p.softplus_threshold, x, stable)


def _log_sigmoid(x: np.ndarray, p: ActivationParams) -> np.ndarray:
    return np.minimum(x, 0) - np.log1p(np.exp(-np.abs(x)))


def _elu_like(x: np.ndarray, alpha: float, inner_scale: float = 1.0) -> np.ndarray:
    negative = alpha * np.expm1(np.minimum(x, 0) / inner_scale)
    return np.where(x > 0, x, negative)


def _leaky(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


_FORWARD: Dict[ActivationKind, ElementwiseFn] = {
    ActivationKind.CELU: lambda x, p: _elu_like(x, p.celu_alpha, p.celu_alpha),
    ActivationKind.ELU: lambda x, p: _elu_like(x, p.elu_alpha),
    ActivationKind.GELU: lambda x, p: x * 0.5 * (1.0 + special.erf(x / math.sqrt(2.0))),
    ActivationKind.HARDSHRINK: lambda x, p: np.where(np.abs(x) <= p.shrink_lambda, 0, x),
    ActivationKind.HARDTANH: lambda x, p: np.clip(x, p.hardtanh_min, p.hardtanh_max),
    ActivationKind.LEAKY_RELU: lambda x, p: _leaky(x, p.leaky_slope),
    ActivationKind.LOG_SIGMOID: _log_sigmoid,
    ActivationKind.PRELU: lambda x, p: _leaky(x, p.prelu_weight),
    ActivationKind.RRELU: lambda x, p: _leaky(x, eval_slope(p)),
    ActivationKind.RELU: lambda x, p: np.maximum(x, 0),
    ActivationKind.RELU6: lambda x, p: np.clip(x, 0, p.relu6_cap),
    ActivationKind.SELU: lambda x, p: p.selu_scale * _elu_like(x, p.selu_alpha),
    ActivationKind.SIGMOID: lambda x, p: special.expit(x),
    ActivationKind.SOFTMAX: lambda x, p: special.softmax(x, axis=-1),
    ActivationKind.SOFTMIN: lambda x, p: special.softmax(-x, axis=-1),
    ActivationKind.LOG_SOFTMAX: lambda x, p: special.log_softmax(x, axis=-1),
    ActivationKind.SOFTPLUS: _softplus,
    ActivationKind.SOFTSHRINK: lambda x, p: np.where(
        np.abs(x) <= p.shrink_lambda, 0, x - np.sign(x) * p.shrink_lambda
    ),
    ActivationKind.SOFTSIGN: lambda x, p: x / (1 + np.abs(x)),
    ActivationKind.TANH: lambda x, p: np.tanh(x),
    ActivationKind.TANHSHRINK: lambda x, p: x - np.tanh(x),
}


# Elementwise derivatives (right-hand derivative at kinks) --------------------

def _elu_like_grad(x: np.ndarray, alpha: float, inner_scale: float = 1.0) -> np.ndarray:
    negative = (alpha / inner_scale) * np.exp(np.minimum(x, 0) / inner_scale)
    return np.where(x >= 0, 1.0, negative)


def _softplus_grad(x: np.ndarray, p: ActivationParams) -> np.ndarray:
    bx = p.softplus_beta * x
    return np.where(bx > p.softplus_threshold, 1.0, special.expit(bx))


_DERIVATIVE: Dict[ActivationKind, ElementwiseFn] = {
    ActivationKind.CELU: lambda x, p: _elu_like_grad(x, p.celu_alpha, p.celu_alpha),
    ActivationKind.ELU: lambda x, p: _elu_like_grad(x, p.elu_alpha),
    ActivationKind.GELU: lambda x, p: special.ndtr(x) + x * np.exp(-0.5 * x * x)
    / math.sqrt(2.0 * math.pi),
    ActivationKind.HARDSHRINK: lambda x, p: np.where(
        (x >= p.shrink_lambda) | (x < -p.shrink_lambda), 1.0, 0.0
    ),
    ActivationKind.HARDTANH: lambda x, p: np.where(
        (x >= p.hardtanh_min) & (x < p.hardtanh_max), 1.0, 0.0
    ),
    ActivationKind.LEAKY_RELU: lambda x, p: np.where(x >= 0, 1.0, p.leaky_slope),
    ActivationKind.LOG_SIGMOID: lambda x, p: special.expit(-x),
    ActivationKind.PRELU: lambda x, p: np.where(x >= 0, 1.0, p.prelu_weight),
    ActivationKind.RRELU: lambda x, p: np.where(x >= 0, 1.0, eval_slope(p)),
    ActivationKind.RELU: lambda x, p: np.where(x >= 0, 1.0, 0.0),
    ActivationKind.RELU6: lambda x, p: np.where((x >= 0) & (x < p.relu6_cap), 1.0, 0.0),
    ActivationKind.SELU: lambda x, p: p.selu_scale * _elu_like_grad(x, p.selu_alpha),
    ActivationKind.SIGMOID: lambda x, p: special.expit(x) * special.expit(-x),
    ActivationKind.SOFTPLUS: _softplus_grad,
    ActivationKind.SOFTSHRINK: lambda x, p: np.where(
        (x >= p.shrink_lambda) | (x < -p.shrink_lambda), 1.0, 0.0
    ),
    ActivationKind.SOFTSIGN: lambda x, p: 1.0 / np.square(1 + np.abs(x)),
    ActivationKind.TANH: lambda x, p: 1.0 - np.square(np.tanh(x)),
    ActivationKind.TANHSHRINK: lambda x, p: np.square(np.tanh(x)),
}


def _softmax_jacobian(y: np.ndarray) -> np.ndarray:
    # J[..., i, j] = y_i (delta_ij - y_j)
    return y[..., :, None] * (np.eye(y.shape[-1], dtype=y.dtype) - y[..., None, :])


def kinks(kind: ActivationKind, params: ActivationParams = DEFAULT_PARAMS) -> Tuple[float, ...]:
    """Points where the kind is not differentiable."""
    kind = ActivationKind.parse(kind)
    if kind in (
        ActivationKind.RELU,
        ActivationKind.LEAKY_RELU,
        ActivationKind.PRELU,
        ActivationKind.RRELU,
        ActivationKind.SELU,
    ):
        return (0.0,)
    if kind is ActivationKind.RELU6:
        return (0.0, params.relu6_cap)
    if kind is ActivationKind.HARDTANH:
        return (params.hardtanh_min, params.hardtanh_max)
    if kind in (ActivationKind.HARDSHRINK, ActivationKind.SOFTSHRINK):
        return (-params.shrink_lambda, params.shrink_lambda)
    if kind is ActivationKind.ELU and params.elu_alpha != 1.0:
        return (0.0,)
    return ()


def _require_rng(kind: ActivationKind, rng: Optional[np.random.Generator]) -> np.random.Generator:
    if rng is None:
        raise ValidationError(
            "rng", None, f"{kind.value} in train mode needs a seeded random generator"
        )
    return rng


def _check_row_wise(kind: ActivationKind, x: np.ndarray) -> None:
    if x.ndim < 1 or x.shape[-1] < 1:
        raise ValidationError(
            "input", x.shape, f"{kind.value} needs at least one feature column"
        )


@dataclass(eq=False)
class ActivationTrace:
    """Output of a forward application plus what the backward pass needs."""

    kind: ActivationKind
    input: np.ndarray
    output: np.ndarray
    params: ActivationParams = DEFAULT_PARAMS
    local_grad: Optional[np.ndarray] = field(default=None, repr=False)

    def vjp(self, upstream) -> np.ndarray:
        """Vector-Jacobian product: gradient with respect to the input."""
        g = np.asarray(upstream)
        if g.shape != self.output.shape:
            raise ValidationError(
                "upstream", g.shape, f"upstream gradient shape {g.shape} != {self.output.shape}"
            )
        y = self.output
        if self.kind is ActivationKind.SOFTMAX:
            return y * (g - np.sum(g * y, axis=-1, keepdims=True))
        if self.kind is ActivationKind.SOFTMIN:
            return -y * (g - np.sum(g * y, axis=-1, keepdims=True))
        if self.kind is ActivationKind.LOG_SOFTMAX:
            return g - np.exp(y) * np.sum(g, axis=-1, keepdims=True)
        if self.local_grad is None:
            self.local_grad = derivative(self.kind, self.input, self.params)
        return g * self.local_grad


def apply_traced(
    kind: ActivationKind,
    x,
    mode: EvalMode = EvalMode.EVAL,
    rng: Optional[np.random.Generator] = None,
    params: ActivationParams = DEFAULT_PARAMS,
) -> ActivationTrace:
    """Apply a kind and keep the state needed for backpropagation."""
    kind = ActivationKind.parse(kind)
    x = _as_float_array(x)
    mode = EvalMode(mode)

    if kind is ActivationKind.IDENTITY:
        return ActivationTrace(kind, x, x, params, np.ones((), dtype=x.dtype))

    if kind in _DROPOUT_KINDS:
        if mode is EvalMode.EVAL or params.dropout_p == 0.0:
            return ActivationTrace(kind, x, x, params, np.ones((), dtype=x.dtype))
        rng = _require_rng(kind, rng)
        p = params.dropout_p
        # Dropout2d/3d see every feature of a flat layer as its own channel
        keep = rng.random(x.shape) >= p
        if kind is ActivationKind.ALPHA_DROPOUT:
            alpha = ALPHA_DROPOUT_SATURATION
            a = 1.0 / math.sqrt((alpha * alpha * p + 1.0) * (1.0 - p))
            out = a * (np.where(keep, x, 0) - alpha * (~keep)) + alpha * a * p
            return ActivationTrace(kind, x, _cast(out, x), params, _cast(a * keep, x))
        scale = _cast(keep / (1.0 - p), x)
        return ActivationTrace(kind, x, x * scale, params, scale)

    if kind is ActivationKind.RRELU and mode is EvalMode.TRAIN:
        rng = _require_rng(kind, rng)
        slopes = rng.uniform(params.rrelu_lower, params.rrelu_upper, size=x.shape)
        local = _cast(np.where(x >= 0, 1.0, slopes), x)
        return ActivationTrace(kind, x, x * local, params, local)

    if kind.is_row_wise:
        _check_row_wise(kind, x)
    out = _FORWARD[kind](x, params)
    return ActivationTrace(kind, x, _cast(out, x), params)


def apply(
    kind: ActivationKind,
    x,
    mode: EvalMode = EvalMode.EVAL,
    rng: Optional[np.random.Generator] = None,
    params: ActivationParams = DEFAULT_PARAMS,
) -> np.ndarray:
    """
    Apply an activation, dropout or identity function.

    Output has the shape of ``x``. Identity, and every dropout in EVAL mode,
    return ``x`` itself. NaN inputs propagate. Stochastic kinds in TRAIN
    mode require ``rng`` and are deterministic given its seed.
    """
    return apply_traced(kind, x, mode, rng, params).output


def derivative(
    kind: ActivationKind,
    x,
    params: ActivationParams = DEFAULT_PARAMS,
) -> np.ndarray:
    """
    Derivative of the EVAL-mode function.

    Elementwise kinds return the Jacobian diagonal with the shape of ``x``.
    The softmax family returns one ``d x d`` Jacobian per row, shape
    ``x.shape + (d,)``. Exactly at a kink the right-hand derivative is
    returned.
    """
    kind = ActivationKind.parse(kind)
    x = _as_float_array(x)

    if kind is ActivationKind.IDENTITY or kind in _DROPOUT_KINDS:
        return np.ones_like(x)
    if kind is ActivationKind.SOFTMAX:
        _check_row_wise(kind, x)
        return _softmax_jacobian(special.softmax(x, axis=-1))
    if kind is ActivationKind.SOFTMIN:
        _check_row_wise(kind, x)
        return -_softmax_jacobian(special.softmax(-x, axis=-1))
    if kind is ActivationKind.LOG_SOFTMAX:
        _check_row_wise(kind, x)
        s = special.softmax(x, axis=-1)
        eye = np.eye(x.shape[-1], dtype=x.dtype)
        return eye - np.broadcast_to(s[..., None, :], x.shape + (x.shape[-1],))
    return _cast(_DERIVATIVE[kind](x, params), x)
