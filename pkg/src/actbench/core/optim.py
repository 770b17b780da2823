"""
Adam and SGD parameter updates.

Steps are pure: they return new parameter arrays and a new state and leave
their inputs untouched.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..utils.error_handling import DivergenceError, ShapeMismatchError, ValidationError

DEFAULT_LEARNING_RATES = {"adam": 1e-3, "sgd": 0.01}


class OptimizerKind(str, Enum):
    ADAM = "adam"
    SGD = "sgd"


@dataclass
class OptimizerState:
    """Hyperparameters and per-parameter accumulators of an optimizer."""

    kind: OptimizerKind
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: List[np.ndarray] = field(default_factory=list, repr=False)
    second_moment: List[np.ndarray] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.kind = OptimizerKind(self.kind)
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate", self.learning_rate, "learning rate must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValidationError("betas", (self.beta1, self.beta2), "betas must lie in [0, 1)")
        if self.step_count < 0:
            raise ValidationError("step_count", self.step_count)


def create_optimizer(
    kind: OptimizerKind,
    params: Sequence[np.ndarray],
    learning_rate: Optional[float] = None,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> OptimizerState:
    """Fresh optimizer state; Adam moments start at zero."""
    kind = OptimizerKind(kind)
    lr = DEFAULT_LEARNING_RATES[kind.value] if learning_rate is None else learning_rate
    state = OptimizerState(kind, lr, beta1, beta2, epsilon)
    if kind is OptimizerKind.ADAM:
        state.first_moment = [np.zeros_like(p) for p in params]
        state.second_moment = [np.zeros_like(p) for p in params]
    return state


def optimizer_step(
    state: OptimizerState,
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
) -> Tuple[List[np.ndarray], OptimizerState]:
    """
    Apply one update.

    SGD: theta <- theta - lr * g. Adam: bias-corrected first and second
    moment estimates. A non-finite gradient raises DivergenceError.
    """
    if len(params) != len(grads):
        raise ShapeMismatchError("gradients", len(params), len(grads))
    for index, (p, g) in enumerate(zip(params, grads)):
        if np.shape(p) != np.shape(g):
            raise ShapeMismatchError(f"gradient[{index}]", np.shape(p), np.shape(g))
        if not np.all(np.isfinite(g)):
            raise DivergenceError("optimizer step", detail=f"non-finite gradient for parameter {index}")

    lr = state.learning_rate
    if state.kind is OptimizerKind.SGD:
        new_params = [p - (lr * g).astype(p.dtype, copy=False) for p, g in zip(params, grads)]
        return new_params, replace(state, step_count=state.step_count + 1)

    first = state.first_moment or [np.zeros_like(p) for p in params]
    second = state.second_moment or [np.zeros_like(p) for p in params]
    if len(first) != len(params) or len(second) != len(params):
        raise ShapeMismatchError("moments", len(params), (len(first), len(second)))
    for index, (p, m, v) in enumerate(zip(params, first, second)):
        if m.shape != np.shape(p):
            raise ShapeMismatchError(f"first_moment[{index}]", np.shape(p), m.shape)
        if v.shape != np.shape(p):
            raise ShapeMismatchError(f"second_moment[{index}]", np.shape(p), v.shape)

    t = state.step_count + 1
    b1, b2, eps = state.beta1, state.beta2, state.epsilon
    correction1 = 1.0 - b1**t
    correction2 = 1.0 - b2**t

    new_params, new_first, new_second = [], [], []
    for p, g, m, v in zip(params, grads, first, second):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * np.square(g)
        update = lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
        new_params.append(p - update.astype(p.dtype, copy=False))
        new_first.append(m)
        new_second.append(v)

    new_state = replace(
        state, step_count=t, first_moment=new_first, second_moment=new_second
    )
    return new_params, new_state
