"""
Core numerics for ActBench.

Activation kernels and their derivatives, the dense network with its
optimizers, and synthetic workload generation.
"""

from .activations import (
    ActivationKind,
    ActivationParams,
    EvalMode,
    FunctionGroup,
    apply,
    apply_traced,
    derivative,
    ordered_kinds,
)
from .network import DenseNetwork, LossKind, NetworkConfig, backward, forward, init_network
from .optim import OptimizerKind, create_optimizer, optimizer_step
from .workload import Workload, generate, load_workload, save_workload

__all__ = [
    "ActivationKind",
    "ActivationParams",
    "EvalMode",
    "FunctionGroup",
    "apply",
    "apply_traced",
    "derivative",
    "ordered_kinds",
    "DenseNetwork",
    "LossKind",
    "NetworkConfig",
    "backward",
    "forward",
    "init_network",
    "OptimizerKind",
    "create_optimizer",
    "optimizer_step",
    "Workload",
    "generate",
    "load_workload",
    "save_workload",
]
