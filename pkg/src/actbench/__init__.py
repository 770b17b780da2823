"""
ActBench - Activation Function Benchmarking Lab

Measures what activation functions cost: forward-inference time across
workload sizes, time-to-accuracy on a digit classifier, and micro-op
totals of hand-written instruction listings. Ships the published timing
tables so the analysis can be reproduced without hardware.
"""

__version__ = "1.0.0"
__author__ = "ActBench Team"
__license__ = "MIT"
__description__ = "Activation function benchmarking lab"

# Import main classes for easy access
from .core.activations import ActivationKind, FunctionGroup, apply, derivative
from .core.network import NetworkConfig, backward, forward, init_network
from .bench.harness import BenchPlan, run_inference_bench
from .bench.analysis import TimingTable, group_spread, load_fixture, relative_to_identity
from .costmodel.tally import CostTable, micro_op_total
from .utils.error_handling import ActBenchError
from .utils.logging_config import get_logger, setup_logging

# Package metadata
__all__ = [
    "__version__",
    "__author__",
    "__license__",
    "__description__",
    "ActivationKind",
    "FunctionGroup",
    "apply",
    "derivative",
    "NetworkConfig",
    "init_network",
    "forward",
    "backward",
    "BenchPlan",
    "run_inference_bench",
    "TimingTable",
    "load_fixture",
    "group_spread",
    "relative_to_identity",
    "CostTable",
    "micro_op_total",
    "ActBenchError",
    "get_logger",
    "setup_logging",
]
