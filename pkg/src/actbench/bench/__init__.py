"""
Experiments: the inference timing harness, timing-table analysis and the
MNIST train-to-threshold run.
"""

from .analysis import TimingTable, emit_table, group_spread, load_fixture, relative_to_identity
from .harness import BenchPlan, BenchReport, TimingRecord, aggregate, run_inference_bench
from .mnist import LabeledDataset, load_idx, train_to_threshold

__all__ = [
    "TimingTable",
    "emit_table",
    "group_spread",
    "load_fixture",
    "relative_to_identity",
    "BenchPlan",
    "BenchReport",
    "TimingRecord",
    "aggregate",
    "run_inference_bench",
    "LabeledDataset",
    "load_idx",
    "train_to_threshold",
]
