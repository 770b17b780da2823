"""
Inference timing harness.

For every function and workload size the harness builds the network, makes
one untimed warm-up pass and then times ``runs`` forward passes over the
whole workload. Only the forward pass sits between the two clock reads;
workload generation and model construction happen beforehand. A workload
larger than the memory cap is streamed when a batch size is set: each batch
is generated outside the measured section and its forward time added to
the run total. Sizes are swept in ascending order and a function's
remaining larger sizes are skipped, with explicit markers, once the time
budget expires or a workload cannot be allocated.
"""

import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..config import DEFAULT_MEMORY_CAP_BYTES, default_platform_label
from ..core.activations import ActivationKind, EvalMode
from ..core.network import DenseNetwork, NetworkConfig, forward, init_network, pretrain_random
from ..core.workload import (
    Workload,
    estimate_bytes,
    generate,
    iter_chunks,
    load_workload,
    save_workload,
    workload_file_name,
)
from ..utils.error_handling import (
    FILE_ERROR_MAPPING,
    BudgetExceededError,
    ConsistencyError,
    SchemaError,
    handle_errors,
)
from ..utils.file_utils import ensure_directory
from ..utils.logging_config import get_logger, log_operation
from ..utils.stats import sample_sd, shifted_mean
from ..utils.validation import require_valid, validate_bench_plan

logger = get_logger(__name__)

Clock = Callable[[], float]
ProgressCallback = Callable[[int, int, str], None]

RECORD_COLUMNS = [
    "function", "group", "platform", "device", "n", "run", "elapsed_s", "per_instance_s",
]
AGGREGATE_COLUMNS = [
    "function", "group", "platform", "device", "n", "runs",
    "mean_elapsed_s", "sd_elapsed_s", "mean_per_instance_s", "sd_per_instance_s",
]

DEFAULT_EXPONENTS = tuple(range(0, 7))
ONE_DAY_SECONDS = 24 * 60 * 60.0

# At most one measured section in flight per process
_MEASUREMENT_LOCK = threading.Lock()


@contextmanager
def measurement_section() -> Iterator[None]:
    """Hold the process-wide lock around a measured section."""
    with _MEASUREMENT_LOCK:
        yield


@dataclass
class TimingRecord:
    """One wall-clock measurement of a forward pass."""

    function: ActivationKind
    platform_label: str
    device: str
    size_exponent: int
    run_index: int
    elapsed_seconds: float
    per_instance_seconds: float = field(default=float("nan"))

    def __post_init__(self):
        self.function = ActivationKind.parse(self.function)
        if np.isnan(self.per_instance_seconds):
            self.per_instance_seconds = self.elapsed_seconds / 10 ** self.size_exponent

    def to_dict(self) -> Dict[str, Any]:
        return {
            "function": self.function.value,
            "group": self.function.group.value,
            "platform": self.platform_label,
            "device": self.device,
            "n": self.size_exponent,
            "run": self.run_index,
            "elapsed_s": self.elapsed_seconds,
            "per_instance_s": self.per_instance_seconds,
        }


@dataclass
class SkipMarker:
    """A (function, n, run) measurement that was deliberately not taken."""

    function: ActivationKind
    size_exponent: int
    run_index: int
    reason: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "function": self.function.value,
            "n": self.size_exponent,
            "run": self.run_index,
            "reason": self.reason,
        }


@dataclass
class BenchPlan:
    """What to sweep and how."""

    functions: Sequence[ActivationKind]
    exponents: Sequence[int] = DEFAULT_EXPONENTS
    runs: int = 3
    time_budget_seconds: float = ONE_DAY_SECONDS
    pretrain_epochs: int = 0
    seed: int = 0
    batch_size: Optional[int] = None
    platform_label: str = field(default_factory=default_platform_label)
    device: str = "cpu"
    memory_cap_bytes: int = DEFAULT_MEMORY_CAP_BYTES
    workload_dir: Optional[Path] = None

    def __post_init__(self):
        if self.workload_dir is not None:
            self.workload_dir = Path(self.workload_dir)
        kinds = [ActivationKind.parse(f) for f in self.functions]
        self.functions = tuple(dict.fromkeys(kinds))
        self.exponents = tuple(sorted(set(self.exponents)))
        require_valid(validate_bench_plan(self), "bench_plan", self)

    @property
    def expected_records(self) -> int:
        return len(self.functions) * len(self.exponents) * self.runs

    def to_dict(self) -> Dict[str, Any]:
        return {
            "functions": [f.value for f in self.functions],
            "exponents": list(self.exponents),
            "runs": self.runs,
            "time_budget_seconds": self.time_budget_seconds,
            "pretrain_epochs": self.pretrain_epochs,
            "seed": self.seed,
            "batch_size": self.batch_size,
            "platform": self.platform_label,
            "device": self.device,
            "memory_cap_bytes": self.memory_cap_bytes,
            "workload_dir": None if self.workload_dir is None else str(self.workload_dir),
        }


@dataclass
class BenchReport:
    plan: BenchPlan
    records: List[TimingRecord] = field(default_factory=list)
    skipped: List[SkipMarker] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.skipped

    def to_frame(self) -> pd.DataFrame:
        return records_to_frame(self.records)


def _run_forward(net: DenseNetwork, data: np.ndarray, batch_size: Optional[int]) -> None:
    if batch_size is None or batch_size >= data.shape[0]:
        forward(net, data, EvalMode.EVAL)
        return
    for start in range(0, data.shape[0], batch_size):
        forward(net, data[start:start + batch_size], EvalMode.EVAL)


def timed_forward(
    net: DenseNetwork,
    data: np.ndarray,
    clock: Clock = time.perf_counter,
    batch_size: Optional[int] = None,
) -> float:
    """Seconds spent in one forward pass; the clock is read exactly twice."""
    with measurement_section():
        start = clock()
        _run_forward(net, data, batch_size)
        end = clock()
    return max(end - start, 0.0)


def timed_streamed_forward(
    net: DenseNetwork,
    workload: Workload,
    clock: Clock = time.perf_counter,
    batch_size: int = 1,
) -> float:
    """
    Seconds spent in forward passes over a workload generated chunk by chunk.

    Each chunk of ``batch_size`` rows is produced outside the measured
    section; the clock is read twice per chunk and the chunk times summed.
    """
    total = 0.0
    for chunk in iter_chunks(workload, batch_size):
        with measurement_section():
            start = clock()
            forward(net, chunk, EvalMode.EVAL)
            end = clock()
        total += max(end - start, 0.0)
    return total


def _streams(plan: BenchPlan, workload: Workload) -> bool:
    return plan.batch_size is not None and estimate_bytes(workload) > plan.memory_cap_bytes


def _prepare_workload(plan: BenchPlan, workload: Workload) -> Optional[np.ndarray]:
    """
    Materialise ``workload``, or return None when it will be streamed.

    Streaming needs one batch to fit under the memory cap. With a workload
    directory, a persisted copy is loaded when present and written otherwise.
    """
    if _streams(plan, workload):
        batch_bytes = estimate_bytes(workload) // workload.instances * plan.batch_size
        if batch_bytes > plan.memory_cap_bytes:
            raise BudgetExceededError(
                batch_bytes, plan.memory_cap_bytes, f"batch of {plan.batch_size} rows"
            )
        logger.info(
            f"Streaming workload n={workload.size_exponent} in batches of {plan.batch_size}"
        )
        return None

    if plan.workload_dir is None:
        return generate(workload, memory_cap_bytes=plan.memory_cap_bytes)

    path = ensure_directory(plan.workload_dir) / workload_file_name(workload)
    if not path.exists():
        data = generate(workload, memory_cap_bytes=plan.memory_cap_bytes)
        save_workload(path, workload, data)
        logger.info(f"Saved workload n={workload.size_exponent} to {path}")
        return data

    needed = estimate_bytes(workload)
    if needed > plan.memory_cap_bytes:
        raise BudgetExceededError(
            needed, plan.memory_cap_bytes, f"workload n={workload.size_exponent}"
        )
    data = load_workload(path)
    if data.shape != workload.shape:
        raise ConsistencyError(f"{path} holds shape {data.shape}, expected {workload.shape}")
    logger.info(f"Reusing workload n={workload.size_exponent} from {path}")
    return data.astype(workload.dtype, copy=False)


def _skip_remaining(
    report: BenchReport, function: ActivationKind, exponents: Sequence[int],
    first_run: int, reason: str,
) -> None:
    for index, n in enumerate(exponents):
        start = first_run if index == 0 else 0
        for run in range(start, report.plan.runs):
            report.skipped.append(SkipMarker(function, n, run, reason))


@log_operation("inference benchmark")
def run_inference_bench(
    plan: BenchPlan,
    config: NetworkConfig,
    clock: Clock = time.perf_counter,
    budget_clock: Clock = time.monotonic,
    progress_callback: Optional[ProgressCallback] = None,
) -> BenchReport:
    """
    Time forward inference for every (function, n, run) in ``plan``.

    ``config`` supplies the topology; its hidden activation is replaced by
    each planned function and its seed by the plan seed. Dropout layers run
    in EVAL mode. Returns records plus skip markers for anything not measured.
    """
    report = BenchReport(plan)
    deadline = budget_clock() + plan.time_budget_seconds
    exponents = list(plan.exponents)
    total = len(plan.functions) * len(exponents)
    done = 0

    for function in plan.functions:
        net = init_network(replace(config, hidden_activation=function, seed=plan.seed))
        if plan.pretrain_epochs:
            net = pretrain_random(net, plan.pretrain_epochs, np.random.default_rng(plan.seed))
        logger.info(f"Benchmarking {function.value}", extra={"function_name": function.value})

        for position, n in enumerate(exponents):
            if budget_clock() >= deadline:
                reason = "time budget expired"
                logger.warning(f"{function.value}: {reason}; skipping n >= {n}")
                _skip_remaining(report, function, exponents[position:], 0, reason)
                done += len(exponents) - position
                break

            workload = Workload(n, config.input_dim, seed=plan.seed, dtype=config.dtype)
            try:
                data = _prepare_workload(plan, workload)
            except (BudgetExceededError, MemoryError) as e:
                reason = f"allocation failed: {e}"
                logger.warning(f"{function.value} n={n}: {reason}; skipping n >= {n}")
                _skip_remaining(report, function, exponents[position:], 0, reason)
                done += len(exponents) - position
                break

            stopped = False
            try:
                # warm-up, untimed
                if data is None:
                    forward(net, next(iter_chunks(workload, plan.batch_size)), EvalMode.EVAL)
                else:
                    _run_forward(net, data, plan.batch_size)
                for run in range(plan.runs):
                    if budget_clock() >= deadline:
                        reason = "time budget expired"
                        logger.warning(f"{function.value}: {reason} at n={n} run {run}")
                        _skip_remaining(report, function, exponents[position:], run, reason)
                        stopped = True
                        break
                    if data is None:
                        elapsed = timed_streamed_forward(net, workload, clock, plan.batch_size)
                    else:
                        elapsed = timed_forward(net, data, clock, plan.batch_size)
                    report.records.append(
                        TimingRecord(function, plan.platform_label, plan.device, n, run, elapsed)
                    )
                    logger.debug(
                        f"{function.value} n={n} run {run}: {elapsed:.6g}s",
                        extra={"function_name": function.value, "size_exponent": n,
                               "run_index": run},
                    )
            except MemoryError as e:
                reason = f"allocation failed: {e}"
                measured = sum(
                    1 for r in report.records if r.function is function and r.size_exponent == n
                )
                _skip_remaining(report, function, exponents[position:], measured, reason)
                stopped = True
            finally:
                del data

            if stopped:
                done += len(exponents) - position
                break

            done += 1
            if progress_callback:
                progress_callback(done, total, f"{function.value} n={n}")

    if report.skipped:
        logger.warning(f"{len(report.skipped)} measurement(s) skipped")
    return report


def records_to_frame(records: Sequence[TimingRecord]) -> pd.DataFrame:
    """Records in the CSV schema, one row per run."""
    return pd.DataFrame([r.to_dict() for r in records], columns=RECORD_COLUMNS)


def aggregate(records: Union[Sequence[TimingRecord], pd.DataFrame]) -> pd.DataFrame:
    """
    Mean and sample standard deviation per (function, platform, device, n).

    The sd is 0 for a single run. Keys with no records do not appear.
    """
    frame = records if isinstance(records, pd.DataFrame) else records_to_frame(records)
    if frame.empty:
        return pd.DataFrame(columns=AGGREGATE_COLUMNS)

    grouped = frame.groupby(["function", "group", "platform", "device", "n"], sort=False)
    result = grouped.agg(
        runs=("run", "count"),
        mean_elapsed_s=("elapsed_s", shifted_mean),
        sd_elapsed_s=("elapsed_s", sample_sd),
        mean_per_instance_s=("per_instance_s", shifted_mean),
        sd_per_instance_s=("per_instance_s", sample_sd),
    ).reset_index()
    return result[AGGREGATE_COLUMNS]


@handle_errors(error_mapping=FILE_ERROR_MAPPING)
def write_records_csv(records: Sequence[TimingRecord], path: Union[str, Path]) -> Path:
    path = Path(path)
    records_to_frame(records).to_csv(path, index=False)
    return path


@handle_errors(error_mapping=FILE_ERROR_MAPPING)
def read_records_csv(path: Union[str, Path]) -> List[TimingRecord]:
    """Read a CSV written by ``write_records_csv``."""
    frame = pd.read_csv(path, float_precision="round_trip")
    return frame_to_records(frame, source=str(path))


def frame_to_records(frame: pd.DataFrame, source: str = "input") -> List[TimingRecord]:
    missing = [c for c in RECORD_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(missing, source)
    return [
        TimingRecord(
            function=row["function"],
            platform_label=str(row["platform"]),
            device=str(row["device"]),
            size_exponent=int(row["n"]),
            run_index=int(row["run"]),
            elapsed_seconds=float(row["elapsed_s"]),
            per_instance_seconds=float(row["per_instance_s"]),
        )
        for row in frame.to_dict("records")
    ]


def report_to_json(report: BenchReport) -> Dict[str, Any]:
    """JSON-ready view of a report: plan, aggregates, raw records and skips."""
    summary = aggregate(report.records)
    return {
        "plan": report.plan.to_dict(),
        "complete": report.complete,
        "aggregate": summary.to_dict("records"),
        "records": [r.to_dict() for r in report.records],
        "skipped": [s.to_dict() for s in report.skipped],
        "note": "CPU timings; no host-device transfer is involved",
    }
