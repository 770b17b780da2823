"""
MNIST ingestion and the train-to-threshold experiment.

A run trains with mini-batch SGD until the first epoch whose validation
accuracy exceeds the threshold, or until ``max_epochs``. Only forward,
backward and update time is accumulated: the clock is read around each
training step and never around validation.
"""

import struct
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..core.activations import ActivationKind, EvalMode
from ..core.network import (
    DenseNetwork,
    LossKind,
    NetworkConfig,
    backward,
    forward,
    init_network,
)
from ..core.optim import OptimizerKind, create_optimizer, optimizer_step
from ..utils.error_handling import (
    FILE_ERROR_MAPPING,
    ConsistencyError,
    DivergenceError,
    FileProcessingError,
    IdxFormatError,
    TruncatedFileError,
    ValidationError,
    handle_errors,
)
from ..utils.file_utils import read_maybe_gzip
from ..utils.logging_config import get_logger, log_operation
from ..utils.stats import sample_sd, shifted_mean
from .harness import measurement_section

logger = get_logger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
IMAGE_SIDE = 28
NUM_CLASSES = 10

RUN_COLUMNS = ["function", "run", "epochs", "reached", "seconds"]
SUMMARY_COLUMNS = ["function", "mean_s", "sd_s", "failed"]

Clock = Callable[[], float]


@dataclass(eq=False)
class LabeledDataset:
    """Images flattened to 784 features in [0, 1] with digit labels."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 2 or self.labels.ndim != 1:
            raise ValidationError("dataset", (self.images.shape, self.labels.shape),
                                  "images must be [m x d] and labels [m]")
        if self.images.shape[0] != self.labels.shape[0]:
            raise ConsistencyError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )
        if self.images.size and (self.images.min() < 0 or self.images.max() > 1):
            raise ValidationError("images", "out of range", "pixel values must lie in [0, 1]")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= NUM_CLASSES):
            raise ValidationError("labels", "out of range", "labels must lie in 0..9")

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def take(self, indices) -> "LabeledDataset":
        return LabeledDataset(self.images[indices], self.labels[indices])

    def subset(self, limit: Optional[int]) -> "LabeledDataset":
        """First ``limit`` examples (all when None)."""
        if limit is None or limit >= len(self):
            return self
        if limit < 0:
            raise ValidationError("limit", limit, "limit must be >= 0")
        return LabeledDataset(self.images[:limit], self.labels[:limit])

    def split(self, validation_size: int, rng: np.random.Generator
              ) -> Tuple["LabeledDataset", "LabeledDataset"]:
        """Shuffle with ``rng``, then hold out the last ``validation_size`` examples."""
        if not 0 < validation_size < len(self):
            raise ValidationError(
                "validation_size", validation_size,
                f"validation_size must lie in (0, {len(self)}) for {len(self)} examples",
            )
        order = rng.permutation(len(self))
        cut = len(self) - validation_size
        return self.take(order[:cut]), self.take(order[cut:])


def one_hot(labels: np.ndarray, num_classes: int = NUM_CLASSES) -> np.ndarray:
    targets = np.zeros((labels.shape[0], num_classes))
    targets[np.arange(labels.shape[0]), labels] = 1.0
    return targets


# IDX ingestion ------------------------------------------------------------

def _read_idx(path: Path, expected_magic: int) -> Tuple[Tuple[int, ...], bytes]:
    raw = read_maybe_gzip(path)
    if len(raw) < 4:
        raise TruncatedFileError(str(path), 4, len(raw))
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise IdxFormatError(str(path), expected_magic, magic)

    ndims = magic & 0xFF
    header_size = 4 + 4 * ndims
    if len(raw) < header_size:
        raise TruncatedFileError(str(path), header_size, len(raw))
    dims = struct.unpack(f">{ndims}I", raw[4:header_size])

    payload = int(np.prod(dims, dtype=np.int64))
    if len(raw) < header_size + payload:
        raise TruncatedFileError(str(path), header_size + payload, len(raw))
    return tuple(int(d) for d in dims), raw[header_size:header_size + payload]


@handle_errors(error_mapping=FILE_ERROR_MAPPING)
def load_idx(images_path: Union[str, Path], labels_path: Union[str, Path]) -> LabeledDataset:
    """
    Parse a big-endian IDX image/label pair, optionally gzip-compressed.

    Images must be 28x28; they are flattened to 784 features and scaled by
    1/255.
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    image_dims, image_bytes = _read_idx(images_path, IMAGE_MAGIC)
    label_dims, label_bytes = _read_idx(labels_path, LABEL_MAGIC)

    if image_dims[1:] != (IMAGE_SIDE, IMAGE_SIDE):
        raise ConsistencyError(
            f"{images_path}: expected {IMAGE_SIDE}x{IMAGE_SIDE} images, found "
            f"{'x'.join(str(d) for d in image_dims[1:])}",
            context={"path": str(images_path), "dims": list(image_dims)},
        )
    if image_dims[0] != label_dims[0]:
        raise ConsistencyError(
            f"{images_path} holds {image_dims[0]} images but {labels_path} holds "
            f"{label_dims[0]} labels",
            context={"images": image_dims[0], "labels": label_dims[0]},
        )

    count = image_dims[0]
    pixels = np.frombuffer(image_bytes, dtype=np.uint8).reshape(count, IMAGE_SIDE * IMAGE_SIDE)
    labels = np.frombuffer(label_bytes, dtype=np.uint8).astype(np.int64)
    logger.info(f"Loaded {count} examples from {images_path.name}")
    return LabeledDataset(pixels.astype(np.float64) / 255.0, labels)


_IDX_NAMES = {
    "images": ("train-images-idx3-ubyte", "train-images.idx3-ubyte"),
    "labels": ("train-labels-idx1-ubyte", "train-labels.idx1-ubyte"),
}


def find_idx_pair(directory: Union[str, Path]) -> Tuple[Path, Path]:
    """Locate the MNIST training image and label files in ``directory``."""
    directory = Path(directory)
    found = {}
    for key, stems in _IDX_NAMES.items():
        for stem in stems:
            for suffix in ("", ".gz"):
                candidate = directory / f"{stem}{suffix}"
                if candidate.is_file():
                    found[key] = candidate
                    break
            if key in found:
                break
        if key not in found:
            raise FileProcessingError(
                str(directory / stems[0]), "find",
                FileNotFoundError(f"no {key} file ({' or '.join(stems)}[.gz]) in {directory}"),
            )
    return found["images"], found["labels"]


# Experiment ---------------------------------------------------------------

def accuracy(net: DenseNetwork, data: LabeledDataset, batch_size: int = 1000) -> float:
    """Fraction of examples whose highest output is the label; ties go to the lowest index."""
    if len(data) == 0:
        return 0.0
    correct = 0
    for start in range(0, len(data), batch_size):
        outputs = forward(net, data.images[start:start + batch_size], EvalMode.EVAL)
        correct += int(np.sum(np.argmax(outputs, axis=1) == data.labels[start:start + batch_size]))
    return correct / len(data)


@dataclass
class TrainRun:
    run_index: int
    epochs_used: int
    reached_target: bool
    train_seconds: float
    final_accuracy: float = 0.0
    failure_reason: Optional[str] = None


@dataclass
class TrainResult:
    """Outcome of all runs for one hidden activation."""

    function: ActivationKind
    runs: List[TrainRun] = field(default_factory=list)
    mean_seconds: float = 0.0
    sd_seconds: float = 0.0
    any_run_failed: bool = False

    @classmethod
    def from_runs(cls, function: ActivationKind, runs: List[TrainRun]) -> "TrainResult":
        seconds = [r.train_seconds for r in runs]
        return cls(
            function=function,
            runs=runs,
            mean_seconds=shifted_mean(seconds) if seconds else 0.0,
            sd_seconds=sample_sd(seconds),
            any_run_failed=any(not r.reached_target for r in runs),
        )


def _train_run(
    config: NetworkConfig,
    train: LabeledDataset,
    validation: LabeledDataset,
    run_index: int,
    threshold: float,
    max_epochs: int,
    batch_size: int,
    learning_rate: float,
    loss: LossKind,
    clock: Clock,
) -> TrainRun:
    seed = config.seed + run_index
    net = init_network(replace(config, seed=seed))
    rng = np.random.default_rng(seed)
    state = create_optimizer(OptimizerKind.SGD, net.parameters(), learning_rate=learning_rate)
    targets_all = one_hot(train.labels, config.output_dim)

    seconds = 0.0
    epochs_used = 0
    acc = 0.0
    for epoch in range(1, max_epochs + 1):
        order = rng.permutation(len(train))
        for start in range(0, len(train), batch_size):
            index = order[start:start + batch_size]
            inputs, targets = train.images[index], targets_all[index]
            try:
                with measurement_section():
                    began = clock()
                    grads, value = backward(net, inputs, targets, loss, EvalMode.TRAIN, rng)
                    if np.isfinite(value):
                        params, state = optimizer_step(state, net.parameters(), grads)
                        net = net.with_parameters(params)
                    ended = clock()
                seconds += ended - began
                if not np.isfinite(value):
                    raise DivergenceError("training", epoch, f"loss is {value}")
            except DivergenceError as e:
                logger.warning(f"{config.hidden_activation.value} run {run_index}: {e.message}")
                return TrainRun(run_index, epoch, False, seconds, acc, e.message)

        epochs_used = epoch
        acc = accuracy(net, validation)
        logger.debug(
            f"{config.hidden_activation.value} run {run_index} epoch {epoch}: "
            f"validation accuracy {acc:.4f}",
            extra={"epoch": epoch, "run_index": run_index},
        )
        if acc > threshold:
            return TrainRun(run_index, epochs_used, True, seconds, acc)

    return TrainRun(run_index, epochs_used, False, seconds, acc)


def train_to_threshold(
    config: NetworkConfig,
    data: LabeledDataset,
    threshold: float = 0.90,
    max_epochs: int = 100,
    runs: int = 3,
    validation_size: int = 10000,
    train_limit: Optional[int] = None,
    batch_size: int = 64,
    learning_rate: float = 0.01,
    loss: LossKind = LossKind.BCE,
    clock: Clock = time.perf_counter,
) -> TrainResult:
    """
    Run the train-to-threshold protocol ``runs`` times for one configuration.

    The split happens once, before any training: a seeded shuffle, then the
    last ``validation_size`` examples are held out. ``train_limit`` caps the
    training split. Run ``r`` uses seed ``config.seed + r``.
    """
    if max_epochs < 0 or runs < 1 or batch_size < 1:
        raise ValidationError(
            "train_settings", (max_epochs, runs, batch_size),
            "need max_epochs >= 0, runs >= 1 and batch_size >= 1",
        )
    if config.output_dim != NUM_CLASSES or config.input_dim != data.images.shape[1]:
        raise ValidationError(
            "network_config", (config.input_dim, config.output_dim),
            f"network must map {data.images.shape[1]} inputs to {NUM_CLASSES} outputs",
        )

    train, validation = data.split(validation_size, np.random.default_rng(config.seed))
    train = train.subset(train_limit)
    if len(train) == 0:
        raise ValidationError("train_limit", train_limit, "training split is empty")

    results = [
        _train_run(config, train, validation, r, threshold, max_epochs, batch_size,
                   learning_rate, LossKind(loss), clock)
        for r in range(runs)
    ]
    result = TrainResult.from_runs(config.hidden_activation, results)
    logger.info(
        f"{config.hidden_activation.value}: mean {result.mean_seconds:.3f}s, "
        f"failed={result.any_run_failed}",
        extra={"function_name": config.hidden_activation.value},
    )
    return result


@log_operation("training experiment")
def run_train_experiment(
    functions: Sequence[ActivationKind],
    data: LabeledDataset,
    base_config: Optional[NetworkConfig] = None,
    progress_callback: Optional[Callable[[int, int, str], None]] = None,
    **kwargs,
) -> List[TrainResult]:
    """Train-to-threshold for each hidden activation in turn."""
    base_config = base_config or NetworkConfig.mnist()
    results = []
    for index, function in enumerate(functions, start=1):
        config = replace(base_config, hidden_activation=ActivationKind.parse(function))
        results.append(train_to_threshold(config, data, **kwargs))
        if progress_callback:
            progress_callback(index, len(functions), config.hidden_activation.value)
    return results


def runs_to_frame(results: Sequence[TrainResult]) -> pd.DataFrame:
    rows = [
        {
            "function": result.function.value,
            "run": run.run_index,
            "epochs": run.epochs_used,
            "reached": run.reached_target,
            "seconds": run.train_seconds,
        }
        for result in results
        for run in result.runs
    ]
    return pd.DataFrame(rows, columns=RUN_COLUMNS)


def summary_to_frame(results: Sequence[TrainResult]) -> pd.DataFrame:
    rows = [
        {
            "function": result.function.value,
            "mean_s": result.mean_seconds,
            "sd_s": result.sd_seconds,
            "failed": result.any_run_failed,
        }
        for result in results
    ]
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


@handle_errors(error_mapping=FILE_ERROR_MAPPING)
def write_train_csvs(results: Sequence[TrainResult], out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Per-run CSV and per-function summary CSV."""
    out_dir = Path(out_dir)
    runs_path = out_dir / "train_runs.csv"
    summary_path = out_dir / "train_summary.csv"
    runs_to_frame(results).to_csv(runs_path, index=False)
    summary_to_frame(results).to_csv(summary_path, index=False)
    return {"runs": runs_path, "summary": summary_path}
