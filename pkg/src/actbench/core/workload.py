"""
Random inference workloads of 10**n instances.

Values are i.i.d. uniform on the open interval (-1, 1) and fully determined
by the descriptor's seed. Generation always runs chunk by chunk from one
generator, so a streamed workload matches a materialised one exactly.
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from ..config import DEFAULT_MEMORY_CAP_BYTES
from ..utils.error_handling import (
    BudgetExceededError,
    ConsistencyError,
    IdxFormatError,
    TruncatedFileError,
    ValidationError,
    handle_errors,
    FILE_ERROR_MAPPING,
)
from ..utils.logging_config import get_logger
from ..utils.validation import require_valid, validate_exponent

logger = get_logger(__name__)

DEFAULT_CHUNK_ROWS = 1 << 16

# Persisted layout: magic, then little-endian uint32 version, n, dim
WORKLOAD_MAGIC = b"ABWL"
WORKLOAD_VERSION = 1
_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class Workload:
    size_exponent: int
    input_dim: int = 64
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        require_valid(validate_exponent(self.size_exponent), "size_exponent", self.size_exponent)
        if self.input_dim < 1:
            raise ValidationError("input_dim", self.input_dim, "input_dim must be >= 1")
        if np.dtype(self.dtype) not in (np.dtype(np.float32), np.dtype(np.float64)):
            raise ValidationError("dtype", self.dtype, "workloads are float32 or float64")

    @property
    def instances(self) -> int:
        return 10 ** self.size_exponent

    @property
    def shape(self):
        return (self.instances, self.input_dim)


def workload_file_name(workload: Workload) -> str:
    """File name a persisted workload is stored under; the seed is part of the name."""
    return f"workload-n{workload.size_exponent}-d{workload.input_dim}-s{workload.seed}.abwl"


def estimate_bytes(workload: Workload) -> int:
    """Bytes needed to hold the generated matrix."""
    return workload.instances * workload.input_dim * np.dtype(workload.dtype).itemsize


def _fill(rng: np.random.Generator, out: np.ndarray) -> None:
    rng.random(out=out, dtype=out.dtype)
    out *= 2
    out -= 1
    low = np.nextafter(out.dtype.type(-1), out.dtype.type(0))
    high = np.nextafter(out.dtype.type(1), out.dtype.type(0))
    np.clip(out, low, high, out=out)


def iter_chunks(workload: Workload, chunk_rows: int = DEFAULT_CHUNK_ROWS) -> Iterator[np.ndarray]:
    """Yield the workload in consecutive row blocks without materialising it."""
    if chunk_rows < 1:
        raise ValidationError("chunk_rows", chunk_rows, "chunk_rows must be >= 1")
    rng = np.random.default_rng(workload.seed)
    dtype = np.dtype(workload.dtype)
    for start in range(0, workload.instances, chunk_rows):
        rows = min(chunk_rows, workload.instances - start)
        block = np.empty((rows, workload.input_dim), dtype=dtype)
        _fill(rng, block)
        yield block


def generate(
    workload: Workload,
    memory_cap_bytes: int = DEFAULT_MEMORY_CAP_BYTES,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
) -> np.ndarray:
    """
    Materialise the ``[10**n x input_dim]`` matrix.

    Raises BudgetExceededError, naming the cap, when the matrix would not fit
    in ``memory_cap_bytes``.
    """
    needed = estimate_bytes(workload)
    if needed > memory_cap_bytes:
        raise BudgetExceededError(needed, memory_cap_bytes, f"workload n={workload.size_exponent}")

    data = np.empty(workload.shape, dtype=np.dtype(workload.dtype))
    rng = np.random.default_rng(workload.seed)
    for start in range(0, workload.instances, chunk_rows):
        _fill(rng, data[start:start + chunk_rows])

    logger.debug(
        f"Generated workload n={workload.size_exponent} ({needed / 2**20:.1f} MiB)",
        extra={"size_exponent": workload.size_exponent},
    )
    return data


@handle_errors(error_mapping=FILE_ERROR_MAPPING)
def save_workload(path: Union[str, Path], workload: Workload, data=None) -> Path:
    """
    Persist a workload as a 16-byte header followed by little-endian float32 rows.

    When ``data`` is omitted the workload is streamed from its seed.
    """
    path = Path(path)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(WORKLOAD_MAGIC, WORKLOAD_VERSION, workload.size_exponent,
                             workload.input_dim))
        if data is None:
            for block in iter_chunks(workload):
                f.write(block.astype("<f4").tobytes())
        else:
            data = np.asarray(data)
            if data.shape != workload.shape:
                raise ConsistencyError(
                    f"data shape {data.shape} does not match workload {workload.shape}"
                )
            f.write(data.astype("<f4").tobytes())
    return path


@handle_errors(error_mapping=FILE_ERROR_MAPPING)
def load_workload(path: Union[str, Path]) -> np.ndarray:
    """Read a persisted workload back as a float32 matrix."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncatedFileError(str(path), _HEADER.size, len(raw))

    magic, version, n, dim = _HEADER.unpack_from(raw)
    if magic != WORKLOAD_MAGIC:
        raise IdxFormatError(
            str(path), int.from_bytes(WORKLOAD_MAGIC, "big"), int.from_bytes(magic, "big"),
            kind="workload",
        )
    if version != WORKLOAD_VERSION:
        raise ConsistencyError(f"unsupported workload version {version} in {path}")
    require_valid(validate_exponent(n), "size_exponent", n)

    rows = 10 ** n
    expected = _HEADER.size + rows * dim * 4
    if len(raw) < expected:
        raise TruncatedFileError(str(path), expected, len(raw))

    data = np.frombuffer(raw, dtype="<f4", count=rows * dim, offset=_HEADER.size)
    return data.reshape(rows, dim).astype(np.float32)
