"""
Pytest configuration and shared fixtures for ActBench tests.
"""

import gzip
import os
import struct
from pathlib import Path
from typing import Callable, Tuple

import numpy as np
import pytest

# Set test environment
os.environ["ENVIRONMENT"] = "testing"
os.environ["ACTBENCH_LOG_LEVEL"] = "WARNING"

# Import after setting environment
from actbench.core.activations import ActivationKind
from actbench.core.network import NetworkConfig, init_network


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so every test sees the same draws."""
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config() -> NetworkConfig:
    """A small float64 network: 5 -> 2 x 6 -> 3."""
    return NetworkConfig(
        input_dim=5,
        hidden_layers=2,
        hidden_width=6,
        output_dim=3,
        hidden_activation=ActivationKind.TANH,
        seed=7,
    )


@pytest.fixture
def tiny_network(tiny_config):
    return init_network(tiny_config)


@pytest.fixture
def counting_clock() -> Callable[[], float]:
    """A fake clock that advances by exactly 0.5 s on every read."""

    class CountingClock:
        def __init__(self):
            self.reads = 0

        def __call__(self) -> float:
            self.reads += 1
            return self.reads * 0.5

    return CountingClock()


def build_idx(magic: int, dims: Tuple[int, ...], payload: bytes) -> bytes:
    """Big-endian IDX bytes: magic, dimension sizes, then the raw payload."""
    return struct.pack(f">I{len(dims)}I", magic, *dims) + payload


@pytest.fixture
def idx_bytes():
    """Factory for raw IDX content."""
    return build_idx


@pytest.fixture
def mnist_dir(tmp_path) -> Path:
    """
    A tiny MNIST-format directory: 60 examples, six per digit, where digit
    ``k`` lights up image row ``2k``. Images are gzip-compressed.
    """
    count = 60
    labels = np.arange(count, dtype=np.uint8) % 10
    images = np.zeros((count, 28, 28), dtype=np.uint8)
    for index, label in enumerate(labels):
        images[index, 2 * int(label), :] = 255

    directory = tmp_path / "mnist"
    directory.mkdir()
    image_bytes = build_idx(0x803, (count, 28, 28), images.tobytes())
    (directory / "train-images-idx3-ubyte.gz").write_bytes(gzip.compress(image_bytes))
    (directory / "train-labels-idx1-ubyte").write_bytes(
        build_idx(0x801, (count,), labels.tobytes())
    )
    return directory


@pytest.fixture(autouse=True)
def isolate_environment(monkeypatch):
    """Keep host settings out of configuration-dependent tests."""
    for name in ("ACTBENCH_PLATFORM", "ACTBENCH_DEVICE", "ACTBENCH_MEMORY_CAP_GIB",
                 "ACTBENCH_OUTPUT_DIR", "ACTBENCH_LOG_DIR"):
        monkeypatch.delenv(name, raising=False)
    yield


# Pytest configuration
def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line("markers", "slow: marks tests as slow")
    config.addinivalue_line("markers", "integration: marks tests as integration tests")
    config.addinivalue_line("markers", "unit: marks tests as unit tests")


def pytest_collection_modifyitems(config, items):
    """Automatically mark tests based on their location."""
    for item in items:
        # Mark tests in integration folder
        if "integration" in str(item.fspath):
            item.add_marker(pytest.mark.integration)

        # Mark tests in unit folder
        if "unit" in str(item.fspath):
            item.add_marker(pytest.mark.unit)
