"""
Runtime configuration.
"""

import os
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

from .utils.error_handling import ConfigurationError

GIB = 2**30
DEFAULT_MEMORY_CAP_BYTES = 8 * GIB


def default_platform_label() -> str:
    """Host description used when no platform label is configured."""
    system = platform.system() or "unknown"
    machine = platform.machine() or "unknown"
    return f"{system}-{machine}".lower()


def _env_float(name: str) -> Optional[float]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = float(raw)
    except ValueError:
        raise ConfigurationError(name, raw, f"{name} must be a number, got {raw!r}")
    if value <= 0:
        raise ConfigurationError(name, raw, f"{name} must be positive, got {raw!r}")
    return value


@dataclass
class ActBenchConfig:
    """Configuration settings for benchmark runs."""

    platform_label: str = field(default_factory=default_platform_label)
    device: str = "cpu"

    # Workload generation
    memory_cap_bytes: int = DEFAULT_MEMORY_CAP_BYTES

    # Outputs
    output_dir: Path = Path("results")

    # Logging
    log_level: Optional[str] = None
    log_dir: Optional[Path] = None

    def __post_init__(self):
        # Override from environment
        if os.getenv("ACTBENCH_PLATFORM"):
            self.platform_label = os.environ["ACTBENCH_PLATFORM"]

        if os.getenv("ACTBENCH_DEVICE"):
            self.device = os.environ["ACTBENCH_DEVICE"]

        cap_gib = _env_float("ACTBENCH_MEMORY_CAP_GIB")
        if cap_gib is not None:
            self.memory_cap_bytes = int(cap_gib * GIB)

        if os.getenv("ACTBENCH_OUTPUT_DIR"):
            self.output_dir = Path(os.environ["ACTBENCH_OUTPUT_DIR"])

        if os.getenv("ACTBENCH_LOG_LEVEL"):
            self.log_level = os.environ["ACTBENCH_LOG_LEVEL"].upper()

        if os.getenv("ACTBENCH_LOG_DIR"):
            self.log_dir = Path(os.environ["ACTBENCH_LOG_DIR"])

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["output_dir"] = str(self.output_dir)
        data["log_dir"] = None if self.log_dir is None else str(self.log_dir)
        return data


def load_config() -> ActBenchConfig:
    """Build a configuration from defaults and the environment."""
    return ActBenchConfig()
