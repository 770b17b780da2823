"""
Utility functions for ActBench.

Logging, error types, validation, statistics and file helpers shared by
every command.
"""

from .error_handling import ActBenchError, ValidationError, handle_errors
from .logging_config import get_logger, setup_logging
from .stats import sample_sd, shifted_mean

__all__ = [
    "ActBenchError",
    "ValidationError",
    "handle_errors",
    "get_logger",
    "setup_logging",
    "sample_sd",
    "shifted_mean",
]
