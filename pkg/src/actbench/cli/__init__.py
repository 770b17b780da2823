"""
Command-line interface for ActBench.

This module provides the ``actbench`` command with its benchmark,
analysis and cost-model subcommands.
"""

from .main import main

__all__ = ["main"]
