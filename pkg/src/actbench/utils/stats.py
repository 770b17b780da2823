"""
Summary statistics for repeated timings.
"""

from typing import Sequence

import numpy as np


def shifted_mean(values: Sequence[float]) -> float:
    """Mean computed relative to the first value.

    Identical inputs return that value exactly, which plain summation
    does not guarantee for every float.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return float("nan")
    anchor = arr[0]
    return float(anchor + np.mean(arr - anchor))


def sample_sd(values: Sequence[float]) -> float:
    """Sample standard deviation (ddof=1); 0.0 for fewer than two values."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        return 0.0
    return float(np.std(arr - arr[0], ddof=1))

