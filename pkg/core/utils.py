"""Numeric helpers shared across modules."""
from __future__ import annotations

from typing import Sequence

import numpy as np


def relative_error(value: float, reference: float) -> float:
    """|value - reference| / |reference|, or the absolute error when reference is 0."""
    diff = abs(float(value) - float(reference))
    scale = abs(float(reference))
    if scale == 0.0:
        return diff
    return diff / scale


def within_relative(value: float, reference: float, tol: float) -> bool:
    return relative_error(value, reference) <= tol


def population_variance(values: Sequence[float]) -> float:
    """Two-pass population variance (divisor = len)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("population_variance needs at least one value")
    centered = arr - arr.mean()
    return float(np.mean(centered * centered))
