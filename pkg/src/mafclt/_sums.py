"""Compensated summation helpers.

Partial sums of heavy-tailed series mix magnitudes across many orders, so
running sums are accumulated with Kahan compensation instead of plain
``np.cumsum``.
"""

from __future__ import annotations

import math

import numpy as np


def kahan_cumsum(values) -> np.ndarray:
    """Running sums of `values` with Kahan-compensated accumulation."""
    arr = np.asarray(values, dtype=np.float64)
    out = np.empty(arr.shape, dtype=np.float64)
    total = 0.0
    comp = 0.0
    for i, v in enumerate(arr):
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
        out[i] = total
    return out


def exact_sum(values) -> float:
    """Correctly rounded sum (thin wrapper over math.fsum)."""
    return math.fsum(np.asarray(values, dtype=np.float64))
