"""Low-level numeric helpers shared by the distribution and metric modules."""

from __future__ import annotations

import math

import numpy as np


def stable_sum(a: np.ndarray) -> float:
    """Error-free sum of an array, accumulated in row-major order.

    ``math.fsum`` tracks all intermediate rounding, so the result is the
    correctly rounded sum and is reproducible bit for bit across runs,
    which keeps regression traces stable.
    """
    return math.fsum(np.ascontiguousarray(a, dtype=np.float64).ravel().tolist())


def readonly(a: np.ndarray) -> np.ndarray:
    """Return a float64 copy of `a` with the write flag cleared."""
    out = np.array(a, dtype=np.float64)
    out.setflags(write=False)
    return out
