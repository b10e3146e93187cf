"""Unnormalised fast Walsh-Hadamard butterfly."""

import numpy as np


def is_power_of_two(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


def fwht(a: np.ndarray, axis: int = 0) -> np.ndarray:
    """Return ``H^{(x)n} a`` along ``axis`` without the ``2^{-n/2}`` factor.

    Entry ``w`` of the result is ``sum_x (-1)^{popcount(w & x)} a[x]``.
    Runs in ``O(n 2^n)`` per column.
    """
    a = np.asarray(a)
    # contiguous copy so the reshapes below are writable views
    a = np.array(np.moveaxis(a, axis, 0), dtype=np.result_type(a.dtype, np.float64), order="C")
    m = a.shape[0]
    if not is_power_of_two(m):
        raise ValueError(f"length {m} is not a power of two")
    rest = a.shape[1:]
    h = 1
    while h < m:
        v = a.reshape((m // (2 * h), 2, h) + rest)
        lo = v[:, 0].copy()
        hi = v[:, 1]
        v[:, 0] = lo + hi
        v[:, 1] = lo - hi
        h *= 2
    return np.moveaxis(a, 0, axis)
