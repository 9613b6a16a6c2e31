"""Tensor helpers: every engine array is a finite float64 numpy array."""

import numpy as np

from nilmkit.errors import DataError, ShapeError

DTYPE = np.float64


def as_tensor(data, name: str = "tensor") -> np.ndarray:
    """Convert to a float64 array and reject NaN/inf entries."""
    arr = np.asarray(data, dtype=DTYPE)
    if arr.size and not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


def require_ndim(arr: np.ndarray, ndim: int, name: str) -> None:
    """Raise ShapeError when an array has the wrong rank."""
    if arr.ndim != ndim:
        raise ShapeError(f"{name} has the wrong rank", "rank", ndim, arr.ndim)
