"""Small input-validation helpers used by the estimators."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, NonFiniteInputError


def as_float_matrix(x, *, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting NaN/inf."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionMismatchError(2, arr.ndim)
    if not np.isfinite(arr).all():
        raise NonFiniteInputError(f"{name} contains NaN or infinite values")
    return arr


def as_float_vector(y, *, name: str = "y") -> np.ndarray:
    arr = np.asarray(y, dtype=np.float64).ravel()
    if not np.isfinite(arr).all():
        raise NonFiniteInputError(f"{name} contains NaN or infinite values")
    return arr


def check_n_features(arr: np.ndarray, expected: int) -> np.ndarray:
    if arr.shape[1] != expected:
        raise DimensionMismatchError(expected, arr.shape[1])
    return arr
