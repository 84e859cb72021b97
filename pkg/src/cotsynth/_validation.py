"""Input coercion shared by the estimators and report functions."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .errors import DimensionMismatch, EmptyInput, LengthMismatch


def as_matrix(X, name: str = "X", min_samples: int = 1) -> np.ndarray:
    """2-D finite float array with at least ``min_samples`` rows."""
    if hasattr(X, "__len__") and len(X) == 0:
        raise EmptyInput(f"{name} is empty")
    try:
        return check_array(X, dtype=np.float64, ensure_min_samples=min_samples,
                           input_name=name)
    except ValueError as exc:
        if "Found array with 0" in str(exc) or "minimum of" in str(exc):
            raise EmptyInput(f"{name}: {exc}") from None
        raise DimensionMismatch(f"{name}: {exc}") from None


def as_vector(y, name: str = "y") -> np.ndarray:
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional")
    if arr.size == 0:
        raise EmptyInput(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch(f"{name} has non-finite values")
    return arr


def check_same_length(a, b, names=("a", "b")):
    if len(a) != len(b):
        raise LengthMismatch(f"{names[0]} has {len(a)} entries, {names[1]} has {len(b)}")
