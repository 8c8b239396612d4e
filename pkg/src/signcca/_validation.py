"""Input validation helpers shared by the estimators, solver, and harness."""

from __future__ import annotations

import numpy as np


def as_float_matrix(x, name: str = "X", min_rows: int = 1) -> np.ndarray:
    """Coerce to a 2-D float64 array with finite entries and at least ``min_rows`` rows."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got ndim={arr.ndim}")
    if arr.shape[0] < min_rows:
        raise ValueError(f"{name} needs at least {min_rows} rows, got {arr.shape[0]}")
    if arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one column")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_float_vector(x, name: str = "v") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_split_col(p: int, split_col: int) -> int:
    """Validate that ``split_col`` strictly partitions ``p`` columns into two views."""
    split_col = int(split_col)
    if not 0 < split_col < p:
        raise ValueError(f"split_col must satisfy 0 < split_col < {p}, got {split_col}")
    return split_col


def check_square(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def check_symmetric(a, name: str = "matrix", tol: float = 1e-8) -> np.ndarray:
    arr = check_square(a, name)
    if not np.allclose(arr, arr.T, atol=tol, rtol=0.0):
        raise ValueError(f"{name} is not symmetric within {tol}")
    return arr


def check_paired_rows(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[0] != y.shape[0]:
        raise ValueError(
            f"the two views must have the same number of rows, got {x.shape[0]} and {y.shape[0]}"
        )
