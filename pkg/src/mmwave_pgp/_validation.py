"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

import math

import numpy as np


def check_channel(H, name: str = "H", min_rows: int = 1, min_cols: int = 1) -> np.ndarray:
    """Return ``H`` as a finite complex 2-D array.

    Real input is promoted to complex. 1-D input is read as a single row.
    """
    H = np.asarray(H)
    if H.dtype == object or not (np.issubdtype(H.dtype, np.number)):
        raise TypeError(f"{name} must be numeric, got dtype {H.dtype}")
    if H.ndim == 1:
        H = H[None, :]
    if H.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {H.shape}")
    if H.shape[0] < min_rows or H.shape[1] < min_cols:
        raise ValueError(
            f"{name} needs at least {min_rows} rows and {min_cols} columns, got {H.shape}"
        )
    H = H.astype(complex, copy=False)
    if not np.all(np.isfinite(H)):
        raise ValueError(f"{name} contains NaN or inf")
    return H


def check_positive(x, name: str) -> float:
    x = float(x)
    if not (math.isfinite(x) and x > 0):
        raise ValueError(f"{name} must be positive and finite, got {x}")
    return x


def check_symbols(X, width: int, name: str = "X") -> np.ndarray:
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != width:
        raise ValueError(f"{name} must have {width} columns, got shape {X.shape}")
    return X.astype(complex, copy=False)
