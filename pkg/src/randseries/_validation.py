"""Input validation helpers shared by the public functions and estimators."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_lower_triangular(table, name="table", allow_complex=True):
    """Validate a square lower-triangular table and return it as an ndarray.

    Complex input is kept complex; everything else is cast to float64.
    """
    arr = np.asarray(table)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square 2-d array, got shape {arr.shape}")
    if np.iscomplexobj(arr):
        if not allow_complex:
            raise ValueError(f"{name} must be real")
        arr = arr.astype(np.complex128)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} contains NaN or infinity")
    else:
        arr = check_array(arr, dtype=np.float64, ensure_min_samples=1,
                          ensure_min_features=1, input_name=name)
    upper = np.triu(arr, k=1)
    if np.any(upper != 0):
        i, j = np.argwhere(upper != 0)[0]
        raise ValueError(
            f"{name} is not lower-triangular: entry ({i + 1},{j + 1}) is nonzero")
    return arr


def check_symmetric_matrix(matrix, name="covariance", atol=0.0):
    arr = check_array(matrix, dtype=np.float64, input_name=name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    dev = np.abs(arr - arr.T)
    if dev.size and dev.max() > atol:
        i, j = np.unravel_index(np.argmax(dev), dev.shape)
        raise ValueError(f"{name} is not symmetric at ({i + 1},{j + 1})")
    return arr


def as_innovation_array(Z, N=None, name="Z"):
    """Return innovations as an ``(n, d)`` float array.

    One-dimensional input is read as scalar innovations (``d = 1``).
    """
    arr = np.asarray(Z, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-d or 2-d, got {arr.ndim}-d")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinity")
    if N is not None and arr.shape[0] < N:
        raise ValueError(f"{name} has {arr.shape[0]} innovations, need at least {N}")
    return arr
