"""Input checks shared by the estimators and the file readers."""

from __future__ import annotations

import numbers

import numpy as np

METRIC_NAMES = ("branch_mispredict_ratio", "l1i_mpki", "l1d_miss_ratio", "l2_miss_ratio")
# upper bound per metric column; l1i is misses per kilo-instruction
METRIC_MAX = np.array([1.0, 1000.0, 1.0, 1.0])


def check_metrics(X, *, copy: bool = False) -> np.ndarray:
    """Validate an (n_epochs, 4) metric matrix and return it as float64.

    Raises ``ValueError`` naming the first offending row.
    """
    arr = np.array(X, dtype=np.float64, copy=copy) if copy else np.asarray(X, dtype=np.float64)
    if arr.ndim == 1 and arr.shape[0] == 4:
        arr = arr.reshape(1, 4)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError(f"expected an array of shape (n_epochs, 4), got {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError("no epochs")
    bad = ~np.isfinite(arr) | (arr < 0.0) | (arr > METRIC_MAX)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise ValueError(
            f"row {row}: {METRIC_NAMES[col]}={arr[row, col]!r} outside [0, {METRIC_MAX[col]:g}]"
        )
    return arr


def check_fraction(value, name: str, *, open_low: bool = False, open_high: bool = False) -> float:
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real, got {value!r}")
    lo_ok = value > 0 if open_low else value >= 0
    hi_ok = value < 1 if open_high else value <= 1
    if not (lo_ok and hi_ok):
        lo = "(" if open_low else "["
        hi = ")" if open_high else "]"
        raise ValueError(f"{name} must lie in {lo}0, 1{hi}, got {value!r}")
    return float(value)


def check_positive_int(value, name: str, *, allow_zero: bool = False) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        raise ValueError(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {value!r}")
    return int(value)
