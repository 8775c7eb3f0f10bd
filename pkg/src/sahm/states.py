"""HIGH/LOW binning of the four metrics into 16 behavioral states.

State codes are 4-bit integers: bit 0 is the branch mispredict ratio, bit 1
the L1I MPKI, bit 2 the L1D miss ratio and bit 3 the L2 miss ratio.  A bit
is set when its metric is strictly above the cutoff, so a value sitting
exactly on a cutoff is LOW.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields
from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_fraction, check_metrics

N_STATES = 16
LOW_STATE = 0

BRANCH, L1I, L1D, L2 = 0, 1, 2, 3
COMPONENT_NAMES = ("Branch", "L1I", "L1D", "L2")


@dataclass(frozen=True)
class CutoffSet:
    """One threshold per metric; all strictly positive."""

    branch_mispredict: float
    l1i_mpki: float
    l1d_miss: float
    l2_miss: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not np.isfinite(v) or v <= 0:
                raise ValueError(f"cutoff {f.name} must be a positive finite number, got {v!r}")
            object.__setattr__(self, f.name, float(v))

    def as_array(self) -> np.ndarray:
        return np.array([self.branch_mispredict, self.l1i_mpki, self.l1d_miss, self.l2_miss])

    @classmethod
    def from_array(cls, values) -> "CutoffSet":
        b, i, d, l2 = (float(v) for v in values)
        return cls(b, i, d, l2)

    def to_dict(self) -> dict:
        return asdict(self)


PRESETS = {
    "intuitive": CutoffSet(0.01, 1.0, 0.02, 0.10),
    "p25": CutoffSet(0.0003, 0.004, 0.005, 0.0364),
    "p50": CutoffSet(0.0034, 0.009, 0.0099, 0.1847),
}
DEFAULT_PRESET = "intuitive"


def load_cutoffs(spec: "str | os.PathLike | CutoffSet | dict | None" = None) -> CutoffSet:
    """Resolve a preset name, JSON file path, mapping or CutoffSet."""
    if spec is None:
        return PRESETS[DEFAULT_PRESET]
    if isinstance(spec, CutoffSet):
        return spec
    if isinstance(spec, dict):
        return _cutoffs_from_mapping(spec, "mapping")
    key = os.fspath(spec)
    if key in PRESETS:
        return PRESETS[key]
    if not os.path.exists(key):
        raise ValueError(f"unknown cutoff preset or missing file: {key!r} (presets: {', '.join(PRESETS)})")
    with open(key, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{key}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValueError(f"{key}: expected a JSON object")
    return _cutoffs_from_mapping(data, key)


def _cutoffs_from_mapping(data: dict, where: str) -> CutoffSet:
    names = [f.name for f in fields(CutoffSet)]
    missing = [n for n in names if n not in data]
    extra = sorted(set(data) - set(names))
    if missing or extra:
        raise ValueError(f"{where}: cutoff keys must be exactly {names} (missing={missing}, unexpected={extra})")
    return CutoffSet(**{n: data[n] for n in names})


def classify(record, cutoffs: CutoffSet) -> int:
    """State code of a single epoch record (any 4-sequence in metric order)."""
    values = tuple(record)
    c = (cutoffs.branch_mispredict, cutoffs.l1i_mpki, cutoffs.l1d_miss, cutoffs.l2_miss)
    return sum(1 << b for b in range(4) if values[b] > c[b])


def classify_metrics(metrics, cutoffs: CutoffSet) -> np.ndarray:
    """Vectorised :func:`classify` over an (n, 4) array; returns int64 codes."""
    arr = np.asarray(metrics, dtype=np.float64)
    high = arr > cutoffs.as_array()
    return (high * (1 << np.arange(4))).sum(axis=1).astype(np.int64)


def state_bits(state: int) -> tuple[bool, bool, bool, bool]:
    _check_state(state)
    return tuple(bool(state >> b & 1) for b in range(4))


def label(state: int) -> str:
    """'Low' for state 0, else stressed components as 'L2+L1D+L1I+Branch'."""
    _check_state(state)
    if state == LOW_STATE:
        return "Low"
    return "+".join(COMPONENT_NAMES[b] for b in (L2, L1D, L1I, BRANCH) if state >> b & 1)


def _check_state(state) -> None:
    if isinstance(state, bool) or not isinstance(state, (int, np.integer)) or not 0 <= state < N_STATES:
        raise ValueError(f"state must be an integer in [0, 15], got {state!r}")


STATE_LABELS = tuple(label(s) for s in range(N_STATES))


def derive_percentile_cutoffs(traces: Iterable, percentile: float) -> CutoffSet:
    """Per-metric percentile of all epochs pooled across ``traces``.

    Uses inclusive linear interpolation between order statistics
    (numpy's ``"linear"`` method).
    """
    percentile = check_fraction(percentile, "percentile", open_low=True, open_high=True)
    blocks = [np.asarray(t.metrics if hasattr(t, "metrics") else t, dtype=np.float64) for t in traces]
    blocks = [b.reshape(-1, 4) for b in blocks if b.size]
    if not blocks:
        raise ValueError("empty pool: no epochs to derive cutoffs from")
    pool = np.concatenate(blocks, axis=0)
    values = np.percentile(pool, 100.0 * percentile, axis=0, method="linear")
    if np.any(values <= 0):
        zero = [f.name for f, v in zip(fields(CutoffSet), values) if v <= 0]
        raise ValueError(f"percentile {percentile} gives non-positive cutoffs for {zero}")
    return CutoffSet.from_array(values)


def _stack(X) -> np.ndarray:
    # a Trace, a list of Traces, or anything array-like of shape (n, 4)
    if hasattr(X, "metrics"):
        return np.asarray(X.metrics)
    if isinstance(X, (list, tuple)) and X and all(hasattr(t, "metrics") for t in X):
        return np.concatenate([np.asarray(t.metrics) for t in X], axis=0)
    return X


class StateClassifier(TransformerMixin, BaseEstimator):
    """Estimator wrapper around the cutoff binning.

    Parameters
    ----------
    cutoffs : str, path, dict or CutoffSet, default="intuitive"
        Fixed cutoffs used when ``percentile`` is None.
    percentile : float or None
        If set, ``fit`` derives cutoffs as this pooled percentile of the
        training epochs and ``cutoffs`` is ignored.

    ``predict`` returns state codes, ``transform`` the 0/1 HIGH indicator
    matrix (one column per metric).
    """

    def __init__(self, cutoffs="intuitive", percentile=None):
        self.cutoffs = cutoffs
        self.percentile = percentile

    def fit(self, X, y=None):
        X = check_metrics(_stack(X))
        if self.percentile is None:
            self.cutoffs_ = load_cutoffs(self.cutoffs)
        else:
            self.cutoffs_ = derive_percentile_cutoffs([X], self.percentile)
        self.n_features_in_ = 4
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "cutoffs_")
        return classify_metrics(check_metrics(_stack(X)), self.cutoffs_)

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "cutoffs_")
        X = check_metrics(_stack(X))
        return (X > self.cutoffs_.as_array()).astype(np.int64)

    def predict_labels(self, X) -> list[str]:
        return [STATE_LABELS[s] for s in self.predict(X)]
