"""State coverage, transition counts and interval-length statistics.

Absent transitions (never observed) are NaN in share matrices and an empty
field in CSV output, so they stay distinguishable from a share that rounds
to zero.
"""

from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .states import N_STATES, STATE_LABELS, CutoffSet
from .trace import Trace

DEFAULT_BUCKETS = (1, 2, 5, 10, 50)


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# -- coverage -----------------------------------------------------------------


def coverage(traces: Sequence[Trace], cutoffs: CutoffSet) -> tuple[list[str], np.ndarray]:
    """Per-trace state shares.  Returns (names, (n_traces, 16) array)."""
    if not traces:
        raise ValueError("no traces")
    rows = []
    for t in traces:
        s = t.states(cutoffs)
        rows.append(np.bincount(s, minlength=N_STATES) / s.size)
    return [t.name for t in traces], np.vstack(rows)


def write_coverage_csv(traces: Sequence[Trace], cutoffs: CutoffSet, path) -> Path:
    """One row per application plus an unweighted ``average`` row."""
    names, table = coverage(traces, cutoffs)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["application", *STATE_LABELS])
        for name, row in zip(names, table):
            w.writerow([name, *map(_fmt, row)])
        w.writerow(["average", *map(_fmt, table.mean(axis=0))])
    return path


# -- transitions ---------------------------------------------------------------


@dataclass(frozen=True)
class TransitionMatrix:
    """``counts[i, j]``: consecutive epoch pairs going from state i to j."""

    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def diagonal_share(self) -> float:
        return float(np.trace(self.counts)) / self.total

    def __add__(self, other: "TransitionMatrix") -> "TransitionMatrix":
        return TransitionMatrix(self.counts + other.counts)


def _trace_transitions(states: np.ndarray) -> np.ndarray:
    counts = np.zeros((N_STATES, N_STATES), dtype=np.int64)
    np.add.at(counts, (states[:-1], states[1:]), 1)
    return counts


def transitions(traces: Iterable[Trace], cutoffs: CutoffSet) -> TransitionMatrix:
    """Pooled transition counts; pairs never span two traces."""
    counts = np.zeros((N_STATES, N_STATES), dtype=np.int64)
    for t in traces:
        if t.n_epochs < 2:
            warnings.warn(f"trace {t.name!r} has fewer than 2 epochs; excluded from transitions", stacklevel=2)
            continue
        counts += _trace_transitions(t.states(cutoffs))
    return TransitionMatrix(counts)


def transition_shares(m: TransitionMatrix, exclude_diagonal: bool = True) -> np.ndarray:
    """Each cell's share of the included transitions; NaN marks absent cells."""
    counts = m.counts.astype(np.float64)
    if exclude_diagonal:
        np.fill_diagonal(counts, 0.0)
    total = counts.sum()
    if total == 0:
        if exclude_diagonal and m.total > 0:
            raise ValueError("no off-diagonal transitions")
        raise ValueError("no transitions")
    shares = counts / total
    shares[counts == 0] = np.nan
    return shares


def write_transitions_csv(traces: Sequence[Trace], cutoffs: CutoffSet, path) -> Path:
    """Rows ``scope,i,j,from,to,count,share,offdiag_share``.

    ``scope`` is ``pooled`` for the all-trace counts followed by one block
    per trace.  Shares are empty where the transition was not seen, and
    ``offdiag_share`` is empty on the diagonal.
    """
    path = Path(path)
    blocks = [("pooled", transitions(traces, cutoffs))]
    blocks += [(t.name, transitions([t], cutoffs)) for t in traces if t.n_epochs >= 2]
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scope", "i", "j", "from", "to", "count", "share", "offdiag_share"])
        for scope, m in blocks:
            full = _shares_or_nan(m, False)
            off = _shares_or_nan(m, True)
            for i in range(N_STATES):
                for j in range(N_STATES):
                    w.writerow([
                        scope, i, j, STATE_LABELS[i], STATE_LABELS[j],
                        int(m.counts[i, j]), _fmt(full[i, j]), _fmt(off[i, j]),
                    ])
    return path


def _shares_or_nan(m: TransitionMatrix, exclude_diagonal: bool) -> np.ndarray:
    try:
        return transition_shares(m, exclude_diagonal)
    except ValueError:
        return np.full((N_STATES, N_STATES), np.nan)


# -- intervals -------------------------------------------------------------------


def run_lengths(states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Maximal runs of equal values: returns (run states, run lengths)."""
    states = np.asarray(states)
    if states.size == 0:
        return states[:0], np.zeros(0, dtype=np.int64)
    starts = np.flatnonzero(np.r_[True, states[1:] != states[:-1]])
    lengths = np.diff(np.r_[starts, states.size])
    return states[starts], lengths


@dataclass(frozen=True)
class IntervalStats:
    """Interval lengths (in epochs) with their states, plus bucketed shares.

    ``buckets`` are lower bounds; bucket k covers lengths in
    ``[buckets[k], buckets[k+1])`` and the last one is open-ended.
    """

    buckets: tuple[int, ...]
    lengths: np.ndarray
    states: np.ndarray

    def bucket_index(self) -> np.ndarray:
        return np.searchsorted(np.asarray(self.buckets), self.lengths, side="right") - 1

    def count_shares(self) -> np.ndarray:
        idx = self.bucket_index()
        return np.bincount(idx, minlength=len(self.buckets)) / idx.size

    def time_shares(self) -> np.ndarray:
        idx = self.bucket_index()
        return np.bincount(idx, weights=self.lengths, minlength=len(self.buckets)) / self.lengths.sum()

    def mean_length(self) -> float:
        return float(self.lengths.mean())

    def mean_length_by_state(self) -> np.ndarray:
        """Mean interval length per state; NaN for states never visited."""
        count = np.bincount(self.states, minlength=N_STATES)
        total = np.bincount(self.states, weights=self.lengths, minlength=N_STATES)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(count > 0, total / np.maximum(count, 1), np.nan)

    def bucket_labels(self) -> list[str]:
        out = []
        for k, lo in enumerate(self.buckets):
            if k + 1 < len(self.buckets):
                hi = self.buckets[k + 1] - 1
                out.append(str(lo) if hi == lo else f"{lo}-{hi}")
            else:
                out.append(f">={lo}")
        return out


def intervals(traces: Iterable[Trace], cutoffs: CutoffSet, buckets: Sequence[int] = DEFAULT_BUCKETS) -> IntervalStats:
    buckets = tuple(int(b) for b in buckets)
    if not buckets or buckets[0] != 1 or any(b >= c for b, c in zip(buckets, buckets[1:])):
        raise ValueError(f"buckets must be strictly increasing lower bounds starting at 1, got {buckets}")
    all_states, all_lengths = [], []
    for t in traces:
        s, n = run_lengths(t.states(cutoffs))
        all_states.append(s)
        all_lengths.append(n)
    if not all_lengths:
        raise ValueError("no traces")
    return IntervalStats(buckets, np.concatenate(all_lengths), np.concatenate(all_states).astype(np.int64))


def write_intervals_csv(traces: Sequence[Trace], cutoffs: CutoffSet, path, buckets=DEFAULT_BUCKETS) -> Path:
    """Rows ``section,key,count_share,time_share,mean_length``.

    ``bucket`` rows carry the pooled histograms, ``state`` rows the mean
    interval length per state (empty when the state never occurs).
    """
    stats = intervals(traces, cutoffs, buckets)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["section", "key", "count_share", "time_share", "mean_length"])
        for lab, c, t in zip(stats.bucket_labels(), stats.count_shares(), stats.time_shares()):
            w.writerow(["bucket", lab, _fmt(c), _fmt(t), ""])
        for s, mean in enumerate(stats.mean_length_by_state()):
            w.writerow(["state", STATE_LABELS[s], "", "", _fmt(mean)])
        w.writerow(["all", "all", "", "", _fmt(stats.mean_length())])
    return path


def write_characterization(traces: Sequence[Trace], cutoffs: CutoffSet, out_dir, buckets=DEFAULT_BUCKETS) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [
        write_coverage_csv(traces, cutoffs, out / "coverage.csv"),
        write_transitions_csv(traces, cutoffs, out / "transitions.csv"),
        write_intervals_csv(traces, cutoffs, out / "intervals.csv", buckets),
    ]
