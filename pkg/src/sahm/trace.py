"""Epoch traces: data model, CSV I/O and the synthetic Markov generator."""

from __future__ import annotations

import csv
import math
import os
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import rng
from ._validation import METRIC_MAX, METRIC_NAMES, check_fraction, check_metrics, check_positive_int
from .states import LOW_STATE, N_STATES, CutoffSet, classify_metrics

CSV_HEADER = ("name", "epoch_index") + METRIC_NAMES
DEFAULT_EPOCH_MS = 100


class TraceFormatError(ValueError):
    """Malformed trace file; the message carries file and row context."""


class EpochRecord(NamedTuple):
    branch_mispredict_ratio: float
    l1i_mpki: float
    l1d_miss_ratio: float
    l2_miss_ratio: float


@dataclass(frozen=True, eq=False)
class Trace:
    """A named sequence of fixed-length epochs.

    ``metrics`` is a read-only (n_epochs, 4) float64 array in
    ``METRIC_NAMES`` column order.
    """

    name: str
    metrics: np.ndarray
    epoch_ms: int = DEFAULT_EPOCH_MS

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name or "," in self.name or "\n" in self.name:
            raise ValueError(f"trace name must be a non-empty string without commas, got {self.name!r}")
        check_positive_int(self.epoch_ms, "epoch_ms")
        arr = check_metrics(self.metrics, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "metrics", arr)

    @classmethod
    def from_records(cls, name: str, records: Iterable[Sequence[float]], epoch_ms: int = DEFAULT_EPOCH_MS):
        return cls(name, np.array([tuple(r) for r in records], dtype=np.float64).reshape(-1, 4), epoch_ms)

    @property
    def epochs(self) -> tuple[EpochRecord, ...]:
        return tuple(EpochRecord(*map(float, row)) for row in self.metrics)

    @property
    def n_epochs(self) -> int:
        return self.metrics.shape[0]

    @property
    def length_ms(self) -> int:
        return self.n_epochs * self.epoch_ms

    def states(self, cutoffs: CutoffSet) -> np.ndarray:
        return classify_metrics(self.metrics, cutoffs)

    def __len__(self):
        return self.n_epochs

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            self.name == other.name
            and self.epoch_ms == other.epoch_ms
            and np.array_equal(self.metrics, other.metrics)
        )

    def __hash__(self):
        return hash((self.name, self.epoch_ms, self.metrics.tobytes()))

    def __repr__(self):
        return f"Trace(name={self.name!r}, n_epochs={self.n_epochs}, epoch_ms={self.epoch_ms})"


# -- CSV -------------------------------------------------------------------


def write_trace(trace: Trace, path: "str | os.PathLike") -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i, row in enumerate(trace.metrics):
            # repr() is the shortest string that round-trips a double
            w.writerow([trace.name, i, *(repr(float(v)) for v in row)])
    return path


def read_trace(path: "str | os.PathLike", epoch_ms: int = DEFAULT_EPOCH_MS) -> Trace:
    """Parse one trace CSV.  Errors name the file and 1-based line number."""
    path = Path(path)
    check_positive_int(epoch_ms, "epoch_ms")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TraceFormatError(f"{path}: no epochs (empty file)")
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise TraceFormatError(f"{path}:1: bad header {header!r}, expected {','.join(CSV_HEADER)}")
        name = None
        rows: dict[int, tuple[float, ...]] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(CSV_HEADER):
                raise TraceFormatError(f"{path}:{line_no}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            if name is None:
                name = row[0]
            elif row[0] != name:
                raise TraceFormatError(f"{path}:{line_no}: trace name {row[0]!r} differs from {name!r}")
            try:
                idx = int(row[1])
                values = tuple(float(v) for v in row[2:])
            except ValueError:
                raise TraceFormatError(f"{path}:{line_no}: malformed row {row!r}") from None
            if idx < 0:
                raise TraceFormatError(f"{path}:{line_no}: negative epoch index {idx}")
            if idx in rows:
                raise TraceFormatError(f"{path}:{line_no}: duplicate epoch index {idx}")
            for col, v in enumerate(values):
                if not math.isfinite(v) or v < 0 or v > METRIC_MAX[col]:
                    raise TraceFormatError(
                        f"{path}:{line_no}: {METRIC_NAMES[col]}={v!r} outside [0, {METRIC_MAX[col]:g}]"
                    )
            rows[idx] = values
    if not rows:
        raise TraceFormatError(f"{path}: no epochs")
    missing = sorted(set(range(len(rows))) - set(rows))
    if missing:
        raise TraceFormatError(f"{path}: missing epoch index {missing[0]} (indices must be dense from 0)")
    metrics = np.array([rows[i] for i in range(len(rows))], dtype=np.float64)
    return Trace(name, metrics, epoch_ms)


def list_trace_files(paths: "Iterable[str | os.PathLike] | str | os.PathLike") -> list[Path]:
    """Expand directories to their ``*.csv`` files, sorted by name."""
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    out: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(p.glob("*.csv")))
        elif p.exists():
            out.append(p)
        else:
            raise FileNotFoundError(f"no such trace file or directory: {p}")
    if not out:
        raise TraceFormatError("no trace files found")
    return out


def read_traces(paths, epoch_ms: int = DEFAULT_EPOCH_MS) -> list[Trace]:
    traces = [read_trace(p, epoch_ms) for p in list_trace_files(paths)]
    names = [t.name for t in traces]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise TraceFormatError(f"duplicate trace names across files: {dupes}")
    return traces


def write_traces(traces: Iterable[Trace], directory: "str | os.PathLike") -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [write_trace(t, directory / f"{t.name}.csv") for t in traces]


# -- synthetic traces --------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Markov-chain parameters for :func:`generate_trace`.

    ``target_distribution`` must already sum to 1 (use :meth:`normalized`
    to build one from raw weights).
    """

    target_distribution: tuple[float, ...]
    self_transition_prob: float
    epoch_count: int
    seed: int = 0
    name: str = "synthetic"
    epoch_ms: int = DEFAULT_EPOCH_MS

    def __post_init__(self):
        pi = tuple(float(w) for w in self.target_distribution)
        if len(pi) != N_STATES:
            raise ValueError(f"target_distribution needs {N_STATES} weights, got {len(pi)}")
        if any(not math.isfinite(w) or w < 0 for w in pi):
            raise ValueError("target_distribution weights must be finite and non-negative")
        if abs(math.fsum(pi) - 1.0) > 1e-12:
            raise ValueError(f"target_distribution must sum to 1 within 1e-12, sums to {math.fsum(pi)!r}")
        object.__setattr__(self, "target_distribution", pi)
        check_fraction(self.self_transition_prob, "self_transition_prob")
        check_positive_int(self.epoch_count, "epoch_count")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        check_positive_int(self.epoch_ms, "epoch_ms")

    @classmethod
    def normalized(cls, weights, self_transition_prob, epoch_count, seed=0, **kw) -> "SyntheticSpec":
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (N_STATES,) or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be 16 non-negative values with a positive sum")
        w = w / w.sum()
        # push the rounding residue onto the largest weight
        w[np.argmax(w)] += 1.0 - math.fsum(w)
        return cls(tuple(w), self_transition_prob, epoch_count, seed, **kw)


def draw_states(spec: SyntheticSpec) -> np.ndarray:
    """The state sequence behind :func:`generate_trace`.

    The first state is drawn from the target distribution.  Afterwards the
    chain stays with probability ``self_transition_prob`` and otherwise
    moves to s' != s with probability proportional to the target weight
    of s'.
    """
    pi = list(spec.target_distribution)
    rho = spec.self_transition_prob
    n = spec.epoch_count
    support = [s for s in range(N_STATES) if pi[s] > 0]
    if not support:
        raise ValueError("target distribution has no mass")
    if rho < 1.0 and len(support) < 2:
        raise ValueError("no reachable successor: target distribution has a single state but self_transition_prob < 1")

    def cdf_without(skip):
        acc, out = 0.0, []
        for s in range(N_STATES):
            if s != skip:
                acc += pi[s]
            out.append(acc)
        return out, acc

    full_cdf, full_total = cdf_without(None)
    move_cdfs = [cdf_without(s) for s in range(N_STATES)]

    u = rng.uniforms(spec.seed, 2 * n)
    states = np.empty(n, dtype=np.int64)
    cur = min(bisect_right(full_cdf, u[0] * full_total), support[-1])
    states[0] = cur
    for t in range(1, n):
        if u[2 * t - 1] < rho:
            states[t] = cur
            continue
        cdf, total = move_cdfs[cur]
        nxt = bisect_right(cdf, u[2 * t] * total)
        if nxt >= N_STATES or pi[nxt] == 0 or nxt == cur:
            # only reachable through rounding at the top of the CDF
            nxt = max(s for s in support if s != cur)
        cur = nxt
        states[t] = cur
    return states


def metrics_for_states(states: np.ndarray, cutoffs: CutoffSet) -> np.ndarray:
    """Metric values that classify back to ``states`` under ``cutoffs``.

    HIGH bits get twice the cutoff and LOW bits half of it.  Where twice the
    cutoff would leave the metric's valid range, the midpoint between the
    cutoff and the range maximum is used instead.
    """
    c = cutoffs.as_array()
    if np.any(c >= METRIC_MAX):
        raise ValueError("a cutoff at or above its metric's maximum leaves no room for a HIGH value")
    high_val = np.where(2 * c <= METRIC_MAX, 2 * c, (c + METRIC_MAX) / 2)
    bits = (np.asarray(states)[:, None] >> np.arange(4)) & 1
    return np.where(bits == 1, high_val, 0.5 * c)


def generate_trace(spec: SyntheticSpec, cutoffs: CutoffSet) -> Trace:
    states = draw_states(spec)
    return Trace(spec.name, metrics_for_states(states, cutoffs), spec.epoch_ms)


# L2, L2+L1D, Branch, L2+Branch, L2+L1D+Branch
COMMON_STATES = (8, 12, 1, 9, 13)


def spec_like_workload(
    n_traces: int,
    cutoffs: CutoffSet,
    *,
    n_epochs: "int | tuple[int, int]" = 600,
    low_share: float = 0.08,
    self_transition_prob: float = 0.84,
    seed: int = 0,
    epoch_ms: int = DEFAULT_EPOCH_MS,
    support: "Sequence[int] | None" = COMMON_STATES,
) -> list[Trace]:
    """A set of synthetic benchmarks with a fixed Low-state share.

    Each trace gets its own flat-Dirichlet mix over the non-Low states in
    ``support`` (all 15 when ``None``), scaled to ``1 - low_share``.  The
    default support is the handful of states real SPEC CPU runs occupy most
    under the intuitive cutoffs.  ``n_epochs`` may be a ``(lo, hi)`` range
    from which each trace length is drawn uniformly.
    """
    check_positive_int(n_traces, "n_traces")
    low_share = check_fraction(low_share, "low_share")
    children = rng.spawn(seed, 2 * n_traces)
    alpha = np.zeros(N_STATES)
    if support is None:
        alpha[:] = 1.0
    else:
        for s in support:
            if not 0 <= int(s) < N_STATES:
                raise ValueError(f"support state {s!r} is not in [0, 15]")
            alpha[int(s)] = 1.0
    alpha[LOW_STATE] = 0.0
    if not alpha.any():
        raise ValueError("support must contain at least one non-Low state")
    traces = []
    width = len(str(n_traces - 1))
    for i in range(n_traces):
        mix = rng.dirichlet(children[2 * i], alpha) * (1.0 - low_share)
        mix[LOW_STATE] = low_share
        pick = rng.uniforms(children[2 * i + 1], 2)
        if isinstance(n_epochs, tuple):
            lo, hi = n_epochs
            length = lo + min(int(pick[0] * (hi - lo + 1)), hi - lo)
        else:
            length = n_epochs
        sub_seed = int(pick[1] * 2**53)
        spec = SyntheticSpec.normalized(
            mix, self_transition_prob, length, sub_seed, name=f"bm{i:0{width}d}", epoch_ms=epoch_ms
        )
        traces.append(generate_trace(spec, cutoffs))
    return traces


def empirical_state_fraction(trace: Trace, cutoffs: CutoffSet) -> np.ndarray:
    """Share of epochs in each of the 16 states."""
    states = trace.states(cutoffs)
    return np.bincount(states, minlength=N_STATES) / states.size
