"""Run metrics, sweeps and figure-shaped summary tables.

Per-app speedup is work done over the horizon: a program alone on a
baseline core completes exactly ``horizon_ms`` of work, so no second
baseline simulation is needed.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

SWEEP_COLUMNS = (
    "workload", "chip", "policy", "migration_cost_ms", "system_speedup", "mean_app_speedup",
    "p25", "median", "p75", "min", "max", "migrations_per_sec", "epoch_utilization",
)
SUMMARY_KEYS = ("min", "p25", "median", "mean", "p75", "max")
THREADS_ENV = "SAHM_THREADS"


class IntegrityError(RuntimeError):
    """An event log that does not conserve time or work."""


@dataclass(frozen=True)
class AppResult:
    name: str
    work_ms: float
    speedup: float
    migrations: int
    epoch_utilization: float
    executed_ms: float
    stalled_ms: float
    waited_ms: float
    wraps: int
    # trace length over wall time of the first complete pass (NaN if none)
    first_pass_speedup: float


@dataclass(frozen=True)
class SimResult:
    apps: tuple[AppResult, ...]
    horizon_ms: int
    system_speedup: float
    mean_app_speedup: float
    migrations: int
    migrations_per_sec: float
    epoch_utilization: float
    chip: str = ""
    policy: str = ""
    migration_cost_ms: float = 0.0
    workload: str = ""

    @property
    def app_speedups(self) -> np.ndarray:
        return np.array([a.speedup for a in self.apps])

    def summary(self) -> dict:
        return summarize(self.app_speedups)

    def row(self) -> dict:
        s = self.summary()
        return {
            "workload": self.workload, "chip": self.chip, "policy": self.policy,
            "migration_cost_ms": self.migration_cost_ms, "system_speedup": self.system_speedup,
            "mean_app_speedup": self.mean_app_speedup, "p25": s["p25"], "median": s["median"],
            "p75": s["p75"], "min": s["min"], "max": s["max"],
            "migrations_per_sec": self.migrations_per_sec, "epoch_utilization": self.epoch_utilization,
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        d["apps"] = [asdict(a) for a in self.apps]
        return d

    def with_labels(self, **labels) -> "SimResult":
        return SimResult(**{**{k: getattr(self, k) for k in self.__dataclass_fields__}, **labels})


def summarize(values) -> dict:
    """min, p25, median, mean, p75, max (linear-interpolated percentiles)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("cannot summarize an empty set")
    p25, med, p75 = np.percentile(v, [25, 50, 75])
    return {"min": float(v.min()), "p25": float(p25), "median": float(med), "mean": float(v.mean()),
            "p75": float(p75), "max": float(v.max())}


def _first_pass_speedup(log, p: int, length_ms: float) -> float:
    cum = np.cumsum(log.work[:, p])
    k = int(np.searchsorted(cum, length_ms - 1e-9))
    if k >= cum.size:
        return math.nan
    before = cum[k - 1] if k else 0.0
    rate = log.work[k, p] / log.executed[k, p]
    wall = log.times[k] + log.stalled[k, p] + (length_ms - before) / rate
    return float(length_ms / wall)


def compute_metrics(log, params, n_programs: int, *, chip=None, policy=None, trace_lengths=None) -> SimResult:
    """Aggregate a complete event log into a :class:`SimResult`.

    Raises :class:`IntegrityError` if work or wall time is not conserved.
    """
    if log.n_programs != n_programs:
        raise IntegrityError(f"log covers {log.n_programs} programs, expected {n_programs}")
    horizon = float(log.horizon_ms)
    if not math.isclose(float(log.dts.sum()), horizon, rel_tol=0, abs_tol=1e-6):
        raise IntegrityError(f"log covers {log.dts.sum()} ms, horizon is {horizon} ms")
    work = log.work.sum(axis=0)
    if log.final_work is not None and not np.allclose(work, log.final_work, rtol=0, atol=1e-6):
        raise IntegrityError("per-step work does not add up to final progress")
    executed = log.executed.sum(axis=0)
    stalled = log.stalled.sum(axis=0)
    waited = log.waited.sum(axis=0)
    accounted = executed + stalled + waited
    if not np.allclose(accounted, horizon, rtol=0, atol=1e-6):
        p = int(np.argmax(np.abs(accounted - horizon)))
        raise IntegrityError(f"program {log.program_names[p]!r}: executed+stalled+waited = {accounted[p]} != {horizon}")
    matched_ms = np.where(log.matched, log.executed, 0.0).sum(axis=0)
    migrations = np.zeros(n_programs, dtype=np.int64)
    for _, p, _, _ in log.migrations:
        migrations[p] += 1
    lengths = trace_lengths if trace_lengths is not None else getattr(log, "trace_lengths", None)

    apps = []
    for p, name in enumerate(log.program_names):
        util = float(matched_ms[p] / executed[p]) if executed[p] > 0 else 0.0
        fps = _first_pass_speedup(log, p, float(lengths[p])) if lengths is not None else math.nan
        apps.append(AppResult(
            name=name, work_ms=float(work[p]), speedup=float(work[p] / horizon), migrations=int(migrations[p]),
            epoch_utilization=util, executed_ms=float(executed[p]), stalled_ms=float(stalled[p]),
            waited_ms=float(waited[p]), wraps=int(log.wraps[p]) if log.wraps is not None else 0,
            first_pass_speedup=fps,
        ))
    total_exec = float(executed.sum())
    speedups = work / horizon
    return SimResult(
        apps=tuple(apps),
        horizon_ms=int(log.horizon_ms),
        system_speedup=float(work.sum() / (n_programs * horizon)),
        mean_app_speedup=float(speedups.mean()),
        migrations=len(log.migrations),
        migrations_per_sec=len(log.migrations) / (horizon / 1000.0),
        epoch_utilization=float(matched_ms.sum() / total_exec) if total_exec > 0 else 0.0,
        chip=getattr(chip, "name", "") or "",
        policy=getattr(policy, "name", "") or "",
        migration_cost_ms=float(params.migration_cost_ms),
    )


# -- sweeps ------------------------------------------------------------------------


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _run_one(task):
    from .simulator import simulate

    workload_name, traces, chip, policy, cutoffs, params = task
    result, _ = simulate(traces, chip, policy, cutoffs, params)
    return result.with_labels(workload=workload_name)


def sweep(workloads: "Mapping[str, Sequence] | Sequence[tuple[str, Sequence]]", chips: Sequence, policies: Sequence,
          costs: Iterable[float], cutoffs, params, workers: "int | None" = None) -> list[SimResult]:
    """Simulate every (chip, policy, cost, workload) combination.

    Results come back ordered by chip, then policy, then cost, then
    workload, each in the order given, whatever the worker count.
    """
    from dataclasses import replace

    items = list(workloads.items()) if isinstance(workloads, Mapping) else list(workloads)
    costs = list(costs)
    if not items or not chips or not policies or not costs:
        raise ValueError("sweep needs at least one workload, chip, policy and migration cost")
    tasks = [
        (wname, traces, chip, policy, cutoffs, replace(params, migration_cost_ms=float(cost)))
        for chip, policy, cost, (wname, traces) in itertools.product(chips, policies, costs, items)
    ]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(tasks) == 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def sweep_rows(results: Iterable[SimResult]) -> list[dict]:
    return [r.row() for r in results]


def _cell(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_table(rows: Sequence[dict], path, fmt: str = "csv", columns: "Sequence[str] | None" = None) -> Path:
    """Write rows as CSV (floats via repr, NaN as empty) or JSON."""
    path = Path(path)
    columns = list(columns or (rows[0].keys() if rows else SWEEP_COLUMNS))
    if fmt == "csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_cell(r.get(c, "")) for c in columns])
    elif fmt == "json":
        clean = [{c: (None if isinstance(r.get(c), float) and math.isnan(r[c]) else r.get(c)) for c in columns}
                 for r in rows]
        path.write_text(json.dumps(clean, indent=2) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown format {fmt!r}; expected csv or json")
    return path


def write_result_json(result: SimResult, path) -> Path:
    path = Path(path)
    d = result.to_dict()
    for a in d["apps"]:
        if isinstance(a["first_pass_speedup"], float) and math.isnan(a["first_pass_speedup"]):
            a["first_pass_speedup"] = None
    path.write_text(json.dumps(d, indent=2) + "\n", encoding="utf-8")
    return path


def distribution_table(results: Iterable[SimResult], by: str) -> list[dict]:
    """Group per-app speedups by ``"app"`` (across runs) or ``"run"``.

    ``by="app"`` gives one row per application with the distribution of its
    speedup over all runs (e.g. all chip configurations); ``by="chip"``
    pools every app speedup of every run sharing a chip.
    """
    groups: dict[str, list[float]] = {}
    for r in results:
        if by == "app":
            for a in r.apps:
                groups.setdefault(a.name, []).append(a.speedup)
        elif by == "chip":
            groups.setdefault(r.chip, []).extend(a.speedup for a in r.apps)
        else:
            raise ValueError("by must be 'app' or 'chip'")
    return [{by: k, "n": len(v), **summarize(v)} for k, v in groups.items()]
