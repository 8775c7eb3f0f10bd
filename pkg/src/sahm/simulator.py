"""Fixed-timestep trace-driven simulation of a state-aware multicore.

Each timestep runs one scheduler pass over all cores, then advances the
program at the head of every queue.  A program first burns any pending
migration stall, then does work for the rest of the step at the core's
rate if the core serves the state at its current trace position, and at
rate 1 otherwise.  Queued programs make no progress.  Traces restart when
they finish; the run lasts ``horizon_ms`` of wall time.
"""

from __future__ import annotations

import csv
import gzip
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .chip import ChipConfig
from .scheduler import PolicyConfig, ProgramControl, World, scheduler_pass, specialty_matches
from .states import N_STATES, STATE_LABELS, CutoffSet
from .trace import Trace


@dataclass(frozen=True)
class SimParams:
    timestep_ms: int = 10
    epoch_ms: int = 100
    migration_cost_ms: float = 0.0
    horizon_ms: "int | None" = None
    seed: int = 0

    def __post_init__(self):
        for name in ("timestep_ms", "epoch_ms"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v <= 0:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.epoch_ms % self.timestep_ms:
            raise ValueError("epoch_ms must be an integer multiple of timestep_ms")
        if not math.isfinite(self.migration_cost_ms) or self.migration_cost_ms < 0:
            raise ValueError(f"migration_cost_ms must be finite and >= 0, got {self.migration_cost_ms!r}")
        if self.horizon_ms is not None and (not isinstance(self.horizon_ms, (int, np.integer)) or self.horizon_ms <= 0):
            raise ValueError(f"horizon_ms must be a positive integer, got {self.horizon_ms!r}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class SimEventLog:
    """Raw per-timestep, per-program records of one run.

    The 2-D arrays are indexed ``[step, program]``.  ``core`` is -1 while a
    program waits in a queue; ``state`` is the state at the program's trace
    position when the step started.
    """

    program_names: list[str]
    horizon_ms: int
    times: np.ndarray
    dts: np.ndarray
    core: np.ndarray
    state: np.ndarray
    matched: np.ndarray
    work: np.ndarray
    stalled: np.ndarray
    executed: np.ndarray
    waited: np.ndarray
    migrations: list = field(default_factory=list)  # (time_ms, program, from_core, to_core)
    final_work: np.ndarray = None
    wraps: np.ndarray = None
    trace_lengths: np.ndarray = None

    @property
    def n_programs(self) -> int:
        return len(self.program_names)

    def write_csv(self, path) -> Path:
        """Gzip CSV of step records, followed by migration records."""
        path = Path(path)
        with gzip.open(path, "wt", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kind", "time_ms", "program", "core", "state", "matched",
                        "work_ms", "stalled_ms", "executed_ms", "waited_ms", "to_core"])
            for k, t in enumerate(self.times):
                for p, name in enumerate(self.program_names):
                    w.writerow(["step", repr(float(t)), name, int(self.core[k, p]), STATE_LABELS[self.state[k, p]],
                                int(self.matched[k, p]), repr(float(self.work[k, p])),
                                repr(float(self.stalled[k, p])), repr(float(self.executed[k, p])),
                                repr(float(self.waited[k, p])), ""])
            for t, p, src, dst in self.migrations:
                w.writerow(["migration", repr(float(t)), self.program_names[p], src, "", "", "", "", "", "", dst])
        return path


def default_horizon(workload: Sequence[Trace]) -> int:
    return max(t.length_ms for t in workload)


def simulate(workload: Sequence[Trace], chip: ChipConfig, policy: PolicyConfig, cutoffs: CutoffSet,
             params: SimParams = SimParams()):
    """Run one simulation; returns ``(SimResult, SimEventLog)``.

    Programs start on cores round-robin in id order with zero inertia.
    """
    from .metrics import compute_metrics

    if not workload:
        raise ValueError("workload must contain at least one trace")
    if not chip.cores:
        raise ValueError("chip has no cores")
    for t in workload:
        if t.epoch_ms != params.epoch_ms:
            raise ValueError(f"trace {t.name!r} has epoch_ms={t.epoch_ms}, simulation uses {params.epoch_ms}")
    n = len(workload)
    n_cores = len(chip.cores)
    horizon = params.horizon_ms or default_horizon(workload)
    E = params.epoch_ms
    T = params.timestep_ms

    states = [t.states(cutoffs) for t in workload]
    n_epochs = [len(s) for s in states]
    queues: list[deque] = [deque() for _ in range(n_cores)]
    controls = []
    for p in range(n):
        queues[p % n_cores].append(p)
        controls.append(ProgramControl(program=p, core=p % n_cores))
    world = World(chip, policy, queues, controls, states, E, float(params.migration_cost_ms))

    n_steps = -(-horizon // T)
    shape = (n_steps, n)
    log = SimEventLog(
        program_names=[t.name for t in workload], horizon_ms=int(horizon),
        times=np.arange(n_steps, dtype=np.float64) * T,
        dts=np.minimum(T, horizon - np.arange(n_steps) * T).astype(np.float64),
        core=np.full(shape, -1, dtype=np.int32), state=np.zeros(shape, dtype=np.int8),
        matched=np.zeros(shape, dtype=bool), work=np.zeros(shape), stalled=np.zeros(shape),
        executed=np.zeros(shape), waited=np.zeros(shape),
    )
    cores = chip.cores
    core_arr, state_arr, matched_arr = log.core, log.state, log.matched
    work_arr, stall_arr, exec_arr, wait_arr = log.work, log.stalled, log.executed, log.waited

    for k in range(n_steps):
        t_now = k * T
        dt = float(min(T, horizon - t_now))
        for d in scheduler_pass(world):
            if d.action == "migrate":
                log.migrations.append((float(t_now), d.program, d.source, d.target))
        running = set()
        for c, q in enumerate(queues):
            if not q:
                continue
            p = q[0]
            running.add(p)
            ctl = controls[p]
            stall = min(ctl.pending_stall_ms, dt)
            ctl.pending_stall_ms -= stall
            run = dt - stall
            s = int(states[p][int(ctl.work_ms // E) % n_epochs[p]])
            hit = specialty_matches(cores[c], s)
            w = run * (cores[c].rate if hit else 1.0)
            ctl.work_ms += w
            if run > 0:
                ctl.last_state = s
            core_arr[k, p] = c
            state_arr[k, p] = s
            matched_arr[k, p] = hit and run > 0
            work_arr[k, p] = w
            stall_arr[k, p] = stall
            exec_arr[k, p] = run
        for p in range(n):
            if p not in running:
                wait_arr[k, p] = dt
                state_arr[k, p] = states[p][int(controls[p].work_ms // E) % n_epochs[p]]
        for q in queues:
            if len(q) > 1:
                q.rotate(-1)

    log.final_work = np.array([c.work_ms for c in controls])
    log.trace_lengths = np.array([t.length_ms for t in workload], dtype=np.float64)
    log.wraps = np.array([int(c.work_ms // t.length_ms) for c, t in zip(controls, workload)])
    result = compute_metrics(log, params, n, chip=chip, policy=policy)
    return result, log


def amdahl_speedup(state_fractions, chip: ChipConfig) -> float:
    """Contention-free, migration-free speedup for a state mix on ``chip``.

    Each state runs at ``1 + max speedup`` over the cores serving it, or at
    rate 1 if none does.
    """
    frac = np.asarray(state_fractions, dtype=np.float64)
    if frac.shape != (N_STATES,) or np.any(frac < 0) or abs(frac.sum() - 1.0) > 1e-9:
        raise ValueError("state_fractions must be 16 non-negative values summing to 1")
    factors = np.ones(N_STATES)
    for s in range(N_STATES):
        for core in chip.cores:
            if specialty_matches(core, s):
                factors[s] = max(factors[s], core.rate)
    return float(1.0 / np.sum(frac / factors))
