"""Per-core state-aware scheduling.

One scheduler pass visits the cores in ascending id order.  For the program
at the head of each queue it either leaves it in place, or dequeues it and
appends it to another core's queue:

1. a program whose inertia is positive stays (inertia decremented);
2. the program's state is observed according to the policy;
3. if the current core serves that state it stays, unless an available
   matching core would run it strictly faster;
4. otherwise it moves to the best available matching core;
5. failing that, to the most idle core (staying put when the current core
   is among the most idle).

Moving to a different core sets the program's inertia and charges the
migration stall.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .chip import ChipConfig, CoreSpec
from .states import LOW_STATE


class StateSource(str, enum.Enum):
    PREVIOUS_TIMESTEP = "previous-timestep"
    PREVIOUS_EPOCH = "previous-epoch"
    ORACLE = "oracle"


class PolicyKind(str, enum.Enum):
    BLIND = "blind"
    GREEDY = "greedy"
    GREEDY_INERTIA = "inertia"
    ORACLE = "oracle"
    ORACLE_INERTIA = "oracle-inertia"


DEFAULT_INERTIA = 5


@dataclass(frozen=True)
class PolicyConfig:
    """Scheduling policy.

    ``state_source`` defaults to the oracle for the oracle kinds and to the
    state the program ran with during its previous timestep otherwise.
    ``inertia_schedulings`` defaults to 5 for inertia kinds and must be 0
    for the others.
    """

    kind: PolicyKind = PolicyKind.GREEDY
    inertia_schedulings: "int | None" = None
    state_source: "StateSource | None" = None

    def __post_init__(self):
        kind = PolicyKind(self.kind)
        object.__setattr__(self, "kind", kind)
        with_inertia = kind in (PolicyKind.GREEDY_INERTIA, PolicyKind.ORACLE_INERTIA)
        n = self.inertia_schedulings
        if n is None:
            n = DEFAULT_INERTIA if with_inertia else 0
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 0:
            raise ValueError(f"inertia_schedulings must be a non-negative integer, got {n!r}")
        if not with_inertia and n != 0:
            raise ValueError(f"policy {kind.value!r} does not use inertia")
        object.__setattr__(self, "inertia_schedulings", int(n))
        src = self.state_source
        if src is None:
            src = StateSource.ORACLE if kind in (PolicyKind.ORACLE, PolicyKind.ORACLE_INERTIA) else StateSource.PREVIOUS_TIMESTEP
        object.__setattr__(self, "state_source", StateSource(src))

    @classmethod
    def parse(cls, text: str, inertia_schedulings: "int | None" = None, state_source=None) -> "PolicyConfig":
        kind = PolicyKind(text)
        if kind not in (PolicyKind.GREEDY_INERTIA, PolicyKind.ORACLE_INERTIA):
            inertia_schedulings = None
        return cls(kind, inertia_schedulings, state_source)

    @property
    def name(self) -> str:
        base = self.kind.value
        if self.inertia_schedulings not in (0, DEFAULT_INERTIA):
            base += f"{self.inertia_schedulings}"
        default_src = StateSource.ORACLE if self.kind in (PolicyKind.ORACLE, PolicyKind.ORACLE_INERTIA) else StateSource.PREVIOUS_TIMESTEP
        if self.state_source != default_src:
            base += f"@{self.state_source.value}"
        return base


@dataclass
class ProgramControl:
    """Scheduler-side bookkeeping for one program."""

    program: int
    core: int
    inertia: int = 0
    last_state: int = LOW_STATE
    pending_stall_ms: float = 0.0
    work_ms: float = 0.0
    migrations: int = 0


class Decision(NamedTuple):
    action: str  # "idle" | "stay" | "migrate"
    program: "int | None" = None
    target: "int | None" = None
    source: "int | None" = None


IDLE = Decision("idle")


def specialty_matches(core: CoreSpec, state: int) -> bool:
    """True iff the core is specialized and its component is HIGH in ``state``."""
    return core.specialization is not None and bool(state >> core.specialization.value & 1)


def observed_state(program: ProgramControl, progress_ms: float, states: np.ndarray, epoch_ms: int,
                   policy: PolicyConfig) -> int:
    """The state the scheduler sees for ``program`` at trace progress ``progress_ms``.

    ``progress_ms`` is total work done, so epoch indices wrap around the
    trace when it restarts.
    """
    src = policy.state_source
    if src is StateSource.PREVIOUS_TIMESTEP:
        return program.last_state
    epoch = int(progress_ms // epoch_ms)
    if src is StateSource.ORACLE:
        return int(states[epoch % len(states)])
    if epoch == 0:
        return LOW_STATE
    return int(states[(epoch - 1) % len(states)])


def most_idle_core(queue_lengths: Sequence[int], prefer: "int | None" = None) -> int:
    """Index of the shortest queue; ties go to ``prefer`` if tied, else the lowest id."""
    if not queue_lengths:
        raise ValueError("no cores")
    shortest = min(queue_lengths)
    if prefer is not None and queue_lengths[prefer] == shortest:
        return prefer
    return queue_lengths.index(shortest)


@dataclass
class World:
    """Mutable scheduling state shared by one pass over the cores."""

    chip: ChipConfig
    policy: PolicyConfig
    queues: list[deque]
    controls: list[ProgramControl]
    program_states: list[np.ndarray]
    epoch_ms: int
    migration_cost_ms: float = 0.0
    handled: set = field(default_factory=set)

    def __post_init__(self):
        # cores serving each state, and the best speedup among them
        self.serving = [[c for c in self.chip.cores if specialty_matches(c, s)] for s in range(16)]
        self.best_speedup = [max((c.speedup for c in cs), default=0.0) for cs in self.serving]

    def observe(self, pid: int) -> int:
        ctl = self.controls[pid]
        return observed_state(ctl, ctl.work_ms, self.program_states[pid], self.epoch_ms, self.policy)

    def is_available(self, core_id: int) -> bool:
        """Idle, or every program queued on it is unserved there and free to leave."""
        core = self.chip.cores[core_id]
        return all(
            self.controls[p].inertia == 0 and not specialty_matches(core, self.observe(p))
            for p in self.queues[core_id]
        )

    def best_available(self, state: int, exclude: int) -> "int | None":
        best, best_key = None, None
        for core in self.serving[state]:
            if core.id == exclude or not self.is_available(core.id):
                continue
            key = (-core.speedup, len(self.queues[core.id]), core.id)
            if best_key is None or key < best_key:
                best, best_key = core.id, key
        return best


def schedule_core(core_id: int, world: World) -> Decision:
    """Run the scheduling logic for the program at the head of ``core_id``."""
    queue = world.queues[core_id]
    if not queue:
        return IDLE
    pid = queue[0]
    if pid in world.handled:
        # moved here earlier in this pass; it was already scheduled
        return Decision("stay", pid)
    world.handled.add(pid)
    if world.policy.kind is PolicyKind.BLIND:
        return Decision("stay", pid)
    ctl = world.controls[pid]
    if ctl.inertia > 0:
        ctl.inertia -= 1
        return Decision("stay", pid)

    state = world.observe(pid)
    core = world.chip.cores[core_id]
    matched = specialty_matches(core, state)
    if matched and core.speedup >= world.best_speedup[state]:
        return Decision("stay", pid)
    candidate = world.best_available(state, exclude=core_id)
    if matched and (candidate is None or world.chip.cores[candidate].speedup <= core.speedup):
        return Decision("stay", pid)

    queue.popleft()
    target = candidate
    if target is None:
        target = most_idle_core([len(q) for q in world.queues], prefer=core_id)
    if target == core_id:
        queue.appendleft(pid)
        return Decision("stay", pid)
    world.queues[target].append(pid)
    ctl.core = target
    ctl.inertia = world.policy.inertia_schedulings
    ctl.pending_stall_ms += world.migration_cost_ms
    ctl.migrations += 1
    return Decision("migrate", pid, target, core_id)


def scheduler_pass(world: World) -> list[Decision]:
    world.handled = set()
    return [schedule_core(c.id, world) for c in world.chip.cores]
