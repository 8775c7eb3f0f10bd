"""Named experiment presets built from the public library operations.

Each preset takes a list of traces (read from disk or synthesized) and
writes its tables under an output directory:

``limit-study``
    every trace alone on ``canonical30``, oracle policy, no migration cost.
``breadth``
    every trace alone on each of the 255 specialized design-space chips.
``generalist-vs-specialized``
    every trace alone on canonical chips whose branch core gives 30%, 10%
    and 0%, next to a uniform 5% generalist core as a reference row.
``realistic-ladder``
    the whole workload on ``realistic39`` under increasingly realistic
    scheduling constraints.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .chip import canonical_config, enumerate_design_space, load_chip
from .metrics import SWEEP_COLUMNS, SimResult, distribution_table, summarize, sweep, sweep_rows, write_table
from .scheduler import PolicyConfig
from .simulator import SimParams, amdahl_speedup
from .states import LOW_STATE, CutoffSet
from .trace import Trace, empirical_state_fraction, spec_like_workload

PRESET_NAMES = ("limit-study", "breadth", "generalist-vs-specialized", "realistic-ladder")
DEFAULT_SEED = 0
DEFAULT_LEVELS = (0.1, 0.2, 0.3)
GENERALIST_SPEEDUP = 0.05
BRANCH_VARIANTS = (0.3, 0.1, 0.0)
LADDER = (
    ("oracle", 0.0),
    ("greedy", 0.0),
    ("greedy", 1.0),
    ("inertia", 1.0),
    ("inertia", 5.0),
    ("inertia", 9.0),
)


def synthetic_workload(cutoffs: CutoffSet, n_traces: int = 39, n_epochs: int = 600, seed: int = DEFAULT_SEED,
                       epoch_ms: int = 100) -> list[Trace]:
    """The default SPEC-like stand-in: 8% Low, 84% self-transitions."""
    return spec_like_workload(n_traces, cutoffs, n_epochs=n_epochs, seed=seed, epoch_ms=epoch_ms)


def _solo(traces: Sequence[Trace]) -> list[tuple[str, list[Trace]]]:
    return [(t.name, [t]) for t in traces]


def limit_study(traces, cutoffs, params: SimParams = SimParams(), workers=None) -> list[SimResult]:
    oracle = PolicyConfig.parse("oracle")
    return sweep(_solo(traces), [load_chip("canonical30")], [oracle], [0.0], cutoffs, params, workers)


def limit_study_rows(traces, results: Sequence[SimResult], cutoffs) -> list[dict]:
    chip = load_chip("canonical30")
    rows = []
    for t, r in zip(traces, results):
        frac = empirical_state_fraction(t, cutoffs)
        app = r.apps[0]
        rows.append({
            "application": t.name,
            "speedup": app.speedup,
            "first_pass_speedup": app.first_pass_speedup,
            "amdahl_speedup": amdahl_speedup(frac, chip),
            "non_low_share": float(1.0 - frac[LOW_STATE]),
            "epoch_utilization": app.epoch_utilization,
        })
    return rows


def breadth(traces, cutoffs, params: SimParams = SimParams(), levels=DEFAULT_LEVELS, workers=None) -> list[SimResult]:
    chips = enumerate_design_space(levels)[1:]
    oracle = PolicyConfig.parse("oracle")
    return sweep(_solo(traces), chips, [oracle], [0.0], cutoffs, params, workers)


def generalist_vs_specialized(traces, cutoffs, params: SimParams = SimParams(), workers=None) -> list[SimResult]:
    chips = [canonical_config([b, 0.3, 0.3, 0.3]) for b in BRANCH_VARIANTS]
    oracle = PolicyConfig.parse("oracle")
    return sweep(_solo(traces), chips, [oracle], [0.0], cutoffs, params, workers)


def generalist_row(n_apps: int) -> dict:
    """A core that is uniformly faster runs every program at the same speedup."""
    return {"chip": f"generalist{round(GENERALIST_SPEEDUP * 100):d}", "n": n_apps,
            **summarize(np.full(n_apps, 1.0 + GENERALIST_SPEEDUP))}


def realistic_ladder(traces, cutoffs, params: SimParams = SimParams(), chip="realistic39", ladder=LADDER,
                     workload_name: str = "workload", workers=None) -> list[SimResult]:
    chip = load_chip(chip)
    out = []
    for policy, cost in ladder:
        out += sweep([(workload_name, list(traces))], [chip], [PolicyConfig.parse(policy)], [cost], cutoffs, params,
                     workers)
    return out


def ladder_rows(results: Sequence[SimResult]) -> list[dict]:
    """Sweep rows plus the gap to the first (ideal) rung in percentage points."""
    rows = sweep_rows(results)
    ideal = rows[0]["system_speedup"]
    for r in rows:
        r["gap_to_ideal_pp"] = (ideal - r["system_speedup"]) * 100.0
    return rows


def run_preset(name: str, traces: Sequence[Trace], cutoffs: CutoffSet, out_dir, params: SimParams = SimParams(),
               fmt: str = "csv", workers=None) -> list[Path]:
    """Run one preset and write ``sweep.<fmt>`` plus the preset's own table."""
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; expected one of {', '.join(PRESET_NAMES)}")
    if not traces:
        raise ValueError("preset needs at least one trace")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = name.replace("-", "_")
    if name == "limit-study":
        results = limit_study(traces, cutoffs, params, workers)
        table = limit_study_rows(traces, results, cutoffs)
    elif name == "breadth":
        results = breadth(traces, cutoffs, params, workers=workers)
        table = distribution_table(results, by="app")
    elif name == "generalist-vs-specialized":
        results = generalist_vs_specialized(traces, cutoffs, params, workers)
        table = distribution_table(results, by="chip") + [generalist_row(len(traces))]
    else:
        results = realistic_ladder(traces, cutoffs, params, workers=workers)
        table = ladder_rows(results)
    return [
        write_table(sweep_rows(results), out / f"sweep.{fmt}", fmt, SWEEP_COLUMNS),
        write_table(table, out / f"{stem}.{fmt}", fmt),
    ]
