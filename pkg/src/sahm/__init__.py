"""Characterization and trace-driven simulation of state-aware heterogeneous multicores."""

from .characterization import (
    IntervalStats,
    TransitionMatrix,
    coverage,
    intervals,
    transition_shares,
    transitions,
    write_characterization,
)
from .chip import (
    ChipConfig,
    CoreSpec,
    Specialization,
    canonical_config,
    enumerate_design_space,
    load_chip,
    realistic_config,
)
from .metrics import SimResult, compute_metrics, sweep
from .scheduler import PolicyConfig, most_idle_core, observed_state, schedule_core, specialty_matches
from .simulator import SimEventLog, SimParams, amdahl_speedup, simulate
from .states import (
    PRESETS,
    CutoffSet,
    StateClassifier,
    classify,
    derive_percentile_cutoffs,
    label,
    load_cutoffs,
)
from .trace import (
    EpochRecord,
    SyntheticSpec,
    Trace,
    empirical_state_fraction,
    generate_trace,
    read_trace,
    spec_like_workload,
    write_trace,
)

__version__ = "0.1.0"
