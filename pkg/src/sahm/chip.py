"""Cores, chips and the specialized-chip design space."""

from __future__ import annotations

import enum
import itertools
import json
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence


class Specialization(enum.IntEnum):
    """Component a core is built around; the value is the state bit it serves."""

    BRANCH = 0
    L1I = 1
    L1D = 2
    L2 = 3

    @property
    def key(self) -> str:
        return self.name.lower()


_SHORT = {None: "B", Specialization.BRANCH: "Br", Specialization.L1I: "L1I",
          Specialization.L1D: "L1D", Specialization.L2: "L2"}
_BY_KEY = {"baseline": None, **{s.key: s for s in Specialization}}


def parse_specialization(text) -> "Specialization | None":
    if text is None or isinstance(text, Specialization):
        return text
    key = str(text).strip().lower()
    if key not in _BY_KEY:
        raise ValueError(f"unknown specialization {text!r}; expected one of {sorted(_BY_KEY)}")
    return _BY_KEY[key]


@dataclass(frozen=True)
class CoreSpec:
    id: int
    specialization: "Specialization | None" = None
    speedup: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.speedup) or self.speedup < 0:
            raise ValueError(f"core {self.id}: speedup must be finite and >= 0, got {self.speedup!r}")
        if self.specialization is None and self.speedup != 0:
            raise ValueError(f"core {self.id}: a baseline core cannot carry a speedup")

    @property
    def is_baseline(self) -> bool:
        return self.specialization is None

    @property
    def rate(self) -> float:
        """Work rate while running a matched state."""
        return 1.0 + self.speedup


def _pct(speedup: float) -> str:
    return f"{round(speedup * 100, 6):g}"


def _token(spec, speedup: float, count: int) -> str:
    short = _SHORT[spec]
    body = short if spec is None else short + ("_" if short[-1].isdigit() else "") + _pct(speedup)
    return body if count == 1 else f"{count}x{body}"


@dataclass(frozen=True)
class ChipConfig:
    name: str
    cores: tuple[CoreSpec, ...]

    def __post_init__(self):
        cores = tuple(self.cores)
        if not cores:
            raise ValueError("a chip needs at least one core")
        if [c.id for c in cores] != list(range(len(cores))):
            raise ValueError("core ids must be dense from 0 in order")
        object.__setattr__(self, "cores", cores)

    @classmethod
    def from_groups(cls, groups: Iterable[tuple], name: "str | None" = None) -> "ChipConfig":
        """Build from ``(specialization, speedup, count)`` groups in order."""
        cores, tokens = [], []
        for spec, speedup, count in groups:
            spec = parse_specialization(spec)
            speedup = float(speedup)
            if spec is None and speedup != 0:
                raise ValueError(f"a baseline group cannot carry a speedup (got {speedup!r})")
            if count < 0:
                raise ValueError("group count must be >= 0")
            if count == 0:
                continue
            tokens.append(_token(spec, speedup, count))
            for _ in range(count):
                cores.append(CoreSpec(len(cores), spec, speedup))
        return cls(name or "+".join(tokens), tuple(cores))

    def __len__(self):
        return len(self.cores)

    @property
    def max_speedup(self) -> float:
        return max(c.speedup for c in self.cores)

    def to_groups(self) -> list[dict]:
        groups: list[dict] = []
        for c in self.cores:
            key = "baseline" if c.specialization is None else c.specialization.key
            if groups and groups[-1]["specialization"] == key and groups[-1]["speedup"] == c.speedup:
                groups[-1]["count"] += 1
            else:
                groups.append({"specialization": key, "speedup": c.speedup, "count": 1})
        return groups


def enumerate_design_space(speedup_levels: Iterable[float]) -> list[ChipConfig]:
    """Baseline-only chip plus every 1-baseline + unique-specialization chip.

    For each nonempty subset of the four specializations, each specialized
    core independently takes one of the speedup levels.
    """
    levels = sorted({float(x) for x in speedup_levels})
    if not levels:
        raise ValueError("at least one speedup level is required")
    if any(not math.isfinite(x) or x < 0 for x in levels):
        raise ValueError("speedup levels must be finite and >= 0")
    configs = [ChipConfig.from_groups([(None, 0.0, 1)])]
    specs = list(Specialization)
    for k in range(1, len(specs) + 1):
        for subset in itertools.combinations(specs, k):
            for assignment in itertools.product(levels, repeat=k):
                groups = [(None, 0.0, 1)] + [(s, a, 1) for s, a in zip(subset, assignment)]
                configs.append(ChipConfig.from_groups(groups))
    return configs


def design_space_size(n_levels: int) -> int:
    return 1 + sum(math.comb(4, k) * n_levels**k for k in range(1, 5))


def _per_spec(speedups) -> list[float]:
    if isinstance(speedups, (int, float)):
        return [float(speedups)] * 4
    vals = [float(s) for s in speedups]
    if len(vals) != 4:
        raise ValueError("expected 4 speedups ordered branch, l1i, l1d, l2")
    return vals


def canonical_config(speedups: "Sequence[float] | float") -> ChipConfig:
    """One baseline core and one core per specialization (branch, l1i, l1d, l2)."""
    s = _per_spec(speedups)
    return ChipConfig.from_groups([(None, 0.0, 1)] + [(spec, s[spec], 1) for spec in Specialization])


def realistic_config(per_spec_count: int, baseline_count: int, speedup: "Sequence[float] | float") -> ChipConfig:
    """``baseline_count`` baseline cores, then ``per_spec_count`` of each specialization."""
    if per_spec_count < 0 or baseline_count < 0:
        raise ValueError("core counts must be >= 0")
    if per_spec_count * 4 + baseline_count == 0:
        raise ValueError("empty chip")
    s = _per_spec(speedup)
    return ChipConfig.from_groups(
        [(None, 0.0, baseline_count)] + [(spec, s[spec], per_spec_count) for spec in Specialization]
    )


CHIP_PRESETS = {
    "canonical30": lambda: canonical_config(0.30),
    "realistic39": lambda: realistic_config(8, 7, 0.30),
}


def load_chip(spec: "str | os.PathLike | ChipConfig") -> ChipConfig:
    """Preset name, or a JSON file holding a list of core groups."""
    if isinstance(spec, ChipConfig):
        return spec
    key = os.fspath(spec)
    if key in CHIP_PRESETS:
        return CHIP_PRESETS[key]()
    if not os.path.exists(key):
        raise ValueError(f"unknown chip preset or missing file: {key!r} (presets: {', '.join(CHIP_PRESETS)})")
    with open(key, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{key}: invalid JSON: {exc}") from None
    if not isinstance(data, list):
        raise ValueError(f"{key}: expected a JSON list of core groups")
    groups = []
    for i, g in enumerate(data):
        if not isinstance(g, dict) or "specialization" not in g:
            raise ValueError(f"{key}: group {i} must be an object with a 'specialization' key")
        count = g.get("count", 1)
        if isinstance(count, bool) or not isinstance(count, int):
            raise ValueError(f"{key}: group {i}: count must be an integer")
        try:
            groups.append((parse_specialization(g["specialization"]), float(g.get("speedup", 0.0)), count))
        except ValueError as exc:
            raise ValueError(f"{key}: group {i}: {exc}") from None
    return ChipConfig.from_groups(groups)


def write_chip(chip: ChipConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(chip.to_groups(), fh, indent=2)
        fh.write("\n")
