from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from sahm.states import PRESETS
from sahm.trace import read_trace

DATA = Path(__file__).parent / "data"

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def intuitive():
    return PRESETS["intuitive"]


@pytest.fixture
def fixture12():
    return read_trace(DATA / "fixture12.csv")


# -- acceptance summary: one PASS/FAIL line per criterion ----------------------------


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", "call") != "call" and key != "error":
                continue
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" not in props:
                continue
            verdict = "PASS" if rep.passed else "FAIL"
            lines.append((props["criterion"], f"{props['criterion']:<5} {verdict}  {props.get('measured', '')}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines, key=lambda x: x[0]):
            terminalreporter.write_line(line)
