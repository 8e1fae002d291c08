import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kermab.config import ExperimentConfig, apply_mapping  # noqa: E402


@pytest.fixture
def small_cfg():
    """Short, cheap experiment: 5-agent ring, 30 grid points, 40 rounds."""
    return apply_mapping(ExperimentConfig(), {
        "graph": {"kind": "cycle", "n": 5},
        "env": {"grid_m": 30},
        "gp": {"lambda": 0.04},
        "agent": {"beta_scale": 0.5},
        "sim": {"T": 40, "n_trials": 2},
    })


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """``report(number, title, ok, detail)``: record one criterion line, then assert it."""

    def report(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
