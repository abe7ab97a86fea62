from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
FIXTURES = HERE / "fixtures"
sys.path.insert(0, str(HERE))

from spmdiag.roughset import DecisionTable  # noqa: E402
from spmdiag.trace.generator import generate  # noqa: E402
from spmdiag.trace.presets import presets  # noqa: E402


def load_table(name: str) -> DecisionTable:
    return DecisionTable.from_csv((FIXTURES / f"{name}.csv").read_text())


def load_reference_matrix(name: str) -> dict[tuple, frozenset]:
    doc = json.loads((FIXTURES / f"{name}.json").read_text())
    return {tuple(int(x) for x in k.split(",")): frozenset(v) for k, v in doc["entries"].items()}


@functools.lru_cache(maxsize=None)
def generated(name: str):
    """(dataset, ground truth) for a shipped preset, generated once per session."""
    return generate(presets()[name])


@pytest.fixture
def st():
    return generated("st")


# acceptance lines are collected here and echoed after the run
ACCEPTANCE: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=int):
            terminalreporter.write_line(ACCEPTANCE[key])
