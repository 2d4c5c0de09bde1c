from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from mtsparse.core import CouplingGraph, Edge, MultiTaskDataset, TaskDataset

DATA = Path(__file__).parent / "data"


def random_instance(rng: np.random.Generator, d: int, c: int, m_max: int, scale: float = 1.0):
    """Random dataset, weight matrix and coupling graph."""
    tasks = []
    for _ in range(c):
        m = int(rng.integers(1, m_max + 1))
        x = rng.standard_normal((m, d))
        y = np.where(rng.random(m) < 0.5, -1, 1)
        tasks.append(TaskDataset(x, y))
    ds = MultiTaskDataset(tuple(tasks), tuple(f"t{k}" for k in range(c)), tuple(f"f{k}" for k in range(d)))
    w = scale * rng.standard_normal((d, c))
    edges = [Edge(i, j, float(rng.uniform(0.1, 3.0))) for i in range(c) for j in range(i + 1, c) if rng.random() < 0.6]
    return ds, w, CouplingGraph(tuple(edges))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_ds():
    x1 = np.array([[1.0, 0.0, 2.0], [0.5, -1.0, 0.0]])
    x2 = np.array([[0.0, 1.0, 1.0], [2.0, 2.0, -1.0], [1.0, 0.0, 0.0]])
    return MultiTaskDataset(
        (TaskDataset(x1, [1, -1]), TaskDataset(x2, [-1, 1, 1])),
        ("LI", "FS"),
        ("job", "food", "rent"),
    )


@pytest.fixture
def data_dir():
    return DATA


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
