import math

import numpy as np
import pytest

from cel_euler.fields import Grid2D, ScalarField
from cel_euler.presets import random_bandlimited


@pytest.fixture
def grid64():
    return Grid2D(64, 2 * math.pi)


@pytest.fixture
def grid128():
    return Grid2D(128, 2 * math.pi)


def gaussian(grid):
    return ScalarField(grid, np.exp(-grid.radius**2))


def indicator_box(grid, lo1, hi1, lo2, hi2, height=1.0):
    X1, X2 = grid.mesh
    mask = (X1 >= lo1) & (X1 < hi1) & (X2 >= lo2) & (X2 < hi2)
    return ScalarField(grid, height * mask.astype(float))


def field_suite(grid, count=20):
    """Indicators, Gaussians and random band-limited fields, ``count`` in total."""
    out = [
        indicator_box(grid, -1.0, 1.0, -1.0, 1.0),
        indicator_box(grid, -0.5, 1.5, 0.0, 1.0, height=2.0),
        indicator_box(grid, 0.0, 2.0, -2.0, 0.0, height=-3.0),
        gaussian(grid),
        ScalarField(grid, 2.5 * np.exp(-2.0 * grid.radius**2)),
        ScalarField(grid, -np.exp(-0.5 * grid.radius**2)),
    ]
    seed = 0
    while len(out) < count:
        out.append(random_bandlimited(grid, seed=seed, kmax=3))
        seed += 1
    return out[:count]


# ---------------------------------------------------------------- acceptance verdicts

_VERDICTS = {}


class CriterionRecorder:
    """Collects clause outcomes; one verdict line per criterion is printed at the end of the run."""

    def __init__(self, number, title):
        self.number = number
        self.title = title

    def clause(self, label, passed, detail):
        entry = _VERDICTS.setdefault(self.number, {"title": self.title, "clauses": []})
        entry["clauses"].append((label, bool(passed), detail))
        print(f"criterion {self.number} [{label}]: {'PASS' if passed else 'FAIL'} ({detail})")
        return bool(passed)


@pytest.fixture
def criterion():
    return CriterionRecorder


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        entry = _VERDICTS[number]
        ok = all(p for _, p, _ in entry["clauses"])
        tr.write_line(f"CRITERION {number} {'PASS' if ok else 'FAIL'}: {entry['title']}")
        for label, passed, detail in entry["clauses"]:
            tr.write_line(f"    {'pass' if passed else 'FAIL'}  {label}: {detail}")
