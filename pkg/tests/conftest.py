import numpy as np
import pytest

from armae.dataset import BinaryMatrix

A, B, C = 0, 1, 2


@pytest.fixture
def toy():
    """Four rows over A, B, C: {A,B}, {A,B,C}, {A}, {B,C}."""
    cells = np.array(
        [
            [1, 1, 0],
            [1, 1, 1],
            [1, 0, 0],
            [0, 1, 1],
        ],
        dtype=bool,
    )
    return BinaryMatrix(("A", "B", "C"), cells)


def count_rows(data, items):
    """Row-by-row count, independent of the bitset path used by the library."""
    n = 0
    for row in data.cells.tolist():
        if all(row[i] for i in items):
            n += 1
    return n


def random_matrix(rng, rows, items, density=0.4):
    cells = rng.random((rows, items)) < density
    return BinaryMatrix(tuple(f"i{k}" for k in range(items)), cells)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" in nodeid and report.when in ("call", "setup"):
                if outcome == "skipped" or report.when == "call":
                    lines.append((nodeid.split("::", 1)[1], outcome.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, outcome in sorted(lines):
            label = {"PASSED": "PASS", "FAILED": "FAIL", "SKIPPED": "SKIP"}[outcome]
            terminalreporter.write_line(f"{label:4}  {name}")
