import numpy as np
import pytest

from rainmrf.grid import build_grid, rect_grid
from rainmrf.ingest import RainfallDataset

ACCEPTANCE_LINES = []


def make_dataset(y, rows=None, cols=None, coords=None, start_year=2000):
    y = np.asarray(y, dtype=float)
    if coords is None:
        grid = rect_grid(rows, cols) if rows else rect_grid(1, y.shape[0])
    else:
        grid = build_grid(coords)
    return RainfallDataset(grid, np.arange(start_year, start_year + y.shape[1]), y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
