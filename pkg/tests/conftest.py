from pathlib import Path

import pytest

from fracdesign.design import DesignTable

DATA = Path(__file__).parent / "data"

# A minimum aberration 2^(7-3) design, rows in a scrambled run order.
MA_16_7_ROWS = [
    (1, -1, -1, -1, 1, 1, 1),
    (-1, -1, -1, 1, -1, 1, 1),
    (-1, -1, -1, -1, -1, -1, -1),
    (-1, 1, 1, -1, -1, 1, 1),
    (1, -1, 1, 1, -1, -1, 1),
    (-1, -1, 1, 1, 1, 1, -1),
    (-1, 1, 1, 1, -1, -1, -1),
    (1, 1, 1, 1, 1, 1, 1),
    (-1, 1, -1, 1, 1, -1, 1),
    (1, -1, -1, 1, 1, -1, -1),
    (1, 1, -1, -1, -1, -1, 1),
    (1, 1, 1, -1, 1, -1, -1),
    (-1, -1, 1, -1, 1, -1, 1),
    (1, 1, -1, 1, -1, 1, -1),
    (-1, 1, -1, -1, 1, 1, -1),
    (1, -1, 1, -1, -1, 1, -1),
]

# The 2^(4-1) half fraction with D = ABC.
HALF_FRACTION_ROWS = [
    (-1, -1, -1, -1),
    (1, -1, -1, 1),
    (-1, 1, -1, 1),
    (1, 1, -1, -1),
    (-1, -1, 1, 1),
    (1, -1, 1, -1),
    (-1, 1, 1, -1),
    (1, 1, 1, 1),
]


@pytest.fixture
def ma_16_7():
    return DesignTable(tuple(MA_16_7_ROWS))


@pytest.fixture
def half_fraction():
    return DesignTable(tuple(HALF_FRACTION_ROWS))


@pytest.fixture(scope="session")
def grid_fixtures(tmp_path_factory):
    """Mock responses for the whole benchmark grid (best designs from short searches)."""
    from fracdesign.harness.benchmark import benchmark_grid
    from fracdesign.harness.fixtures import write_mock_fixtures

    directory = tmp_path_factory.mktemp("fixtures")
    write_mock_fixtures(directory, benchmark_grid())
    return directory
