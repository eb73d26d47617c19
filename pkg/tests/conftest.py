import numpy as np
import pytest

from coherenza import GridSpec, RainfallField


def random_grid(rng, max_side=5, hole_frac=0.25):
    rows = int(rng.integers(2, max_side + 1))
    cols = int(rng.integers(2, max_side + 1))
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    holes = [cell for cell in cells if rng.random() < hole_frac]
    if len(holes) >= len(cells) - 1:
        holes = holes[:-2]
    return GridSpec.rectangular(rows, cols, holes=holes)


def random_field(rng, max_side=5, max_years=50, integer=False, ties=0.0):
    """Random field on a holey grid; *ties* is the chance a cell repeats last year's value."""
    grid = random_grid(rng, max_side)
    n_years = int(rng.integers(3, max_years + 1))
    if integer:
        values = rng.integers(0, 6, size=(n_years, grid.n_locations)).astype(float)
    else:
        values = rng.gamma(4.0, 250.0, size=(n_years, grid.n_locations))
    if ties:
        rep = rng.random(values.shape) < ties
        rep[0] = False
        for t in range(1, n_years):
            values[t, rep[t]] = values[t - 1, rep[t]]
    return RainfallField(grid, 1901, values)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid3():
    return GridSpec.rectangular(3, 3)


@pytest.fixture
def grid5_holes():
    # 5x5 with a notch of sea on the east coast and one inland lake
    return GridSpec.rectangular(5, 5, holes=[(0, 4), (1, 4), (2, 4), (2, 2)])
