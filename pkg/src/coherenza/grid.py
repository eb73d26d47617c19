"""Grid geometry, the annual rainfall field, 1-hop neighbourhoods and the
spatial mean series.

A grid is a set of land cells on a regular lat/lon lattice. Only land cells
are listed; anything absent from the grid is treated as sea and never
contributes to neighbourhood statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import NegativeRainfall, NonLatticeCoordinate, TooShort

#: coordinates within this many degrees of a lattice node snap onto it
LATTICE_TOL = 1e-6


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Land cells of a regular grid, indexed 0..N-1 in (lat, lon) order.

    Use :meth:`from_coords` to build one from unsorted coordinates; the
    constructor expects canonical input and only validates it.
    """

    lats: np.ndarray
    lons: np.ndarray
    grid_step: float = 1.0

    def __post_init__(self):
        lats = _readonly(self.lats, np.float64)
        lons = _readonly(self.lons, np.float64)
        object.__setattr__(self, "lats", lats)
        object.__setattr__(self, "lons", lons)
        object.__setattr__(self, "grid_step", float(self.grid_step))
        if lats.ndim != 1 or lats.shape != lons.shape:
            raise ValueError("lats and lons must be 1-d arrays of equal length")
        if lats.size == 0:
            raise ValueError("grid has no locations")
        if not self.grid_step > 0:
            raise ValueError("grid_step must be positive")
        if not (np.all(np.isfinite(lats)) and np.all(np.isfinite(lons))):
            raise NonLatticeCoordinate("non-finite coordinate in grid")
        rows, cols = self.lattice_index()
        order = np.lexsort((lons, lats))
        if not np.array_equal(order, np.arange(lats.size)):
            raise ValueError("locations must be sorted by (lat, lon); use GridSpec.from_coords")
        keys = set(zip(rows.tolist(), cols.tolist()))
        if len(keys) != lats.size:
            raise ValueError("two locations share the same (lat, lon)")

    @classmethod
    def from_coords(cls, lats, lons, grid_step=1.0):
        """Sort coordinates canonically and build the grid.

        Returns the grid and the permutation ``order`` such that
        ``grid.lats == np.asarray(lats)[order]``.
        """
        lats = np.asarray(lats, dtype=np.float64)
        lons = np.asarray(lons, dtype=np.float64)
        order = np.lexsort((lons, lats))
        return cls(lats[order], lons[order], grid_step), order

    @classmethod
    def rectangular(cls, n_rows, n_cols, lat0=8.0, lon0=68.0, grid_step=1.0, holes=()):
        """Full ``n_rows x n_cols`` block, minus the (row, col) cells in *holes*."""
        holes = set(holes)
        cells = [(r, c) for r in range(n_rows) for c in range(n_cols) if (r, c) not in holes]
        lats = [lat0 + r * grid_step for r, _ in cells]
        lons = [lon0 + c * grid_step for _, c in cells]
        return cls(lats, lons, grid_step)

    @property
    def n_locations(self):
        return self.lats.size

    @property
    def origin(self):
        return float(self.lats.min()), float(self.lons.min())

    def lattice_index(self):
        """Integer (row, col) lattice position of every location.

        Raises :class:`NonLatticeCoordinate` naming the first cell that is
        further than ``LATTICE_TOL`` degrees from a lattice node.
        """
        lat0, lon0 = self.lats.min(), self.lons.min()
        fr = (self.lats - lat0) / self.grid_step
        fc = (self.lons - lon0) / self.grid_step
        rows = np.rint(fr)
        cols = np.rint(fc)
        off = np.maximum(np.abs(fr - rows), np.abs(fc - cols)) * self.grid_step
        bad = np.flatnonzero(off > LATTICE_TOL)
        if bad.size:
            i = bad[0]
            raise NonLatticeCoordinate(
                f"location ({self.lats[i]}, {self.lons[i]}) is off the {self.grid_step} degree lattice"
            )
        return rows.astype(np.int64), cols.astype(np.int64)

    def same_as(self, other):
        return (
            isinstance(other, GridSpec)
            and self.grid_step == other.grid_step
            and np.array_equal(self.lats, other.lats)
            and np.array_equal(self.lons, other.lons)
        )


@dataclass(frozen=True, eq=False)
class RainfallField:
    """Annual totals (mm), shape ``(n_years, n_locations)``."""

    grid: GridSpec
    first_year: int
    values: np.ndarray

    def __post_init__(self):
        values = _readonly(self.values, np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "first_year", int(self.first_year))
        if values.ndim != 2 or values.shape[1] != self.grid.n_locations:
            raise ValueError(
                f"values shape {values.shape} does not match {self.grid.n_locations} locations"
            )
        if values.shape[0] < 2:
            raise TooShort("a rainfall field needs at least two years")
        if not np.all(np.isfinite(values)):
            raise ValueError("rainfall values must be finite")
        if np.any(values < 0):
            t, s = np.argwhere(values < 0)[0]
            raise NegativeRainfall(
                f"negative rainfall {values[t, s]} in year {self.first_year + t} at location {s}"
            )

    @property
    def n_years(self):
        return self.values.shape[0]

    @property
    def n_locations(self):
        return self.values.shape[1]

    @property
    def years(self):
        return np.arange(self.first_year, self.first_year + self.n_years)

    def with_values(self, values):
        return RainfallField(self.grid, self.first_year, values)

    def same_as(self, other):
        return (
            isinstance(other, RainfallField)
            and self.first_year == other.first_year
            and self.grid.same_as(other.grid)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Moore (8-cell) adjacency restricted to land cells."""

    grid: GridSpec
    adjacency: tuple
    nominal_size: int = 8
    matrix: sparse.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        n = self.grid.n_locations
        rows = np.repeat(np.arange(n), [len(a) for a in self.adjacency])
        cols = np.fromiter((j for a in self.adjacency for j in a), dtype=np.int64, count=rows.size)
        m = sparse.csr_matrix((np.ones(rows.size, dtype=np.int32), (rows, cols)), shape=(n, n))
        object.__setattr__(self, "matrix", m)

    @property
    def degree(self):
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    def neighborhood_table(self):
        """``(N, 9)`` ids of self plus neighbours in ascending order, padded with -1."""
        n = self.grid.n_locations
        table = np.full((n, self.nominal_size + 1), -1, dtype=np.int64)
        for s, adj in enumerate(self.adjacency):
            members = sorted((s, *adj))
            table[s, : len(members)] = members
        return table


def build_neighbor_graph(grid):
    rows, cols = grid.lattice_index()
    where = {(r, c): i for i, (r, c) in enumerate(zip(rows.tolist(), cols.tolist()))}
    adjacency = []
    for r, c in zip(rows.tolist(), cols.tolist()):
        adj = []
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc == 0:
                    continue
                j = where.get((r + dr, c + dc))
                if j is not None:
                    adj.append(j)
        adjacency.append(tuple(sorted(adj)))
    return NeighborGraph(grid, tuple(adjacency))


@dataclass(frozen=True, eq=False)
class AIMRSeries:
    first_year: int
    values: np.ndarray

    @property
    def years(self):
        return np.arange(self.first_year, self.first_year + self.values.size)


def compute_aimr(field):
    """Unweighted spatial mean of every year (no area weighting)."""
    return AIMRSeries(field.first_year, _readonly(field.values.mean(axis=1), np.float64))


def smooth_1hop(field, graph):
    """Replace every cell by the mean over itself and its land neighbours.

    The divisor is ``1 + degree``; sea cells are ignored, never zero-filled.
    The mean is formed as the cell's own value plus the averaged deviations
    of its neighbourhood, so a constant field comes back bit-for-bit. Sums
    accumulate in ascending location id so the result does not depend on
    how the work is split.
    """
    if not field.grid.same_as(graph.grid):
        raise ValueError("field and graph are defined on different grids")
    table = graph.neighborhood_table()
    x = field.values
    dev = np.zeros_like(x)
    count = np.zeros(x.shape[1], dtype=np.int64)
    for k in range(table.shape[1]):
        ids = table[:, k]
        ok = ids >= 0
        dev[:, ok] += x[:, ids[ok]] - x[:, ok]
        count += ok
    return field.with_values(x + dev / count)
