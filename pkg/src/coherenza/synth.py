"""Synthetic rainfall fields with known statistical structure.

Each location follows a stationary AR(1) process in standardised units,
driven by innovations that are spatially mixed with a Gaussian kernel:

    z[s, t]  iid N(0, 1), drawn location-major (all years of location 0 first)
    e[:, t]  = W @ z[:, t]          (W rows scaled to unit norm, W = I at length 0)
    x[:, 0]  = e[:, 0]
    x[:, t]  = r * x[:, t-1] + sqrt(1 - r^2) * e[:, t]
    rain     = max(0, base_mean + base_sd * x + planted terms)

Planted clusters add ``sign * amplitude * base_sd * c[t]`` to every cell of
the block, where ``c`` is a block-specific N(0, 1) driver drawn after ``z``
in the order the clusters are listed. Cells sharing a driver have
co-occurring extremes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec, RainfallField


@dataclass(frozen=True)
class PlantedCluster:
    cells: tuple
    amplitude: float
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


@dataclass(frozen=True)
class SynthConfig:
    n_rows: int = 5
    n_cols: int = 5
    n_years: int = 50
    base_mean: float = 1000.0
    base_sd: float = 200.0
    lag1_corr: float = -0.2
    spatial_corr_len: float = 1.0
    seed: int = 0
    planted_clusters: tuple = ()
    first_year: int = 1901
    lat0: float = 8.0
    lon0: float = 68.0

    def __post_init__(self):
        object.__setattr__(self, "planted_clusters", tuple(self.planted_clusters))
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError("grid must have at least one row and column")
        if self.n_years < 2:
            raise ValueError("n_years must be at least 2")
        if not self.base_sd > 0:
            raise ValueError("base_sd must be positive")
        if not -1 < self.lag1_corr < 1:
            raise ValueError("lag1_corr must lie in (-1, 1)")
        if self.spatial_corr_len < 0:
            raise ValueError("spatial_corr_len must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        n = self.n_rows * self.n_cols
        for pc in self.planted_clusters:
            if any(not 0 <= c < n for c in pc.cells):
                raise ValueError(f"planted cluster cell outside the {n}-cell grid")


@dataclass(frozen=True, eq=False)
class SynthMeta:
    clamp_rate: float
    drivers: np.ndarray = field(repr=False)


def mixing_matrix(grid, length):
    """Row-normalised Gaussian kernel on lattice distance (cells)."""
    n = grid.n_locations
    if length == 0:
        return np.eye(n)
    rows, cols = grid.lattice_index()
    d2 = (rows[:, None] - rows[None, :]) ** 2 + (cols[:, None] - cols[None, :]) ** 2
    w = np.exp(-d2 / (2.0 * length**2))
    return w / np.sqrt((w**2).sum(axis=1, keepdims=True))


def generate_synthetic_with_meta(config):
    grid = GridSpec.rectangular(config.n_rows, config.n_cols, config.lat0, config.lon0)
    n, n_years = grid.n_locations, config.n_years
    rng = np.random.default_rng(config.seed)
    z = rng.standard_normal((n, n_years))
    drivers = rng.standard_normal((len(config.planted_clusters), n_years))

    e = mixing_matrix(grid, config.spatial_corr_len) @ z
    r = config.lag1_corr
    innov = np.sqrt(1.0 - r * r)
    x = np.empty_like(e)
    x[:, 0] = e[:, 0]
    for t in range(1, n_years):
        x[:, t] = r * x[:, t - 1] + innov * e[:, t]

    raw = config.base_mean + config.base_sd * x
    for pc, c in zip(config.planted_clusters, drivers):
        raw[list(pc.cells), :] += pc.sign * pc.amplitude * config.base_sd * c
    clamped = raw < 0
    values = np.where(clamped, 0.0, raw).T
    meta = SynthMeta(clamp_rate=float(clamped.mean()), drivers=drivers)
    return RainfallField(grid, config.first_year, values), meta


def generate_synthetic(config):
    """Deterministic synthetic :class:`RainfallField` for *config*."""
    return generate_synthetic_with_meta(config)[0]


_KEYS = {
    "seed": ("seed", int),
    "rows": ("n_rows", int),
    "cols": ("n_cols", int),
    "years": ("n_years", int),
    "mean": ("base_mean", float),
    "sd": ("base_sd", float),
    "lag1": ("lag1_corr", float),
    "corr_len": ("spatial_corr_len", float),
    "first_year": ("first_year", int),
}


def config_from_tokens(tokens):
    """Parse ``key=value`` tokens such as ``seed=7 rows=5`` into a config."""
    kwargs = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or key not in _KEYS:
            raise ValueError(f"bad synthetic parameter {tok!r}; known keys: {', '.join(_KEYS)}")
        name, conv = _KEYS[key]
        try:
            kwargs[name] = conv(value)
        except ValueError:
            raise ValueError(f"bad value in {tok!r}") from None
    return SynthConfig(**kwargs)
