"""Reading and writing gridded annual rainfall.

Two formats are supported:

* CSV, the interchange format. Header ``year,lat,lon,rain_mm`` with one row
  per (year, location), or ``year,month,lat,lon,rain_mm`` with monthly
  totals that are summed to annual values on read. Numbers are written with
  at most six fractional digits, trailing zeros trimmed, so a field only
  round-trips exactly when its values are already on that 1e-6 grid.
* A little-endian binary format for bit-exact storage::

      b"RGRD" 0x01
      u32 n_locations, u32 n_years, i32 first_year, f64 grid_step
      n_locations x (f64 lat, f64 lon)
      n_years x n_locations f64 values, year-major
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    InputError,
    MissingCell,
    NegativeRainfall,
    NonContiguousYears,
    TooShort,
    TruncatedFile,
    VersionMismatch,
)
from .grid import GridSpec, RainfallField

MAGIC = b"RGRD"
FORMAT_VERSION = 1
_HEAD = struct.Struct("<4sBIIid")

ANNUAL_HEADER = ["year", "lat", "lon", "rain_mm"]
MONTHLY_HEADER = ["year", "month", "lat", "lon", "rain_mm"]


@dataclass(frozen=True)
class DatasetHeader:
    format_version: int
    n_locations: int
    n_years: int
    first_year: int
    grid_step: float


def format_number(x):
    """Fixed point with up to 6 fractional digits, trailing zeros trimmed."""
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def _parse_float(text, what, lineno, path):
    try:
        v = float(text)
    except ValueError:
        raise InputError(f"{path}:{lineno}: cannot parse {what} {text!r}") from None
    if not np.isfinite(v):
        raise InputError(f"{path}:{lineno}: non-finite {what} {text!r}")
    return v


def read_csv(path, grid_step=1.0):
    """Load a CSV file into a :class:`RainfallField`.

    Locations are sorted by (lat, lon). Every (year, location) pair must be
    present, years must be contiguous, and monthly files must carry all
    twelve months for every pair.
    """
    path = Path(path)
    cells = {}
    months_seen = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if header == ANNUAL_HEADER:
            monthly = False
        elif header == MONTHLY_HEADER:
            monthly = True
        else:
            raise InputError(f"{path}: unexpected header {','.join(header)}")
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise InputError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
            try:
                year = int(row[0])
            except ValueError:
                raise InputError(f"{path}:{lineno}: cannot parse year {row[0]!r}") from None
            if monthly:
                try:
                    month = int(row[1])
                except ValueError:
                    raise InputError(f"{path}:{lineno}: cannot parse month {row[1]!r}") from None
                if not 1 <= month <= 12:
                    raise InputError(f"{path}:{lineno}: month {month} out of range")
                row = row[:1] + row[2:]
            lat = _parse_float(row[1], "lat", lineno, path)
            lon = _parse_float(row[2], "lon", lineno, path)
            rain = _parse_float(row[3], "rain_mm", lineno, path)
            if rain < 0:
                raise NegativeRainfall(
                    f"{path}:{lineno}: negative rainfall {row[3]} for year {year} at ({row[1]}, {row[2]})"
                )
            key = (year, lat, lon)
            if monthly:
                seen = months_seen.setdefault(key, set())
                if month in seen:
                    raise InputError(f"{path}:{lineno}: duplicate record for {year}-{month:02d} at ({lat}, {lon})")
                seen.add(month)
                cells[key] = cells.get(key, 0.0) + rain
            else:
                if key in cells:
                    raise InputError(f"{path}:{lineno}: duplicate record for year {year} at ({lat}, {lon})")
                cells[key] = rain

    if not cells:
        raise InputError(f"{path}: no data rows")
    years = sorted({k[0] for k in cells})
    for a, b in zip(years, years[1:]):
        if b != a + 1:
            raise NonContiguousYears(f"{path}: years jump from {a} to {b}")
    coords = sorted({(k[1], k[2]) for k in cells})
    try:
        grid, _ = GridSpec.from_coords([c[0] for c in coords], [c[1] for c in coords], grid_step)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    values = np.empty((len(years), grid.n_locations))
    for t, y in enumerate(years):
        for s, (lat, lon) in enumerate(zip(grid.lats.tolist(), grid.lons.tolist())):
            key = (y, lat, lon)
            if key not in cells:
                raise MissingCell(f"{path}: no record for year {y} at ({lat}, {lon})")
            if monthly and len(months_seen[key]) != 12:
                missing = sorted(set(range(1, 13)) - months_seen[key])
                raise MissingCell(f"{path}: year {y} at ({lat}, {lon}) lacks months {missing}")
            values[t, s] = cells[key]
    return RainfallField(grid, years[0], values)


def write_csv(field, path):
    """Write the annual CSV form, rows ordered by year then location id."""
    lats = [format_number(v) for v in field.grid.lats.tolist()]
    lons = [format_number(v) for v in field.grid.lons.tolist()]
    lines = [",".join(ANNUAL_HEADER)]
    for t, year in enumerate(field.years.tolist()):
        row = field.values[t].tolist()
        lines.extend(f"{year},{la},{lo},{format_number(v)}" for la, lo, v in zip(lats, lons, row))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def write_binary(field, path):
    grid = field.grid
    head = _HEAD.pack(MAGIC, FORMAT_VERSION, grid.n_locations, field.n_years, field.first_year, grid.grid_step)
    coords = np.column_stack([grid.lats, grid.lons]).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(coords.tobytes())
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def _parse_header(buf, path):
    if len(buf) < len(MAGIC):
        raise TruncatedFile(f"{path}: {len(buf)} bytes is too short for a header")
    if buf[:4] != MAGIC:
        raise BadMagic(f"{path}: magic {buf[:4]!r} is not {MAGIC!r}")
    if len(buf) < 5:
        raise TruncatedFile(f"{path}: header ends before the version byte")
    if buf[4] != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format version {buf[4]}, expected {FORMAT_VERSION}")
    if len(buf) < _HEAD.size:
        raise TruncatedFile(f"{path}: header is {len(buf)} of {_HEAD.size} bytes")
    _, version, n_loc, n_years, first_year, step = _HEAD.unpack_from(buf)
    return DatasetHeader(version, n_loc, n_years, first_year, step)


def read_header(path):
    with open(path, "rb") as fh:
        return _parse_header(fh.read(_HEAD.size), path)


def read_binary(path):
    buf = Path(path).read_bytes()
    head = _parse_header(buf, path)
    n, t = head.n_locations, head.n_years
    need = _HEAD.size + 16 * n + 8 * n * t
    if len(buf) < need:
        raise TruncatedFile(f"{path}: expected {need} bytes, found {len(buf)}")
    if len(buf) > need:
        raise InputError(f"{path}: {len(buf) - need} trailing bytes after the value block")
    coords = np.frombuffer(buf, dtype="<f8", count=2 * n, offset=_HEAD.size).reshape(n, 2)
    values = np.frombuffer(buf, dtype="<f8", count=n * t, offset=_HEAD.size + 16 * n).reshape(t, n)
    try:
        grid = GridSpec(coords[:, 0], coords[:, 1], head.grid_step)
        return RainfallField(grid, head.first_year, values)
    except (ValueError, TooShort) as exc:
        raise InputError(f"{path}: {exc}") from None


def read_field(path, fmt=None, grid_step=1.0):
    """Dispatch on *fmt* (``"csv"`` or ``"bin"``), or on the file suffix."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "bin"
    if fmt == "csv":
        return read_csv(path, grid_step=grid_step)
    if fmt == "bin":
        return read_binary(path)
    raise ValueError(f"unknown format {fmt!r}")
