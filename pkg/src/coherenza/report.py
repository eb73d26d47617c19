"""Writers for tables, per-location maps (GeoJSON + SVG) and histograms.

Output is deterministic: fixed key order, fixed number formatting, no
timestamps, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidBins
from .io import format_number
from .tables import Bins

CELL_PX = 12
NODATA_COLOR = "lightgrey"
CLUSTER_PALETTE = (
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4",
    "#42d4f4", "#f032e6", "#bfef45", "#469990", "#9a6324",
    "#800000", "#808000", "#000075", "#fabed4", "#ffe119",
)


def clean(obj):
    """Recursively convert numpy scalars/arrays to Python and NaN to None."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if math.isnan(v) else v
    return obj


def dump_json(obj, path):
    text = json.dumps(clean(obj), indent=2, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else format_number(float(v))
    return str(v)


def write_table(path, header, rows):
    """CSV with LF endings; NaN cells are left empty."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_columns(path, header, columns):
    write_table(path, header, zip(*columns))


def write_conditional_table(path, table, grid=None):
    names, cols = table.columns()
    if grid is None or table.n_rows == 1:
        write_columns(path, names, cols)
    else:
        ids = np.arange(grid.n_locations)
        write_columns(path, ["location_id", "lat", "lon"] + names, [ids, grid.lats, grid.lons] + cols)


def classify(values, bins):
    if not isinstance(bins, Bins):
        raise InvalidBins("expected a Bins instance")
    idx = bins.assign(values)
    labels = [bins.labels[i] if i >= 0 else None for i in idx.tolist()]
    colors = [(bins.colors[i] if bins.colors else None) if i >= 0 else None for i in idx.tolist()]
    return labels, colors


def geojson_points(grid, properties):
    """FeatureCollection of one Point per location; *properties* is a list of dicts."""
    features = []
    for s, (lat, lon, props) in enumerate(zip(grid.lats.tolist(), grid.lons.tolist(), properties)):
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [lon, lat]},
            "properties": {"location_id": s, **props},
        })
    return {"type": "FeatureCollection", "features": features}


def svg_cells(grid, colors, title="", legend=()):
    """Plate-carree map: one square per grid cell filled with its colour."""
    step = grid.grid_step
    lat_max, lon_min = grid.lats.max(), grid.lons.min()
    cols = np.rint((grid.lons - lon_min) / step).astype(int)
    rows = np.rint((lat_max - grid.lats) / step).astype(int)
    top = 20 if title else 4
    width = (cols.max() + 1) * CELL_PX + 8
    height = top + (rows.max() + 1) * CELL_PX + 8 + 16 * len(legend)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="4" y="14" font-family="sans-serif" font-size="12">{title}</text>')
    for r, c, color in zip(rows.tolist(), cols.tolist(), colors):
        out.append(
            f'<rect x="{4 + c * CELL_PX}" y="{top + r * CELL_PX}" width="{CELL_PX}" '
            f'height="{CELL_PX}" fill="{color or NODATA_COLOR}" stroke="white" stroke-width="0.5"/>'
        )
    y = top + (rows.max() + 1) * CELL_PX + 8
    for label, color in legend:
        out.append(f'<rect x="4" y="{y}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="18" y="{y + 9}" font-family="sans-serif" font-size="10">{label}</text>')
        y += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_classification_map(grid, values, bins, geojson_path=None, svg_path=None, title=""):
    """Bin per-location values and write them as GeoJSON points and an SVG map.

    Returns the GeoJSON dictionary. Bins are lower-inclusive,
    upper-exclusive, with the topmost bin closed.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (grid.n_locations,):
        raise ValueError("one value per location is required")
    labels, colors = classify(values, bins)
    props = [
        {"value": v, "bin": lab, "color": col}
        for v, lab, col in zip(values.tolist(), labels, colors)
    ]
    gj = geojson_points(grid, props)
    if geojson_path is not None:
        dump_json(gj, geojson_path)
    if svg_path is not None:
        legend = list(zip(bins.labels, bins.colors)) if bins.colors else []
        Path(svg_path).write_text(svg_cells(grid, colors, title, legend), encoding="utf-8")
    return gj


def emit_cluster_outputs(grid, assignment, csv_path=None, geojson_path=None, svg_path=None, title=""):
    """Cluster labels per location; only selected clusters are coloured on the map."""
    labels = assignment.labels
    selected = assignment.selected if assignment.selected is not None else np.ones(assignment.k, bool)
    sel = selected[labels]
    if csv_path is not None:
        write_columns(
            csv_path,
            ["location_id", "lat", "lon", "label", "selected"],
            [np.arange(grid.n_locations), grid.lats, grid.lons, labels, sel],
        )
    props = [{"label": int(lab), "selected": bool(s)} for lab, s in zip(labels.tolist(), sel.tolist())]
    gj = geojson_points(grid, props)
    if geojson_path is not None:
        dump_json(gj, geojson_path)
    if svg_path is not None:
        colors = [CLUSTER_PALETTE[lab % len(CLUSTER_PALETTE)] if s else NODATA_COLOR
                  for lab, s in zip(labels.tolist(), sel.tolist())]
        Path(svg_path).write_text(svg_cells(grid, colors, title), encoding="utf-8")
    return gj


def histogram(values, bin_width=0.1):
    """Counts over equal-width bins covering [0, 1]; the last bin is closed.

    Returns ``(lower_edges, counts, percentages)``. NaNs are ignored.
    """
    if not 0 < bin_width <= 1:
        raise ValueError("bin_width must lie in (0, 1]")
    v = np.asarray(values, dtype=np.float64)
    v = v[~np.isnan(v)]
    if v.size == 0:
        raise ValueError("no values to histogram")
    if np.any((v < 0) | (v > 1)):
        raise ValueError("histogram values must lie in [0, 1]")
    n_bins = int(math.ceil(round(1.0 / bin_width, 9)))
    edges = np.arange(n_bins) * bin_width
    idx = np.minimum(np.floor(np.round(v / bin_width, 9)).astype(int), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return edges, counts, 100.0 * counts / v.size


def emit_histogram(values, bin_width, path=None):
    edges, counts, pct = histogram(values, bin_width)
    if path is not None:
        write_columns(path, ["bin_lower", "count", "percent"], [edges, counts, pct])
    return edges, counts, pct
