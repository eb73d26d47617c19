"""Spatial coherence of per-location properties.

Two measures are computed for each of fourteen properties:

MNN
    Over every (year, location) holding the property, the mean number of
    1-hop neighbours that also hold it.
MCCS
    Per year, ``N / c`` where ``c`` is the number of connected components of
    the graph on all N land cells whose edges join neighbouring cells that
    both hold the property; averaged over the property's years. Cells without
    the property are singleton components.

Compound properties (e.g. ``LN_SP``, a local NEX during a spatial PEX year)
restrict the set of years to those meeting the national condition.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import MissingDependency
from .extremes import NEX, PEX


class PropertyId(enum.Enum):
    PP = "PP"
    NP = "NP"
    AP = "AP"
    DP = "DP"
    LN = "LN"
    LP = "LP"
    LN_SP = "LN-SP"
    LN_SN = "LN-SN"
    LN_LP = "LN-LP"
    LN_LN = "LN-LN"
    LP_SP = "LP-SP"
    LP_SN = "LP-SN"
    LP_LP = "LP-LP"
    LP_LN = "LP-LN"

    @property
    def label(self):
        return self.value


PROPERTIES = tuple(PropertyId)

# compound suffix -> (national series, year type)
_NATIONAL = {"SP": ("spatial", PEX), "SN": ("spatial", NEX), "LP": ("locational", PEX), "LN": ("locational", NEX)}


@dataclass(frozen=True, eq=False)
class PropertyMask:
    """Boolean ``(len(years), N)`` mask over the property's own year set."""

    prop: PropertyId
    years: np.ndarray
    mask: np.ndarray


def _need(analyses, name):
    value = getattr(analyses, name, None)
    if value is None:
        raise MissingDependency(f"property evaluation needs '{name}'")
    return value


def evaluate_property(prop, analyses):
    prop = PropertyId(prop)
    name = prop.name
    if name in ("PP", "NP", "AP", "DP"):
        phase = _need(analyses, "phase")
        p = phase.values
        years = phase.years
        if name == "PP":
            return PropertyMask(prop, years, p == 1)
        if name == "NP":
            return PropertyMask(prop, years, p == -1)
        q = _need(analyses, "national_phase").values
        keep = q != 0
        p, q, years = p[keep], q[keep, None], years[keep]
        m = (p == q) if name == "AP" else (p == -q)
        return PropertyMask(prop, years, m & (p != 0))

    classes = _need(analyses, "classes")
    local = classes.local
    target = NEX if name.startswith("LN") else PEX
    mask = local == target
    years = classes.years
    if "_" in name:
        which, code = _NATIONAL[name.split("_")[1]]
        keep = classes.national(which) == code
        mask, years = mask[keep], years[keep]
    return PropertyMask(prop, years, mask)


def _as_mask(mask):
    return mask.mask if isinstance(mask, PropertyMask) else np.asarray(mask, dtype=bool)


def neighbor_counts(mask, graph):
    """Per (year, location): how many neighbours hold the property."""
    m = _as_mask(mask).astype(np.int64)
    return np.asarray((graph.matrix.T @ m.T).T)


def mnn(mask, graph):
    """Mean number of property-holding neighbours; NaN if nobody holds it."""
    m = _as_mask(mask)
    holders = int(m.sum())
    if holders == 0:
        return float("nan")
    return int(neighbor_counts(m, graph)[m].sum()) / holders


def component_counts(mask, graph):
    """Number of connected components per year (non-holders are singletons)."""
    m = _as_mask(mask)
    adj = graph.matrix
    n = adj.shape[0]
    out = np.empty(m.shape[0], dtype=np.int64)
    for t, row in enumerate(m):
        idx = np.flatnonzero(row)
        if idx.size == 0:
            out[t] = n
            continue
        sub = adj[idx][:, idx]
        k, _ = connected_components(sub, directed=False)
        out[t] = (n - idx.size) + k
    return out


def mccs(mask, graph, mode="per_year"):
    """Mean connected component size over the property's years.

    ``mode="pooled"`` divides all vertices by all components across years
    instead of averaging the per-year ratios. NaN for an empty year set.
    """
    return _mccs_from_counts(component_counts(mask, graph), graph.matrix.shape[0], mode)


def _mccs_from_counts(comps, n, mode):
    if mode not in ("per_year", "pooled"):
        raise ValueError("mode must be 'per_year' or 'pooled'")
    if comps.size == 0:
        return float("nan")
    if mode == "pooled":
        return float(n * comps.size / comps.sum())
    return float(np.mean(n / comps))


@dataclass(frozen=True, eq=False)
class PropertyCoherence:
    prop: PropertyId
    mnn: float
    mccs: float
    years: np.ndarray
    holders: np.ndarray
    neighbor_sum: np.ndarray
    components: np.ndarray
    n_locations: int

    @property
    def mean_fraction_holding(self):
        """Average share of locations holding the property in one of its years."""
        if self.years.size == 0:
            return float("nan")
        return float(self.holders.mean() / self.n_locations)


@dataclass(frozen=True, eq=False)
class CoherenceReport:
    entries: dict
    mccs_mode: str = "per_year"

    def __getitem__(self, prop):
        return self.entries[PropertyId(prop)]

    def table(self):
        """Coherence table rows: header, then MNN and MCCS in property order."""
        header = ["measure"] + [p.label for p in PROPERTIES]
        mnn_row = ["MNN"] + [self.entries[p].mnn for p in PROPERTIES]
        mccs_row = ["MCCS"] + [self.entries[p].mccs for p in PROPERTIES]
        return header, [mnn_row, mccs_row]


def coherence_report(analyses, graph=None, mccs_mode="per_year", properties=PROPERTIES):
    graph = _need(analyses, "graph") if graph is None else graph
    n = graph.matrix.shape[0]
    entries = {}
    for prop in properties:
        pm = evaluate_property(prop, analyses)
        counts = neighbor_counts(pm, graph)
        m = pm.mask
        holders = m.sum(axis=1)
        nsum = np.where(m, counts, 0).sum(axis=1)
        comps = component_counts(m, graph)
        total = int(holders.sum())
        mnn_value = int(nsum.sum()) / total if total else float("nan")
        mccs_value = _mccs_from_counts(comps, n, mccs_mode)
        entries[pm.prop] = PropertyCoherence(pm.prop, mnn_value, mccs_value, pm.years, holders, nsum, comps, n)
    return CoherenceReport(entries, mccs_mode)
