"""Bundle of the per-field analyses that the coherence and clustering stages
consume."""

from __future__ import annotations

from dataclasses import dataclass

from .extremes import ExtremeClassification, classify_years
from .grid import AIMRSeries, NeighborGraph, RainfallField, build_neighbor_graph, compute_aimr, smooth_1hop
from .phase import PhaseField, PhaseSeries, compute_phase


@dataclass(frozen=True, eq=False)
class Analyses:
    """Everything derived from one rainfall field.

    ``field`` is the field the local statistics were computed on (possibly
    1-hop smoothed). ``aimr`` and ``national_phase`` always come from the
    unsmoothed field so that both variants share one national reference.
    """

    field: RainfallField
    graph: NeighborGraph
    aimr: AIMRSeries
    phase: PhaseField
    national_phase: PhaseSeries
    classes: ExtremeClassification
    smoothed: bool = False
    tie: str = "positive"
    sigma: str = "population"
    k: float = 1.0


def analyze_field(field, smooth=False, tie="positive", sigma="population", k=1.0, graph=None):
    graph = build_neighbor_graph(field.grid) if graph is None else graph
    aimr = compute_aimr(field)
    local = smooth_1hop(field, graph) if smooth else field
    return Analyses(
        field=local,
        graph=graph,
        aimr=aimr,
        phase=compute_phase(local, tie),
        national_phase=compute_phase(aimr, tie),
        classes=classify_years(local, aimr, sigma, k),
        smoothed=smooth,
        tie=tie,
        sigma=sigma,
        k=k,
    )
