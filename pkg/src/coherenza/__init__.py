"""Phase, extremity and spatial-coherence analysis of gridded annual rainfall."""

__version__ = "0.1.0"

from .analysis import Analyses, analyze_field
from .coherence import PROPERTIES, PropertyId, coherence_report, evaluate_property, mccs, mnn
from .extremes import (
    classify_years,
    phase_given_extremes,
    phase_given_phase_and_extremes,
    year_type_conditionals,
)
from .grid import (
    AIMRSeries,
    GridSpec,
    NeighborGraph,
    RainfallField,
    build_neighbor_graph,
    compute_aimr,
    smooth_1hop,
)
from .io import read_binary, read_csv, read_field, write_binary, write_csv
from .phase import (
    agreement_counts,
    compute_phase,
    local_transition_probs,
    national_transition_probs,
)
from .spectral import (
    SimilarityKind,
    build_similarity,
    filter_clusters,
    pair_normalizer,
    spectral_cluster,
)
from .synth import PlantedCluster, SynthConfig, generate_synthetic
