"""
Spatial coherence of phases and extremes
========================================

Two numbers describe how clumped a property is on the grid. MNN is the mean
number of 1-hop neighbours that share the property with a cell holding it.
MCCS divides the number of cells by the number of connected pieces the
property forms each year, then averages over years.
"""

import warnings

import numpy as np

import coherenza as cz
from coherenza.coherence import mccs, mnn

###############################################################################
# Start small: every cell of a 3x3 grid holds the property.
g = cz.build_neighbor_graph(cz.GridSpec.rectangular(3, 3))
everything = np.ones((1, 9), bool)
print("3x3 all on: MNN", round(mnn(everything, g), 3), "MCCS", mccs(everything, g))
corner = np.zeros((1, 9), bool)
corner[0, 0] = True
print("one corner: MNN", mnn(corner, g), "MCCS", mccs(corner, g))

###############################################################################
# Spatially correlated versus independent fields.
for corr_len in (0.0, 2.0):
    field = cz.generate_synthetic(cz.SynthConfig(n_rows=12, n_cols=12, n_years=80,
                                                 spatial_corr_len=corr_len, seed=3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = cz.coherence_report(cz.analyze_field(field))
    print(f"\ncorrelation length {corr_len}")
    header, rows = rep.table()
    for label, row in zip(header[1:], zip(*[r[1:] for r in rows])):
        print(f"  {label:6s} MNN {row[0]:5.2f}  MCCS {row[1]:6.2f}")

###############################################################################
# Per-year MCCS versus pooling components across years.
pooled = cz.coherence_report(cz.analyze_field(field), mccs_mode="pooled")
print("\nMCCS(PP) per-year mean vs pooled:", round(rep["PP"].mccs, 3), round(pooled["PP"].mccs, 3))
