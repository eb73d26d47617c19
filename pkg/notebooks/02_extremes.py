"""
Local, spatial and locational extremes
======================================

A year is a positive extremity (PEX) at a cell when its rainfall exceeds the
cell's mean plus one standard deviation, and a negative one (NEX) below mean
minus one. The same rule applied to the spatial mean gives spatial
extremes; applied to the yearly count of local extremes it gives locational
ones. This script compares them and builds the conditional tables.
"""

import warnings

import numpy as np

import coherenza as cz
from coherenza.extremes import NEX, PEX

field = cz.generate_synthetic(cz.SynthConfig(n_rows=8, n_cols=8, n_years=111, spatial_corr_len=2.0, seed=12))

with warnings.catch_warnings():
    warnings.simplefilter("ignore")  # mixed years are reported, not fatal
    classes = cz.classify_years(field)

###############################################################################
# How many cells are extreme each year, and which years stand out nationally.
print("NF (local PEX count) mean and sd:", round(classes.nf_mean, 1), round(classes.nf_sd, 1))
years = classes.years
print("spatial PEX years:    ", years[classes.spatial == PEX].tolist())
print("locational PEX years: ", years[classes.locational == PEX].tolist())
print("spatial NEX years:    ", years[classes.spatial == NEX].tolist())
print("locational NEX years: ", years[classes.locational == NEX].tolist())

###############################################################################
# The two national notions need not agree. Count the overlap.
both = (classes.spatial == PEX) & (classes.locational == PEX)
print("years PEX under both definitions:", int(both.sum()))
print("mean NF by locational type:", {k: round(v, 1) for k, v in classes.mean_nf_by_locational_type().items()})

###############################################################################
# p(T^s | T): how often a cell is extreme when the nation is.
yt = cz.year_type_conditionals(classes, "spatial")
p22 = yt.prob("2|2")
print("cells with p(local PEX | spatial PEX) > 0.4:", int(np.nansum(p22 > 0.4)), "of", field.n_locations)

###############################################################################
# Phase in extreme years: does a wet national year mean a rise everywhere?
an = cz.analyze_field(field)
pge = cz.phase_given_extremes(an.phase, an.classes)
print("cells with p(rise | spatial PEX) > 0.7:", pge.summary["n_up_given_pex_above_0.7"])
pgpe = cz.phase_given_phase_and_extremes(an.phase, an.national_phase, an.classes)
s = pgpe.summary
print(f"agreement with national phase: extreme years {s['mean_agree_extreme_years']:.2f}, "
      f"normal years {s['mean_agree_normal_years']:.2f}")
