"""
Phase and mean reversion
========================

Annual rainfall tends to swing back after a dry or wet year. This walk-through
generates a field with negative lag-1 correlation, turns it into phases (the
sign of each year-over-year change) and looks at how often a falling year is
followed by a rising one, for the spatial mean and for single cells.
"""

import numpy as np

import coherenza as cz

# A 6x6 block of cells, 111 years, with mean reversion built in.
cfg = cz.SynthConfig(n_rows=6, n_cols=6, n_years=111, lag1_corr=-0.4, spatial_corr_len=1.5, seed=4)
field = cz.generate_synthetic(cfg)
print(field.n_locations, "cells,", field.n_years, "years from", field.first_year)

###############################################################################
# National phase comes from the unweighted spatial mean.
aimr = cz.compute_aimr(field)
national = cz.compute_phase(aimr)
print("first national phases:", national.values[:12].tolist())

###############################################################################
# Transition probabilities for the national series. With lag1_corr = -0.4 a
# fall is followed by a rise noticeably more often than a coin flip.
nat = cz.national_transition_probs(national)
for key in nat.keys:
    ev, tr = nat.count(key)
    print(f"p({key}) = {nat.prob(key)[0]:.2f}  ({ev[0]}/{tr[0]})")

###############################################################################
# Local phases and agreement with the national phase. PC counts the years in
# which a cell moved the same way as the country.
local = cz.compute_phase(field)
ac = cz.agreement_counts(local, national)
print("mean PC:", round(ac.mean_pc, 1), "of", ac.n_phase_years)
print("cells per agreement bin (<50, 50-60, 60-70, >70%):", ac.histogram.tolist())

###############################################################################
# Does knowing the national phase help predict a cell's reversal?
lt = cz.local_transition_probs(local, national)
print("mean p(+1|-1) at cells:", round(lt.summary["mean_p_up_given_down"], 3))
print("cells helped by the current national phase:", lt.summary["n_improved_by_current_national"])
print("cells helped by last year's national phase:", lt.summary["n_improved_by_previous_national"])

###############################################################################
# The same numbers after 1-hop smoothing, which averages every cell with its
# land neighbours. The national reference still comes from the raw field.
smooth = cz.analyze_field(field, smooth=True)
ac_s = cz.agreement_counts(smooth.phase, smooth.national_phase)
print("mean PC after smoothing:", round(ac_s.mean_pc, 1))
print("spread of PC shrinks:", np.std(ac.pc).round(2), "->", np.std(ac_s.pc).round(2))
