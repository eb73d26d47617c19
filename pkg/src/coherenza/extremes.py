"""Local, spatial and locational extremity years and the conditional
tables that relate them to each other and to phase.

Year types use integer codes: 1 normal, 2 positive extremity (PEX),
3 negative extremity (NEX). Locational year types may also be 4 when a year
is both a locational PEX and NEX year; such years are left out of every
conditional.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DegenerateSigma, MixedYearWarning, YearMisalignment
from .grid import compute_aimr
from .phase import SIGNS, _sgn, check_aligned
from .tables import ConditionalTable, count_conditional

NORMAL, PEX, NEX, MIXED = 1, 2, 3, 4
YEAR_TYPES = (NORMAL, PEX, NEX)
SIGMA_CONVENTIONS = {"population": 0, "sample": 1}
NATIONAL_SERIES = ("locational", "spatial")


@dataclass(frozen=True, eq=False)
class MomentStats:
    local_mean: np.ndarray
    local_sd: np.ndarray
    national_mean: float
    national_sd: float
    ddof: int


def _moments(x, ddof):
    return x.mean(axis=0), x.std(axis=0, ddof=ddof)


def compute_moments(field, aimr=None, sigma="population"):
    ddof = SIGMA_CONVENTIONS[sigma]
    aimr = compute_aimr(field) if aimr is None else aimr
    mu, sd = _moments(field.values, ddof)
    nmu, nsd = _moments(aimr.values, ddof)
    return MomentStats(mu, sd, float(nmu), float(nsd), ddof)


def _types(x, mu, sd, k, flat):
    t = np.full(x.shape, NORMAL, dtype=np.int8)
    t[(x > mu + k * sd) & ~flat] = PEX
    t[(x < mu - k * sd) & ~flat] = NEX
    return t


def count_exceeds(counts, k, ddof):
    """``counts > mean + k * sd`` evaluated exactly for integer counts.

    With ``d = n*c - sum`` the test is ``d > 0`` and
    ``d^2 (n - ddof) > k^2 n (n*sum_sq - sum^2)``, all in integers/rationals,
    so counts sitting exactly on the threshold are never flagged.
    """
    c = [int(v) for v in counts]
    n = len(c)
    total = sum(c)
    spread = n * sum(v * v for v in c) - total * total
    k2 = Fraction(k) ** 2
    out = np.zeros(n, dtype=bool)
    for i, v in enumerate(c):
        d = n * v - total
        out[i] = d > 0 and d * d * (n - ddof) > k2 * n * spread
    return out


@dataclass(frozen=True, eq=False)
class ExtremeClassification:
    """Year types at every scale for one field.

    ``local`` is ``(n_years, N)``; ``spatial``, ``locational``, ``nf`` and
    ``nd`` are per-year vectors.
    """

    first_year: int
    local: np.ndarray
    spatial: np.ndarray
    locational: np.ndarray
    nf: np.ndarray
    nd: np.ndarray
    nf_mean: float
    nf_sd: float
    nd_mean: float
    nd_sd: float
    moments: MomentStats
    degenerate: np.ndarray

    @property
    def n_years(self):
        return self.local.shape[0]

    @property
    def years(self):
        return np.arange(self.first_year, self.first_year + self.n_years)

    def national(self, which):
        if which == "locational":
            return self.locational
        if which == "spatial":
            return self.spatial
        raise ValueError(f"national series must be one of {NATIONAL_SERIES}")

    def mean_nf_by_locational_type(self):
        """Mean NF in locational PEX, normal and locational NEX years."""
        out = {}
        for name, code in (("pex", PEX), ("normal", NORMAL), ("nex", NEX)):
            sel = self.locational == code
            out[name] = float(self.nf[sel].mean()) if sel.any() else float("nan")
        return out


def classify_years(field, aimr=None, sigma="population", k=1.0):
    """Classify every location-year, the spatial mean and the NF/ND counts.

    All thresholds are strict: a value must lie beyond ``mean +/- k * sd``.
    *aimr* defaults to the spatial mean of *field*; pass the raw-field AIMR
    when *field* is a smoothed copy.
    """
    if not k > 0:
        raise ValueError("extremity threshold must be positive")
    aimr = compute_aimr(field) if aimr is None else aimr
    if aimr.first_year != field.first_year or aimr.values.size != field.n_years:
        raise YearMisalignment("AIMR series and field cover different years")
    moments = compute_moments(field, aimr, sigma)
    x = field.values
    flat = np.ptp(x, axis=0) == 0
    if flat.any():
        warnings.warn(
            f"{int(flat.sum())} location(s) have zero spread and never count as extreme",
            DegenerateSigma,
            stacklevel=2,
        )
    local = _types(x, moments.local_mean, moments.local_sd, k, flat)
    nat_flat = np.ptp(aimr.values) == 0
    spatial = _types(aimr.values, moments.national_mean, moments.national_sd, k, np.bool_(nat_flat))

    nf = (local == PEX).sum(axis=1)
    nd = (local == NEX).sum(axis=1)
    ddof = moments.ddof
    nf_mu, nf_sd = _moments(nf.astype(np.float64), ddof)
    nd_mu, nd_sd = _moments(nd.astype(np.float64), ddof)
    loc_pex = count_exceeds(nf, k, ddof)
    loc_nex = count_exceeds(nd, k, ddof)
    locational = np.full(field.n_years, NORMAL, dtype=np.int8)
    locational[loc_pex] = PEX
    locational[loc_nex] = NEX
    both = loc_pex & loc_nex
    if both.any():
        locational[both] = MIXED
        warnings.warn(
            f"years {(field.years[both]).tolist()} are both locational PEX and NEX; excluded from conditionals",
            MixedYearWarning,
            stacklevel=2,
        )
    return ExtremeClassification(
        field.first_year, local, spatial, locational, nf, nd,
        float(nf_mu), float(nf_sd), float(nd_mu), float(nd_sd), moments, flat,
    )


def _fig_bins(p, upper, lower):
    """Counts of locations with p >= upper, lower <= p < upper, and the rest."""
    hi = np.nan_to_num(p, nan=-1.0) >= upper
    mid = (np.nan_to_num(p, nan=-1.0) >= lower) & ~hi
    return {f">={upper}": int(hi.sum()), f">={lower}": int(mid.sum()), "below": int((~hi & ~mid).sum())}


def year_type_conditionals(classes, national="locational"):
    """p(T^s = i | T = j) per location, keyed ``"i|j"``."""
    t_nat = classes.national(national)[:, None]
    valid = t_nat != MIXED
    keys, ev, tr = [], [], []
    for j in YEAR_TYPES:
        for i in YEAR_TYPES:
            e, t = count_conditional(classes.local, i, [(t_nat, j)], valid)
            keys.append(f"{i}|{j}")
            ev.append(e)
            tr.append(t)
    table = ConditionalTable(f"year_type_given_{national}", f"T ({national})", keys, np.array(ev).T, np.array(tr).T)
    p22, p33 = table.prob("2|2"), table.prob("3|3")
    with np.errstate(invalid="ignore"):
        above = (p22 > 0.4) | (p33 > 0.4)
    summary = {
        "national_series": national,
        "n_locations_conforming_above_0.4": int(above.sum()),
        "undefined_conditions": [j for j in YEAR_TYPES if not (t_nat == j).any()],
        "nex_given_nex": _fig_bins(p33, 0.4, 0.2),
        "pex_given_pex": _fig_bins(p22, 0.4, 0.2),
        "pex_given_nex_at_least_0.2": int((np.nan_to_num(table.prob("2|3"), nan=-1) >= 0.2).sum()),
        "nex_given_pex_at_least_0.2": int((np.nan_to_num(table.prob("3|2"), nan=-1) >= 0.2).sum()),
    }
    return ConditionalTable(table.name, table.conditioned_on, keys, table.events, table.trials, summary=summary)


def _phase_years(classes, phase_field):
    if phase_field.first_phase_year != classes.first_year + 1 or phase_field.n_phase_years != classes.n_years - 1:
        raise YearMisalignment("phase field and year classification cover different years")


def phase_given_extremes(phase_field, classes, national="spatial"):
    """p(P^s = a | T = j) per location, keyed ``"a|T=j"``."""
    _phase_years(classes, phase_field)
    t_nat = classes.national(national)[1:, None]
    p = phase_field.values
    valid = (p != 0) & (t_nat != MIXED)
    keys, ev, tr = [], [], []
    for j in YEAR_TYPES:
        for a in SIGNS:
            e, t = count_conditional(p, a, [(t_nat, j)], valid)
            keys.append(f"{_sgn(a)}|T={j}")
            ev.append(e)
            tr.append(t)
    table = ConditionalTable(f"phase_given_{national}_extremes", f"T ({national})", keys, np.array(ev).T, np.array(tr).T)
    up, down = table.prob("+1|T=2"), table.prob("-1|T=3")
    with np.errstate(invalid="ignore"):
        summary = {
            "national_series": national,
            "n_up_given_pex_above_0.7": int((up > 0.7).sum()),
            "n_down_given_nex_above_0.7": int((down > 0.7).sum()),
            "down_given_nex": _fig_bins(down, 0.7, 0.5),
            "up_given_pex": _fig_bins(up, 0.7, 0.5),
        }
    return ConditionalTable(table.name, table.conditioned_on, keys, table.events, table.trials, summary=summary)


def phase_given_phase_and_extremes(phase_field, national_phase, classes, national="spatial"):
    """Local phase given national phase, with and without the extreme-year condition.

    Keys ``"+1|P=+1"``, ``"+1|P=+1&T=2"``, ``"-1|P=-1"``, ``"-1|P=-1&T=3"``
    and agreement probabilities ``"agree|T=j"``, ``"agree|extreme"``
    (T in {2, 3}) and ``"agree|all"``.
    """
    check_aligned(phase_field, national_phase)
    _phase_years(classes, phase_field)
    t_nat = classes.national(national)[1:, None]
    p = phase_field.values
    q = national_phase.values[:, None]
    valid = (p != 0) & (q != 0) & (t_nat != MIXED)
    extreme = (t_nat == PEX) | (t_nat == NEX)
    agree = (p == q).astype(np.int8)

    keys, ev, tr = [], [], []

    def add(key, outcome, target, conds):
        e, t = count_conditional(outcome, target, conds, valid)
        keys.append(key)
        ev.append(e)
        tr.append(t)

    add("+1|P=+1", p, 1, [(q, 1)])
    add("+1|P=+1&T=2", p, 1, [(q, 1), (t_nat, PEX)])
    add("-1|P=-1", p, -1, [(q, -1)])
    add("-1|P=-1&T=3", p, -1, [(q, -1), (t_nat, NEX)])
    for j in YEAR_TYPES:
        add(f"agree|T={j}", agree, 1, [(t_nat, j)])
    add("agree|extreme", agree, 1, [(extreme, True)])
    add("agree|all", agree, 1, [])

    table = ConditionalTable(
        f"phase_given_phase_and_{national}_extremes", f"P(t), T ({national})", keys, np.array(ev).T, np.array(tr).T
    )
    with np.errstate(invalid="ignore"):
        pex_ok = table.prob("+1|P=+1&T=2") >= table.prob("+1|P=+1")
        nex_ok = table.prob("-1|P=-1&T=3") >= table.prob("-1|P=-1")
    summary = {
        "national_series": national,
        "mean_agree_pex_years": table.mean_prob("agree|T=2"),
        "mean_agree_nex_years": table.mean_prob("agree|T=3"),
        "mean_agree_extreme_years": table.mean_prob("agree|extreme"),
        "mean_agree_normal_years": table.mean_prob("agree|T=1"),
        "mean_agree_all_years": table.mean_prob("agree|all"),
        "n_pex_inequality_holds": int(pex_ok.sum()),
        "n_nex_inequality_holds": int(nex_ok.sum()),
        "n_both_inequalities_hold": int((pex_ok & nex_ok).sum()),
    }
    return ConditionalTable(
        table.name, table.conditioned_on, keys, table.events, table.trials,
        flags={"pex_inequality": pex_ok, "nex_inequality": nex_ok}, summary=summary,
    )
