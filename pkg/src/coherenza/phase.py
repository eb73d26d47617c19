"""Phase: the sign of year-to-year change, locally and for the spatial mean.

Phases are stored as ``int8`` with +1 (rise), -1 (fall) and, under the
``"drop"`` tie rule, 0 for a zero change. A 0 entry is excluded from every
count it would take part in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooShort, YearMisalignment
from .grid import AIMRSeries, RainfallField
from .tables import AGREEMENT_BINS, ConditionalTable, count_conditional

TIE_RULES = ("positive", "drop")
SIGNS = (1, -1)


def _sgn(v):
    return "+1" if v > 0 else "-1"


@dataclass(frozen=True, eq=False)
class PhaseField:
    first_phase_year: int
    values: np.ndarray  # (n_years - 1, N)

    @property
    def n_phase_years(self):
        return self.values.shape[0]

    @property
    def years(self):
        return np.arange(self.first_phase_year, self.first_phase_year + self.n_phase_years)


@dataclass(frozen=True, eq=False)
class PhaseSeries:
    first_phase_year: int
    values: np.ndarray  # (n_years - 1,)

    @property
    def n_phase_years(self):
        return self.values.shape[0]

    @property
    def years(self):
        return np.arange(self.first_phase_year, self.first_phase_year + self.n_phase_years)


def _phase_of(x, tie):
    if tie not in TIE_RULES:
        raise ValueError(f"tie rule must be one of {TIE_RULES}")
    if x.shape[0] < 2:
        raise TooShort("phase needs at least two years")
    d = np.diff(x, axis=0)
    p = np.where(d > 0, 1, -1).astype(np.int8)
    p[d == 0] = 1 if tie == "positive" else 0
    return p


def compute_phase(data, tie="positive", first_year=0):
    """Phase of a field, an AIMR series, or a bare 1-d/2-d array.

    >>> compute_phase(np.array([100.0, 120.0, 90.0])).values.tolist()
    [1, -1]
    """
    if isinstance(data, RainfallField):
        return PhaseField(data.first_year + 1, _phase_of(data.values, tie))
    if isinstance(data, AIMRSeries):
        return PhaseSeries(data.first_year + 1, _phase_of(data.values, tie))
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        return PhaseSeries(first_year + 1, _phase_of(x, tie))
    if x.ndim == 2:
        return PhaseField(first_year + 1, _phase_of(x, tie))
    raise ValueError("expected a 1-d or 2-d array")


def check_aligned(phase_field, national):
    if (
        phase_field.first_phase_year != national.first_phase_year
        or phase_field.n_phase_years != national.n_phase_years
    ):
        raise YearMisalignment(
            f"local phases cover {phase_field.first_phase_year}+{phase_field.n_phase_years}, "
            f"national {national.first_phase_year}+{national.n_phase_years}"
        )


@dataclass(frozen=True, eq=False)
class AgreementCount:
    """PC(s): number of phase years in which location s matches the national phase."""

    pc: np.ndarray
    n_valid: np.ndarray
    n_phase_years: int
    histogram: np.ndarray

    @property
    def relative(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.n_valid > 0, self.pc / np.maximum(self.n_valid, 1), np.nan)

    @property
    def mean_pc(self):
        return float(self.pc.mean())


def agreement_counts(phase_field, national, bins=AGREEMENT_BINS):
    check_aligned(phase_field, national)
    p, q = phase_field.values, national.values[:, None]
    valid = (p != 0) & (q != 0)
    pc = ((p == q) & valid).sum(axis=0)
    n_valid = valid.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(n_valid > 0, pc / np.maximum(n_valid, 1), np.nan)
    return AgreementCount(pc, n_valid, phase_field.n_phase_years, bins.counts(rel))


def national_transition_probs(national):
    """p(P(t)=a | P(t-1)=b) for a, b in {+1, -1}, keyed ``"a|b"``."""
    if national.n_phase_years < 2:
        raise TooShort("transition probabilities need at least two phase years")
    cur = national.values[1:, None]
    prev = national.values[:-1, None]
    valid = (cur != 0) & (prev != 0)
    keys, ev, tr = [], [], []
    for b in SIGNS:
        for a in SIGNS:
            e, t = count_conditional(cur, a, [(prev, b)], valid)
            keys.append(f"{_sgn(a)}|{_sgn(b)}")
            ev.append(e[0])
            tr.append(t[0])
    return ConditionalTable("national_transitions", "P(t-1)", keys, ev, tr)


def local_transition_probs(phase_field, national):
    """Per-location transition tables, plain and conditioned on the national phase.

    Keys:

    * ``"a|b"``: p(P^s(t)=a | P^s(t-1)=b)
    * ``"a|b&P=c"``: additionally P(t)=c
    * ``"a|b&Pprev=c"``: additionally P(t-1)=c

    Flags ``improved_current`` / ``improved_previous`` mark locations where
    conditioning on the national phase raises both mean-reversion
    probabilities (undefined conditionals never count as improved).
    """
    check_aligned(phase_field, national)
    if phase_field.n_phase_years < 2:
        raise TooShort("transition probabilities need at least two phase years")
    cur = phase_field.values[1:]
    prev = phase_field.values[:-1]
    ncur = national.values[1:, None]
    nprev = national.values[:-1, None]
    valid = (cur != 0) & (prev != 0)
    nvalid_cur = valid & (ncur != 0)
    nvalid_prev = valid & (nprev != 0)

    keys, ev, tr = [], [], []

    def add(key, target, conds, v):
        e, t = count_conditional(cur, target, conds, v)
        keys.append(key)
        ev.append(e)
        tr.append(t)

    for b in SIGNS:
        for a in SIGNS:
            add(f"{_sgn(a)}|{_sgn(b)}", a, [(prev, b)], valid)
    for b in SIGNS:
        for c in SIGNS:
            for a in SIGNS:
                add(f"{_sgn(a)}|{_sgn(b)}&P={_sgn(c)}", a, [(prev, b), (ncur, c)], nvalid_cur)
    for b in SIGNS:
        for c in SIGNS:
            for a in SIGNS:
                add(f"{_sgn(a)}|{_sgn(b)}&Pprev={_sgn(c)}", a, [(prev, b), (nprev, c)], nvalid_prev)

    table = ConditionalTable("local_transitions", "P^s(t-1), P(t), P(t-1)", keys, np.array(ev).T, np.array(tr).T)
    up, down = table.prob("+1|-1"), table.prob("-1|+1")
    with np.errstate(invalid="ignore"):
        improved_current = (table.prob("+1|-1&P=+1") > up) & (table.prob("-1|+1&P=-1") > down)
        improved_previous = (table.prob("+1|-1&Pprev=-1") > up) & (table.prob("-1|+1&Pprev=+1") > down)
    summary = {
        "mean_p_up_given_down": table.mean_prob("+1|-1"),
        "mean_p_down_given_up": table.mean_prob("-1|+1"),
        "n_improved_by_current_national": int(improved_current.sum()),
        "n_improved_by_previous_national": int(improved_previous.sum()),
        "n_locations": int(phase_field.values.shape[1]),
    }
    return ConditionalTable(
        table.name,
        table.conditioned_on,
        table.keys,
        table.events,
        table.trials,
        flags={"improved_current": improved_current, "improved_previous": improved_previous},
        summary=summary,
    )
