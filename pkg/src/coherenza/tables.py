"""Count-backed conditional probability tables and value binning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidBins


@dataclass(frozen=True, eq=False)
class ConditionalTable:
    """Named conditional probabilities with their raw counts.

    ``events`` and ``trials`` have shape ``(n_rows, n_keys)``: one row per
    location (or a single row for national quantities) and one column per
    conditional named in ``keys``. A probability with zero trials is
    undefined and comes back as NaN, never 0.
    """

    name: str
    conditioned_on: str
    keys: tuple
    events: np.ndarray
    trials: np.ndarray
    flags: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        ev = np.asarray(self.events, dtype=np.int64)
        tr = np.asarray(self.trials, dtype=np.int64)
        if ev.ndim == 1:
            ev, tr = ev[None, :], tr[None, :]
        if ev.shape != tr.shape or ev.shape[1] != len(self.keys):
            raise ValueError("events/trials shape does not match keys")
        if np.any(ev > tr) or np.any(ev < 0):
            raise ValueError("events must satisfy 0 <= events <= trials")
        object.__setattr__(self, "events", ev)
        object.__setattr__(self, "trials", tr)
        object.__setattr__(self, "keys", tuple(self.keys))

    @property
    def n_rows(self):
        return self.events.shape[0]

    def _col(self, key):
        try:
            return self.keys.index(key)
        except ValueError:
            raise KeyError(f"{key!r} not in table {self.name}") from None

    def prob(self, key=None):
        """Probabilities for one key (1-d) or for the whole table (2-d)."""
        ev = self.events if key is None else self.events[:, self._col(key)]
        tr = self.trials if key is None else self.trials[:, self._col(key)]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(tr > 0, ev / np.where(tr > 0, tr, 1), np.nan)

    def count(self, key):
        i = self._col(key)
        return self.events[:, i], self.trials[:, i]

    def mean_prob(self, key):
        """Mean over rows where the conditional is defined (NaN if none)."""
        p = self.prob(key)
        p = p[~np.isnan(p)]
        return float(p.mean()) if p.size else float("nan")

    def columns(self):
        """Column names and per-row values in CSV order (p, events, trials per key)."""
        names, cols = [], []
        probs = self.prob()
        for i, k in enumerate(self.keys):
            names += [f"p[{k}]", f"events[{k}]", f"trials[{k}]"]
            cols += [probs[:, i], self.events[:, i], self.trials[:, i]]
        for k, v in self.flags.items():
            names.append(k)
            cols.append(np.asarray(v))
        return names, cols


def count_conditional(outcome, target, conditions, valid=None):
    """Per-column counts of ``outcome == target`` among rows meeting *conditions*.

    *outcome* is ``(T, N)``; *conditions* is a list of ``(array, value)``
    pairs whose arrays broadcast against it. Returns ``(events, trials)``,
    each of shape ``(N,)``.
    """
    sel = np.ones(outcome.shape, dtype=bool) if valid is None else np.broadcast_to(valid, outcome.shape).copy()
    for arr, value in conditions:
        sel &= np.broadcast_to(np.asarray(arr) == value, outcome.shape)
    trials = sel.sum(axis=0)
    events = (sel & (outcome == target)).sum(axis=0)
    return events, trials


@dataclass(frozen=True)
class Bins:
    """Half-open bins ``[lo, hi)``; the topmost bin also includes its upper edge."""

    edges: tuple
    labels: tuple
    colors: tuple = ()

    def __post_init__(self):
        if len(self.edges) < 2 or len(self.labels) != len(self.edges) - 1:
            raise InvalidBins("need at least one bin and one label per bin")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise InvalidBins("bin edges must be strictly increasing")
        if self.colors and len(self.colors) != len(self.labels):
            raise InvalidBins("one colour per bin is required")

    def assign(self, values):
        """Bin index per value; -1 for NaN or values outside the edges."""
        v = np.asarray(values, dtype=np.float64)
        edges = np.asarray(self.edges)
        idx = np.searchsorted(edges, v, side="right") - 1
        idx = np.where(v == edges[-1], len(self.labels) - 1, idx)
        bad = np.isnan(v) | (v < edges[0]) | (v > edges[-1])
        return np.where(bad, -1, idx)

    def counts(self, values):
        idx = self.assign(values)
        return np.bincount(idx[idx >= 0], minlength=len(self.labels))


AGREEMENT_BINS = Bins(
    edges=(0.0, 0.5, 0.6, 0.7, 1.0),
    labels=("<50%", "50-60%", "60-70%", ">70%"),
    colors=("yellow", "blue", "green", "red"),
)
