"""Co-occurrence similarity matrices and Ng-Jordan-Weiss spectral clustering.

Similarity matrices count, for every pair of locations, the years in which
both share a phase or both have a local extreme. Clustering zeroes the
diagonal, normalises the affinity symmetrically, embeds each location by the
top-K eigenvectors (rows scaled to unit length) and runs seeded k-means++.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import DegenerateRow, EigenFailure, MissingDependency
from .extremes import NEX, PEX


class SimilarityKind(enum.Enum):
    PHASE = "phase"
    PHASE_EXTREME_YEARS = "phase_extreme_years"
    PEX_CO = "pex_co"
    NEX_CO = "nex_co"
    PEX_CO_SPATIAL = "pex_co_spatial"
    NEX_CO_SPATIAL = "nex_co_spatial"


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Symmetric integer co-occurrence counts.

    The diagonal holds each location's own count (years with a defined
    phase, or its own extreme years within the year set); clustering
    ignores it. ``n_years`` is the size of the year set counted over.
    """

    kind: SimilarityKind
    values: np.ndarray
    n_years: int
    diagonal: str = "self_count"

    @property
    def self_counts(self):
        return np.diag(self.values).copy()


def _co_occurrence(indicator):
    a = indicator.astype(np.int64)
    return a.T @ a


def build_similarity(kind, analyses):
    """Count matrix of the given kind from an :class:`~coherenza.analysis.Analyses`.

    For regionalisation pass analyses of the 1-hop smoothed
    field (``analyze_field(field, smooth=True)``).
    """
    kind = SimilarityKind(kind)
    if kind in (SimilarityKind.PHASE, SimilarityKind.PHASE_EXTREME_YEARS):
        phase = getattr(analyses, "phase", None)
        if phase is None:
            raise MissingDependency("phase similarity needs phase analyses")
        p = phase.values
        if kind is SimilarityKind.PHASE_EXTREME_YEARS:
            classes = getattr(analyses, "classes", None)
            if classes is None:
                raise MissingDependency("extreme-year phase similarity needs year classes")
            t = classes.spatial[1:]
            p = p[(t == PEX) | (t == NEX)]
        s = _co_occurrence(p == 1) + _co_occurrence(p == -1)
        return SimilarityMatrix(kind, s, int(p.shape[0]))

    classes = getattr(analyses, "classes", None)
    if classes is None:
        raise MissingDependency("extreme co-occurrence needs year classes")
    code = PEX if kind in (SimilarityKind.PEX_CO, SimilarityKind.PEX_CO_SPATIAL) else NEX
    local = classes.local
    if kind in (SimilarityKind.PEX_CO_SPATIAL, SimilarityKind.NEX_CO_SPATIAL):
        local = local[classes.spatial == code]
    return SimilarityMatrix(kind, _co_occurrence(local == code), int(local.shape[0]))


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    k: int
    labels: np.ndarray
    degenerate: np.ndarray
    min_similarity: np.ndarray = None
    mean_similarity: np.ndarray = None
    selected: np.ndarray = None
    n_iter: int = 0

    def members(self, c):
        return np.flatnonzero(self.labels == c)


def njw_embedding(s, k):
    """Rows of the top-*k* eigenvectors of ``D^-1/2 S D^-1/2``, unit-normalised.

    *s* must have a zero diagonal and strictly positive row sums. Each
    eigenvector's sign is fixed so its largest-magnitude entry is positive.
    """
    d = s.sum(axis=1)
    inv = 1.0 / np.sqrt(d)
    a = s * inv[:, None] * inv[None, :]
    a = 0.5 * (a + a.T)
    try:
        with threadpool_limits(limits=1):
            _, vecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from None
    u = vecs[:, ::-1][:, :k].copy()
    pivot = np.argmax(np.abs(u), axis=0)
    u *= np.where(u[pivot, np.arange(u.shape[1])] < 0, -1.0, 1.0)
    norms = np.linalg.norm(u, axis=1)
    return u / np.where(norms > 0, norms, 1.0)[:, None]


def _sqdist(x, centers):
    return ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def kmeans_pp_init(x, k, rng):
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _sqdist(x, x[chosen]).min(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        d2 = np.minimum(d2, _sqdist(x, x[[nxt]])[:, 0])
    return x[chosen].copy()


def kmeans(x, k, seed, max_iter=300):
    """Lloyd iterations from a seeded k-means++ start.

    Ties go to the lowest cluster index. An emptied cluster takes the point
    of the largest cluster that lies furthest from that cluster's centre.
    Stops once assignments no longer change. Returns ``(labels, n_iter)``.
    """
    rng = np.random.default_rng(seed)
    centers = kmeans_pp_init(x, k, rng)
    labels = None
    for it in range(1, max_iter + 1):
        d = _sqdist(x, centers)
        new = np.argmin(d, axis=1)
        sizes = np.bincount(new, minlength=k)
        for c in np.flatnonzero(sizes == 0):
            big = int(np.argmax(sizes))
            members = np.flatnonzero(new == big)
            far = members[np.argmax(d[members, big])]
            new[far] = c
            sizes[big] -= 1
            sizes[c] = 1
        if labels is not None and np.array_equal(new, labels):
            return labels, it
        labels = new
        centers = np.array([x[labels == c].mean(axis=0) for c in range(k)])
    return labels, max_iter


def spectral_cluster(sim, k, seed=0, max_iter=300):
    """NJW spectral clustering of a :class:`SimilarityMatrix` (or square array).

    Locations whose off-diagonal row sum is zero cannot be embedded. They
    form a residual cluster with label ``k - 1`` and are flagged in
    ``degenerate``; the remaining locations share labels ``0..k-2``.
    """
    s = np.array(sim.values if isinstance(sim, SimilarityMatrix) else sim, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("similarity must be a square matrix")
    if not np.array_equal(s, s.T) or np.any(s < 0):
        raise ValueError("similarity must be symmetric and non-negative")
    if k < 2:
        raise ValueError("need at least two clusters")
    n = s.shape[0]
    if k > n:
        raise ValueError(f"cannot form {k} clusters from {n} locations")
    np.fill_diagonal(s, 0.0)
    degenerate = s.sum(axis=1) == 0
    labels = np.full(n, k - 1, dtype=np.int64)
    live = np.flatnonzero(~degenerate)
    k_live = k - 1 if degenerate.any() else k
    if live.size < k_live or live.size == 0:
        raise DegenerateRow(f"only {live.size} locations have non-zero similarity; cannot form {k_live} clusters")
    sub = s[np.ix_(live, live)]
    if degenerate.any() and np.any(sub.sum(axis=1) == 0):
        raise DegenerateRow("similarity rows vanish after removing degenerate locations")
    if k_live == 1:
        labels[live] = 0
        return ClusterAssignment(k, labels, degenerate)
    emb = njw_embedding(sub, k_live)
    live_labels, n_iter = kmeans(emb, k_live, seed, max_iter)
    labels[live] = live_labels
    return ClusterAssignment(k, labels, degenerate, n_iter=n_iter)


def pair_normalizer(sim, mode="total", total=None):
    """Normaliser for pairwise similarity when filtering clusters.

    ``"total"`` divides by a fixed year count (``total``, default the matrix
    ``n_years``). ``"min"``, ``"max"`` and ``"union"`` use the two locations'
    own counts from the diagonal: their minimum, maximum, or
    ``d_a + d_b - S(a, b)``. ``"count"`` leaves raw counts (normaliser 1).
    """
    if mode == "total":
        return float(sim.n_years if total is None else total)
    if mode == "count":
        return 1.0
    d = sim.self_counts.astype(np.float64)
    if mode == "min":
        return np.minimum(d[:, None], d[None, :])
    if mode == "max":
        return np.maximum(d[:, None], d[None, :])
    if mode == "union":
        return d[:, None] + d[None, :] - sim.values
    raise ValueError(f"unknown normaliser mode {mode!r}")


def filter_clusters(assignment, sim, normalizer, threshold, statistic="min"):
    """Mark clusters whose pairwise normalised similarity reaches *threshold*.

    The statistic is the worst pair (``"min"``) or the mean over pairs
    (``"mean"``). Singletons are never selected; degenerate residual
    clusters neither.
    """
    if statistic not in ("min", "mean"):
        raise ValueError("statistic must be 'min' or 'mean'")
    values = sim.values if isinstance(sim, SimilarityMatrix) else np.asarray(sim)
    norm = np.broadcast_to(np.asarray(normalizer, dtype=np.float64), values.shape)
    k = assignment.k
    mins = np.full(k, np.nan)
    means = np.full(k, np.nan)
    selected = np.zeros(k, dtype=bool)
    for c in range(k):
        idx = assignment.members(c)
        if idx.size < 2:
            continue
        iu = np.triu_indices(idx.size, 1)
        raw = values[np.ix_(idx, idx)][iu].astype(np.float64)
        den = norm[np.ix_(idx, idx)][iu]
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(den > 0, raw / np.where(den > 0, den, 1.0), 0.0)
        mins[c] = r.min()
        means[c] = r.mean()
        stat = mins[c] if statistic == "min" else means[c]
        residual = assignment.degenerate[idx].all()
        selected[c] = bool(stat >= threshold) and not residual
    return ClusterAssignment(
        k, assignment.labels, assignment.degenerate, mins, means, selected, assignment.n_iter
    )
