import warnings

import numpy as np
import pytest

from coherenza import analyze_field, build_similarity, filter_clusters, spectral_cluster
from coherenza.errors import DegenerateRow, MissingDependency
from coherenza.spectral import (
    ClusterAssignment,
    SimilarityKind,
    SimilarityMatrix,
    kmeans,
    njw_embedding,
    pair_normalizer,
)

import oracles
from conftest import random_field


def planted(sizes, within=100, between=5):
    n = sum(sizes)
    s = np.full((n, n), between, dtype=np.int64)
    truth = np.repeat(np.arange(len(sizes)), sizes)
    for b in range(len(sizes)):
        idx = truth == b
        s[np.ix_(idx, idx)] = within
    return s, truth


def same_partition(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return all(len(set(b[a == x])) == 1 for x in set(a)) and len(set(a)) == len(set(b))


def _analyses(rng, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return analyze_field(random_field(rng, **kw), smooth=True)


def test_identical_and_anti_phase_pairs():
    p = np.array([[1, -1, 1], [-1, 1, -1], [1, -1, 1], [1, -1, 1]], dtype=np.int8)

    class A:
        phase = type("P", (), {"values": p})()

    s = build_similarity("phase", A())
    assert s.values[0, 2] == 4
    assert s.values[0, 1] == 0
    assert s.self_counts.tolist() == [4, 4, 4]


def test_similarity_matches_triple_loop(rng):
    for _ in range(10):
        a = _analyses(rng, max_side=4)
        n = a.field.n_locations
        p = a.phase.values.tolist()
        s = build_similarity(SimilarityKind.PHASE, a)
        up = oracles.similarity([[v == 1 for v in r] for r in p], n)
        dn = oracles.similarity([[v == -1 for v in r] for r in p], n)
        assert s.values.tolist() == [[x + y for x, y in zip(ru, rd)] for ru, rd in zip(up, dn)]

        local = a.classes.local.tolist()
        spatial = a.classes.spatial.tolist()
        assert build_similarity("pex_co", a).values.tolist() == oracles.similarity(
            [[v == 2 for v in r] for r in local], n)
        assert build_similarity("nex_co_spatial", a).values.tolist() == oracles.similarity(
            [[v == 3 for v in r] for r, t in zip(local, spatial) if t == 3], n)
        ext = [r for r, t in zip(p, spatial[1:]) if t in (2, 3)]
        e = build_similarity("phase_extreme_years", a)
        assert e.n_years == len(ext)
        assert e.values.tolist() == [
            [x + y for x, y in zip(ru, rd)]
            for ru, rd in zip(oracles.similarity([[v == 1 for v in r] for r in ext], n),
                              oracles.similarity([[v == -1 for v in r] for r in ext], n))
        ]


def test_similarity_symmetric_and_bounded(rng):
    a = _analyses(rng)
    for kind in SimilarityKind:
        s = build_similarity(kind, a)
        assert np.array_equal(s.values, s.values.T)
        assert s.values.max(initial=0) <= s.n_years


def test_similarity_missing_dependency():
    class Empty:
        pass

    with pytest.raises(MissingDependency):
        build_similarity("phase", Empty())
    with pytest.raises(MissingDependency):
        build_similarity("pex_co", Empty())


def test_three_equal_blocks_recovered():
    s, truth = planted([12, 12, 12], within=100, between=0)
    out = spectral_cluster(s, 3, seed=0)
    assert same_partition(out.labels, truth)


@pytest.mark.parametrize("seed", range(20))
def test_planted_partition_across_seeds(seed):
    s, truth = planted([12, 12, 12])
    assert same_partition(spectral_cluster(s, 3, seed=seed).labels, truth)


def test_uneven_blocks_ratio_point_one():
    s, truth = planted([10, 15, 20, 11], within=50, between=5)
    for seed in range(5):
        assert same_partition(spectral_cluster(s, 4, seed=seed).labels, truth)


def test_k_equals_n():
    rng = np.random.default_rng(1)
    x = rng.integers(1, 50, size=(7, 7))
    s = x + x.T
    labels = spectral_cluster(s, 7, seed=0).labels
    assert sorted(labels.tolist()) == list(range(7))


def test_deterministic(rng):
    a = _analyses(rng, max_side=5)
    s = build_similarity("phase", a)
    k = min(4, a.field.n_locations)
    if k >= 2:
        x, y = spectral_cluster(s, k, seed=9), spectral_cluster(s, k, seed=9)
        assert np.array_equal(x.labels, y.labels)


def test_scale_invariance():
    s, _ = planted([8, 9, 7], within=40, between=6)
    s = s + np.random.default_rng(0).integers(0, 3, size=s.shape)
    s = s + s.T
    base = spectral_cluster(s, 3, seed=4).labels
    for c in (2, 3, 17):
        assert np.array_equal(spectral_cluster(s * c, 3, seed=4).labels, base)


def test_eigenvector_sign_flips_do_not_change_labels():
    rng = np.random.default_rng(3)
    s, _ = planted([6, 7, 8, 5], within=30, between=8)
    s = s + rng.integers(0, 5, size=s.shape)
    s = (s + s.T).astype(float)
    np.fill_diagonal(s, 0)
    emb = njw_embedding(s, 4)
    base, _ = kmeans(emb, 4, seed=11)
    for flips in ([-1, 1, 1, 1], [1, -1, -1, 1], [-1, -1, -1, -1]):
        flipped, _ = kmeans(emb * np.array(flips, float), 4, seed=11)
        assert np.array_equal(flipped, base)


def test_embedding_rows_unit_length():
    s, _ = planted([5, 5])
    s = s.astype(float)
    np.fill_diagonal(s, 0)
    emb = njw_embedding(s, 2)
    np.testing.assert_allclose(np.linalg.norm(emb, axis=1), 1.0)


def test_degenerate_rows_form_residual_cluster():
    s, truth = planted([6, 6], within=20, between=1)
    s = np.pad(s, ((0, 2), (0, 2)))
    s[12, 12] = s[13, 13] = 9  # diagonal only: zeroed before clustering
    out = spectral_cluster(s, 3, seed=0)
    assert out.degenerate.tolist() == [False] * 12 + [True, True]
    assert out.labels[12:].tolist() == [2, 2]
    assert same_partition(out.labels[:12], truth)
    f = filter_clusters(out, s, 1.0, 0.0)
    assert not f.selected[2]


def test_all_degenerate_raises():
    with pytest.raises(DegenerateRow):
        spectral_cluster(np.eye(4), 2)


def test_bad_inputs():
    with pytest.raises(ValueError):
        spectral_cluster(np.ones((3, 3)), 1)
    with pytest.raises(ValueError):
        spectral_cluster(np.ones((3, 3)), 4)
    with pytest.raises(ValueError):
        spectral_cluster(np.array([[0, 1], [2, 0]]), 2)


def _assignment(labels, k):
    labels = np.asarray(labels)
    return ClusterAssignment(k, labels, np.zeros(labels.size, bool))


def test_filter_identical_members_selected():
    p = np.tile(np.array([[1], [-1], [1], [1], [-1]], dtype=np.int8), (1, 4))
    sim = SimilarityMatrix(SimilarityKind.PHASE, ((p == 1).T.astype(int) @ (p == 1)) + ((p == -1).T.astype(int) @ (p == -1)), 5)
    out = filter_clusters(_assignment([0, 0, 0, 1], 2), sim, pair_normalizer(sim), 0.7)
    assert out.selected.tolist() == [True, False]  # the singleton never is
    assert out.min_similarity[0] == 1.0


def test_filter_anti_phase_member_never_selected():
    p = np.array([[1, 1, -1], [-1, -1, 1], [1, 1, -1]], dtype=np.int8)
    sim = SimilarityMatrix(SimilarityKind.PHASE, ((p == 1).T.astype(int) @ (p == 1)) + ((p == -1).T.astype(int) @ (p == -1)), 3)
    out = filter_clusters(_assignment([0, 0, 0], 1), sim, pair_normalizer(sim), 1e-9)
    assert not out.selected[0]
    assert out.min_similarity[0] == 0.0
    assert out.mean_similarity[0] == pytest.approx(1 / 3)
    assert filter_clusters(_assignment([0, 0, 0], 1), sim, 3.0, 0.3, statistic="mean").selected[0]


def test_count_threshold_semantics():
    # all pairs share at least 3 years: selected at threshold 3 with raw counts
    v = np.array([[5, 3, 4], [3, 6, 3], [4, 3, 4]])
    sim = SimilarityMatrix(SimilarityKind.PEX_CO_SPATIAL, v, 8)
    a = _assignment([0, 0, 0], 1)
    assert filter_clusters(a, sim, pair_normalizer(sim, "count"), 3).selected[0]
    assert not filter_clusters(a, sim, pair_normalizer(sim, "count"), 4).selected[0]


def test_pair_normalizers():
    v = np.array([[8, 4], [4, 16]])
    sim = SimilarityMatrix(SimilarityKind.PEX_CO, v, 30)
    assert pair_normalizer(sim) == 30.0
    assert pair_normalizer(sim, "total", 12) == 12.0
    assert pair_normalizer(sim, "min")[0, 1] == 8
    assert pair_normalizer(sim, "max")[0, 1] == 16
    assert pair_normalizer(sim, "union")[0, 1] == 20
    a = _assignment([0, 0], 1)
    assert filter_clusters(a, sim, pair_normalizer(sim, "min"), 0.5).selected[0]
    assert not filter_clusters(a, sim, pair_normalizer(sim, "max"), 0.5).selected[0]
    with pytest.raises(ValueError):
        pair_normalizer(sim, "median")
    with pytest.raises(ValueError):
        filter_clusters(a, sim, 1.0, 0.5, statistic="max")


def test_relabeling_keeps_selected_membership():
    s, _ = planted([6, 6, 6], within=30, between=2)
    sim = SimilarityMatrix(SimilarityKind.PHASE, s, 30)
    out = filter_clusters(spectral_cluster(sim, 3, seed=0), sim, 30.0, 0.9)
    perm = np.array([2, 0, 1])
    relabeled = filter_clusters(_assignment(perm[out.labels], 3), sim, 30.0, 0.9)
    members = {tuple(out.members(c)) for c in range(3) if out.selected[c]}
    assert members == {tuple(relabeled.members(c)) for c in range(3) if relabeled.selected[c]}
    assert len(members) == 3
