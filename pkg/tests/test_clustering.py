from __future__ import annotations

import math
import random

import pytest

from speclineage.adjudication import VerdictLog, build_equivalence
from speclineage.clustering import (DistanceMatrix, agglomerate, cut,
                                    distance_from_sets, distance_matrix,
                                    spec_filter)
from speclineage.errors import NumericError, UndefinedDistanceError
from speclineage.matrix import build_incidence
from speclineage.normalize import dedup_exact

from conftest import make_corpus

TOL = 1e-9


# ---------------------------------------------------------------- oracles

def complete_oracle(dmat):
    """Recompute max cross-pair distance from the raw matrix at every step."""
    n = len(dmat)
    clusters = {i: [i] for i in range(n)}
    merges = []
    for step in range(n - 1):
        cand = {}
        ids = sorted(clusters)
        for x in range(len(ids)):
            for y in range(x + 1, len(ids)):
                a, b = ids[x], ids[y]
                cand[(a, b)] = max(dmat[p][q]
                                   for p in clusters[a] for q in clusters[b])
        dmin = min(cand.values())
        i, j = min(key for key, v in cand.items() if v <= dmin + TOL)
        new = n + step
        clusters[new] = clusters[i] + clusters[j]
        merges.append((i, j, cand[(i, j)], len(clusters[new])))
        del clusters[i]
        del clusters[j]
    return merges


def ward_oracle(vectors):
    """Recompute cluster variance increases from raw vectors at every step."""
    n = len(vectors)
    dim = len(vectors[0])
    clusters = {i: [i] for i in range(n)}
    merges = []

    def centroid(members):
        return [sum(vectors[m][t] for m in members) / len(members)
                for t in range(dim)]

    for step in range(n - 1):
        cand = {}
        ids = sorted(clusters)
        for x in range(len(ids)):
            for y in range(x + 1, len(ids)):
                a, b = ids[x], ids[y]
                ca, cb = centroid(clusters[a]), centroid(clusters[b])
                ssd = sum((ca[t] - cb[t]) ** 2 for t in range(dim))
                la, lb = len(clusters[a]), len(clusters[b])
                cand[(a, b)] = 2.0 * la * lb / (la + lb) * ssd
        dmin = min(cand.values())
        i, j = min(key for key, v in cand.items() if v <= dmin + TOL)
        new = n + step
        clusters[new] = clusters[i] + clusters[j]
        merges.append((i, j, math.sqrt(cand[(i, j)]), len(clusters[new])))
        del clusters[i]
        del clusters[j]
    return merges


def random_binary_instance(rng, n, dim=6):
    """Binary vectors with at least one set bit each (jaccard-safe)."""
    vectors = []
    for _ in range(n):
        v = [rng.randint(0, 1) for _ in range(dim)]
        if not any(v):
            v[rng.randrange(dim)] = 1
        vectors.append(v)
    return vectors


def sets_of(vectors):
    return [{t for t, bit in enumerate(v) if bit} for v in vectors]


# ---------------------------------------------------------------- distances

def test_identical_sets_have_zero_distance():
    dm = distance_from_sets(["a", "b"], [{1, 2}, {1, 2}], "jaccard")
    assert dm.d[0][1] == 0.0


def test_jaccard_hand_example():
    dm = distance_from_sets(["x", "y"], [{"a", "b"}, {"b", "c"}], "jaccard")
    assert dm.d[0][1] == pytest.approx(2 / 3)


def test_disjoint_sets_jaccard_is_one():
    dm = distance_from_sets(["x", "y"], [{1}, {2}], "jaccard")
    assert dm.d[0][1] == 1.0


def test_dice_hand_example():
    dm = distance_from_sets(["x", "y"], [{"a", "b"}, {"b", "c"}], "dice")
    assert dm.d[0][1] == pytest.approx(1 - 2 * 1 / 4)


def test_empty_set_is_undefined_and_names_entity():
    with pytest.raises(UndefinedDistanceError, match="empty-one"):
        distance_from_sets(["ok", "empty-one"], [{1}, set()], "jaccard")


def test_euclidean_binary_matches_vector_oracle():
    rng = random.Random(3)
    vectors = random_binary_instance(rng, 8, dim=7)
    dm = distance_from_sets([str(i) for i in range(8)], sets_of(vectors),
                            "euclidean_binary")
    for i in range(8):
        for j in range(8):
            direct = math.sqrt(sum((vectors[i][t] - vectors[j][t]) ** 2
                                   for t in range(7)))
            assert dm.d[i][j] == pytest.approx(direct, abs=1e-12)


def test_distance_matrix_axes(three_item_corpus):
    eq = build_equivalence(dedup_exact(three_item_corpus), VerdictLog(valid_keys=set()))
    inc = build_incidence(three_item_corpus, eq)
    items_dm = distance_matrix(inc, "items", "jaccard")
    assert len(items_dm.labels) == 3
    specs_dm = distance_matrix(inc, "specs", "jaccard",
                               class_ids=spec_filter(inc, 1))
    assert len(specs_dm.labels) == len(inc.class_ids())
    with pytest.raises(ValueError):
        distance_matrix(inc, "rows", "jaccard")


# ---------------------------------------------------------------- agglomerate

def test_three_point_hand_trace_complete():
    dm = DistanceMatrix(labels=["A", "B", "C"],
                        d=[[0, 1, 4], [1, 0, 5], [4, 5, 0]], metric="jaccard")
    dend = agglomerate(dm, "complete")
    got = [(m.left, m.right, m.height, m.size) for m in dend.merges]
    assert got == [(0, 1, 1.0, 2), (2, 3, 5.0, 3)]


def test_two_points_single_merge():
    dm = DistanceMatrix(labels=["A", "B"], d=[[0, 0.7], [0.7, 0]], metric="jaccard")
    dend = agglomerate(dm, "complete")
    assert [(m.left, m.right, m.height, m.size) for m in dend.merges] == [(0, 1, 0.7, 2)]


@pytest.mark.parametrize("seed", range(12))
def test_complete_matches_oracle_on_binary_instances(seed):
    rng = random.Random(seed)
    for n in range(2, 9):
        vectors = random_binary_instance(rng, n)
        for metric in ("jaccard", "euclidean_binary"):
            dm = distance_from_sets([str(i) for i in range(n)],
                                    sets_of(vectors), metric)
            dend = agglomerate(dm, "complete")
            expected = complete_oracle(dm.d)
            assert [(m.left, m.right) for m in dend.merges] == \
                   [(e[0], e[1]) for e in expected]
            for m, e in zip(dend.merges, expected):
                assert abs(m.height - e[2]) <= 1e-9
                assert m.size == e[3]


@pytest.mark.parametrize("seed", range(12))
def test_ward_matches_variance_oracle_on_binary_instances(seed):
    rng = random.Random(100 + seed)
    for n in range(2, 9):
        vectors = random_binary_instance(rng, n)
        dm = distance_from_sets([str(i) for i in range(n)],
                                sets_of(vectors), "euclidean_binary")
        dend = agglomerate(dm, "ward")
        expected = ward_oracle(vectors)
        assert [(m.left, m.right) for m in dend.merges] == \
               [(e[0], e[1]) for e in expected]
        for m, e in zip(dend.merges, expected):
            assert abs(m.height - e[2]) <= 1e-9
            assert m.size == e[3]


def test_complete_heights_are_monotone():
    rng = random.Random(55)
    for _ in range(15):
        n = rng.randint(2, 12)
        vectors = random_binary_instance(rng, n, dim=8)
        dm = distance_from_sets([str(i) for i in range(n)],
                                sets_of(vectors), "jaccard")
        heights = [m.height for m in agglomerate(dm, "complete").merges]
        assert all(a <= b + 1e-12 for a, b in zip(heights, heights[1:]))


def test_label_permutation_equivariance():
    rng = random.Random(77)
    vectors = random_binary_instance(rng, 7)
    names = [f"item {i}" for i in range(7)]
    renamed = [f"renamed-{i}" for i in range(7)]
    dm1 = distance_from_sets(names, sets_of(vectors), "jaccard")
    dm2 = distance_from_sets(renamed, sets_of(vectors), "jaccard")
    dend1 = agglomerate(dm1, "complete")
    dend2 = agglomerate(dm2, "complete")
    assert dend1.merges == dend2.merges
    mapping = dict(zip(renamed, names))
    assert [mapping[l] for l in dend2.leaves] == dend1.leaves


def test_ward_warns_on_non_euclidean_metric(caplog):
    dm = DistanceMatrix(labels=["A", "B", "C"],
                        d=[[0, 1, 2], [1, 0, 1.5], [2, 1.5, 0]], metric="jaccard")
    with caplog.at_level("WARNING"):
        dend = agglomerate(dm, "ward")
    assert any("squared" in r.message for r in caplog.records)
    assert len(dend.merges) == 2


def test_non_finite_distance_is_numeric_error():
    dm = DistanceMatrix(labels=["A", "B"],
                        d=[[0, float("inf")], [float("inf"), 0]], metric="jaccard")
    with pytest.raises(NumericError):
        agglomerate(dm, "complete")


# ---------------------------------------------------------------- cut

def make_dend(n=6, seed=5, linkage="complete"):
    rng = random.Random(seed)
    vectors = random_binary_instance(rng, n, dim=8)
    dm = distance_from_sets([f"L{i}" for i in range(n)], sets_of(vectors),
                            "euclidean_binary" if linkage == "ward" else "jaccard")
    return agglomerate(dm, linkage)


def test_cut_extremes():
    dend = make_dend(6)
    assert cut(dend, 6) == [["L0"], ["L1"], ["L2"], ["L3"], ["L4"], ["L5"]]
    assert cut(dend, 1) == [sorted(dend.leaves, key=dend.leaves.index)]


def test_cut_out_of_range():
    dend = make_dend(4)
    for k in (0, 5):
        with pytest.raises(ValueError):
            cut(dend, k)


def test_cut_is_nested():
    dend = make_dend(8, seed=9)
    for k in range(1, 8):
        coarse = {frozenset(g) for g in cut(dend, k)}
        fine = {frozenset(g) for g in cut(dend, k + 1)}
        split = coarse - fine
        added = fine - coarse
        assert len(split) == 1
        assert len(added) == 2
        assert set().union(*added) == set(next(iter(split)))


def test_planted_two_blocks_recovered():
    labels = ["a", "b", "c", "d", "e", "f"]
    n = 6
    d = [[0.0] * n for _ in range(n)]
    blocks = {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1}
    for i in range(n):
        for j in range(n):
            if i != j:
                d[i][j] = 0.1 if blocks[i] == blocks[j] else 0.9
    for linkage in ("complete", "ward"):
        dend = agglomerate(DistanceMatrix(labels=labels, d=d, metric="jaccard"
                                          if linkage == "complete" else "euclidean_binary"),
                           linkage)
        groups = {frozenset(g) for g in cut(dend, 2)}
        assert groups == {frozenset(["a", "b", "c"]), frozenset(["d", "e", "f"])}


# ---------------------------------------------------------------- spec_filter

def test_spec_filter_thresholds(three_item_corpus):
    eq = build_equivalence(dedup_exact(three_item_corpus), VerdictLog(valid_keys=set()))
    inc = build_incidence(three_item_corpus, eq)
    all_classes = spec_filter(inc, 1)
    assert all_classes == inc.class_ids()
    shared = spec_filter(inc, 2)
    sets = inc.class_item_sets()
    assert all(len(sets[cid]) >= 2 for cid in shared)
    assert spec_filter(inc, 4) == []
    with pytest.raises(ValueError):
        spec_filter(inc, 0)


# ---------------------------------------------------------------- exports

def test_newick_two_leaves():
    dm = DistanceMatrix(labels=["A", "B"], d=[[0, 1.0], [1.0, 0]], metric="jaccard")
    dend = agglomerate(dm, "complete")
    assert dend.to_newick() == "(A:1.0,B:1.0);"


def test_newick_three_leaves_structure():
    dm = DistanceMatrix(labels=["A", "B", "C"],
                        d=[[0, 1, 4], [1, 0, 5], [4, 5, 0]], metric="jaccard")
    nwk = agglomerate(dm, "complete").to_newick()
    # root merge is (leaf 2, node 3), so C renders first
    assert nwk == "(C:5.0,(A:1.0,B:1.0):4.0);"


def test_dendrogram_dict_round_trip_and_cuts():
    dend = make_dend(5, seed=2)
    data = dend.to_dict()
    assert data["metric"] and data["linkage"]
    assert sorted(data["cuts"]) == sorted(str(k) for k in range(1, 6))
    assert data["cuts"]["1"] == cut(dend, 1)
    assert data["cuts"]["3"] == cut(dend, 3)
    from speclineage.clustering import Dendrogram
    again = Dendrogram.from_dict(data)
    assert again.merges == dend.merges
    assert again.leaves == dend.leaves


def test_leaf_order_covers_all_leaves():
    dend = make_dend(9, seed=13, linkage="ward")
    order = dend.leaf_order()
    assert sorted(order) == list(range(9))
