import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.cluster.hierarchy import fcluster, linkage

from rdtp.data_ingest import DayMatrix, HourlyDataset, slice_days
from rdtp.instance import PlanningInstance
from rdtp.rd_select import (RepresentativeDaySet, SelectionError, SLDSequence, cluster_days, find_extreme_days,
                            map_slds, medoid, read_rdset, ward_clusters, write_rds_csv, write_slds_csv)
from rdtp.synthetic import synthetic_dataset


def _partition(labels):
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, set()).add(i)
    return {frozenset(g) for g in groups.values()}


def _one_area_instance(n_areas=1):
    return PlanningInstance.from_dict({
        "buses": [f"b{i}" for i in range(n_areas)],
        "areas": {f"a{i}": [f"b{i}"] for i in range(n_areas)},
        "loads": [{"name": f"l{i}", "bus": f"b{i}", "peak_mw": 10.0} for i in range(n_areas)],
    })


def _days_from_peaks(peaks_per_area):
    """Hourly series whose daily maxima per area are the given values."""
    peaks = np.asarray(peaks_per_area, dtype=float)
    n_areas, n_days = peaks.shape
    vals = np.full((n_areas, 2, n_days * 24), 0.01)
    vals[:, 1] = 0.0
    for a in range(n_areas):
        for d in range(n_days):
            vals[a, 0, d * 24 + 12] = peaks[a, d] / peaks[a].max()
    return HourlyDataset(tuple(f"a{i}" for i in range(n_areas)), ("load", "wind"), vals, n_days)


def test_extreme_day_argmax_example():
    ds = _days_from_peaks([[5, 9, 7]])
    assert find_extreme_days(ds, _one_area_instance()) == {1}


def test_extreme_days_union_semantics():
    same = _days_from_peaks([[1, 4, 2], [3, 8, 1]])
    assert find_extreme_days(same, _one_area_instance(2)) == {1}
    peaks = np.full((7, 9), 1.0)
    for a in range(7):
        peaks[a, a + 1] = 5.0
    ds = _days_from_peaks(peaks)
    assert find_extreme_days(ds, _one_area_instance(7)) == set(range(1, 8))


def test_ward_matches_scipy_on_random_data():
    rng = np.random.default_rng(4)
    for trial in range(30):
        n = int(rng.integers(3, 40))
        X = rng.normal(size=(n, int(rng.integers(1, 8)))) * rng.uniform(0.5, 3)
        k = int(rng.integers(1, n + 1))
        ours = ward_clusters(X, k)
        ref = fcluster(linkage(X, "ward"), k, "maxclust")
        assert _partition(ours) == _partition(ref), trial


def test_ward_labels_are_lowest_member_index():
    X = np.array([[0.0], [10.0], [0.1], [10.2], [5.0]])
    lab = ward_clusters(X, 3)
    assert list(lab) == [0, 1, 0, 1, 4]


def test_identical_pair_clusters_together():
    base = np.zeros((1, 2, 25))
    days = [DayMatrix(0, base + 0.2), DayMatrix(1, base + 0.2), DayMatrix(2, base + 0.9)]
    rdset = cluster_days(days, 2)
    assert sorted(rdset.weights.tolist()) == [1, 2]
    assert rdset.membership[0] == rdset.membership[1] != rdset.membership[2]


def test_medoid_minimises_summed_distance():
    X = np.array([[0.0], [1.0], [2.0], [10.0]])
    assert medoid(X, np.arange(4)) == 1  # sums: 13, 11, 11, 27 -> lowest index
    assert medoid(X, np.array([2])) == 2


def test_every_day_its_own_rd():
    ds = synthetic_dataset(n_days=365, seed=3)
    rdset = cluster_days(slice_days(ds), 365)
    assert rdset.n_rd == 365 and np.all(rdset.weights == 1)


def test_twentyone_rds_with_extremes():
    ds = synthetic_dataset(n_days=365, seed=5, peak_days={"north": 40, "south": 200})
    from rdtp.instance import toy_instance

    ext = find_extreme_days(ds, toy_instance())
    rdset = cluster_days(slice_days(ds), 21, ext)
    assert rdset.n_rd == 21
    assert rdset.weights.sum() == 365
    flagged = set(rdset.source_days[rdset.extreme_flags.astype(bool)].tolist())
    assert flagged == ext
    for d in ext:
        i = rdset.membership[d]
        assert rdset.source_days[i] == d and rdset.weights[i] == 1


def test_cluster_days_errors():
    days = [DayMatrix(i, np.full((1, 2, 25), 0.1 * (i + 1))) for i in range(4)]
    with pytest.raises(SelectionError):
        cluster_days(days, 2, {0, 1})
    with pytest.raises(SelectionError):
        cluster_days(days, 5)


def test_map_slds_examples():
    days = [DayMatrix(i, np.zeros((1, 2, 25))) for i in range(4)]
    rdset = RepresentativeDaySet((days[0], days[2]), np.array([3, 1]), np.array([False, False]),
                                 np.array([0, 0, 1, 0]))
    slds = map_slds(rdset)
    assert slds.blocks == ((0, 2), (1, 1), (0, 1))
    assert slds.counts.sum() == 4
    assert (slds.association.sum(1) == 1).all()
    one = RepresentativeDaySet((days[0],), np.array([365]), np.array([False]), np.zeros(365, int))
    assert map_slds(one).blocks == ((0, 365),)


def test_sld_adjacent_blocks_must_differ():
    with pytest.raises(SelectionError):
        SLDSequence(((0, 1), (0, 2)), 1)


def test_clustering_deterministic_and_files_roundtrip(tmp_path, toy):
    ds = synthetic_dataset(n_days=30, seed=8, peak_days={"south": 9})
    ext = find_extreme_days(ds, toy)
    a = cluster_days(slice_days(ds), 6, ext)
    b = cluster_days(slice_days(ds), 6, ext)
    assert np.array_equal(a.membership, b.membership)
    write_rds_csv(a, ds.areas, ds.features, tmp_path / "rds.csv")
    write_slds_csv(map_slds(a), tmp_path / "slds.csv")
    back, slds = read_rdset(tmp_path / "rds.csv", tmp_path / "slds.csv", ds.areas, ds.features)
    assert np.array_equal(back.membership, a.membership)
    assert np.array_equal(back.weights, a.weights)
    for x, y in zip(back.rds, a.rds):
        assert x.day_index == y.day_index and np.array_equal(x.points, y.points)


def test_removing_extreme_preservation_never_adds_rds(toy):
    for seed in range(5):
        ds = synthetic_dataset(n_days=20, seed=seed, peak_days={"south": 4})
        ext = find_extreme_days(ds, toy)
        with_ext = cluster_days(slice_days(ds), 5, ext)
        without = cluster_days(slice_days(ds), 5, set())
        assert without.n_rd <= with_ext.n_rd


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=60))
def test_sld_decode_reproduces_membership(labels):
    used = sorted(set(labels))
    relabel = {v: i for i, v in enumerate(used)}
    membership = np.array([relabel[v] for v in labels])
    days = tuple(DayMatrix(i, np.zeros((1, 2, 25))) for i in range(len(used)))
    rdset = RepresentativeDaySet(days, np.bincount(membership), np.zeros(len(used), bool), membership)
    slds = map_slds(rdset)
    assert np.array_equal(slds.decode(), membership)
    assert all(a != b for (a, _), (b, _) in zip(slds.blocks, slds.blocks[1:]))


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 14), st.integers(0, 10_000))
def test_ward_partition_property(n, seed):
    X = np.random.default_rng(seed).normal(size=(n, 3))
    for k in (1, n // 2 or 1, n):
        ours = ward_clusters(X, k)
        assert len(set(ours)) == k
        assert _partition(ours) == _partition(fcluster(linkage(X, "ward"), k, "maxclust"))


def test_extreme_pair_enumeration_small():
    # exhaustive over 3 points: Ward merges the closest pair first
    pts = np.array([[0.0], [1.0], [5.0]])
    for perm in itertools.permutations(range(3)):
        X = pts[list(perm)]
        lab = ward_clusters(X, 2)
        far = list(perm).index(2)
        assert sum(lab == lab[far]) == 1
