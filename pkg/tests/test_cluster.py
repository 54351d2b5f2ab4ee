import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_nv
from powermod.cluster import cluster_counters_only, cluster_vectors
from powermod.core import SimilarityBounds, is_similar
from powermod.errors import EmptyDatasetError


def singles(values, power=None):
    return [
        make_nv([v], p=(power[i] if power else 1.0), seq=i) for i, v in enumerate(values)
    ]


class TestClusterExamples:
    def test_identical_vectors_one_group(self, bounds):
        groups = cluster_vectors(singles([0.4] * 5), bounds)
        assert len(groups) == 1
        assert len(groups[0].members) == 5

    def test_ratio_half_two_singletons(self, bounds):
        groups = cluster_vectors(singles([0.5, 1.0]), bounds)
        assert [len(g.members) for g in groups] == [1, 1]

    def test_greedy_hand_case(self, bounds):
        groups = cluster_vectors(singles([1.0, 0.95, 0.5, 0.52]), bounds)
        assert len(groups) == 2
        assert groups[0].indices == [0, 1]
        assert groups[1].indices == [2, 3]

    def test_empty_raises(self, bounds):
        with pytest.raises(EmptyDatasetError):
            cluster_vectors([], bounds)

    def test_power_excluded_mode(self, bounds):
        vecs = [make_nv([0.5], p=1.0, seq=0), make_nv([0.5], p=10.0, seq=1)]
        assert len(cluster_counters_only(vecs, bounds)) == 1
        assert len(cluster_vectors(vecs, bounds, include_power=True)) == 2

    def test_counters_only_equals_flag(self, bounds):
        rng = np.random.default_rng(5)
        vecs = [
            make_nv(rng.uniform(0, 1, 3), p=float(rng.uniform(0.5, 4)), seq=i)
            for i in range(60)
        ]
        a = cluster_vectors(vecs, bounds, include_power=False)
        b = cluster_counters_only(vecs, bounds)
        assert [g.members for g in a] == [g.members for g in b]


def _exhaustive_oracle(vectors, bounds, include_power):
    """First-fit clustering via direct pairwise checks (the reference)."""
    groups = []
    for idx, v in enumerate(vectors):
        placed = False
        for g in groups:
            if all(is_similar(v, vectors[i], bounds, include_power) for i in g):
                g.append(idx)
                placed = True
                break
        if not placed:
            groups.append([idx])
    return groups


class TestClusterProperties:
    @given(
        st.lists(
            st.tuples(
                st.floats(min_value=0.0, max_value=1.0),
                st.floats(min_value=0.0, max_value=1.0),
                st.floats(min_value=0.0, max_value=5.0),
            ),
            min_size=1,
            max_size=40,
        ),
        st.floats(min_value=0.3, max_value=1.0),
        st.booleans(),
    )
    @settings(max_examples=120, deadline=None)
    def test_matches_exhaustive_pairwise_oracle(self, rows, a_v, include_power):
        vecs = [make_nv([a, b], p=p, seq=i) for i, (a, b, p) in enumerate(rows)]
        bounds = SimilarityBounds(a_v)
        got = cluster_vectors(vecs, bounds, include_power)
        want = _exhaustive_oracle(vecs, bounds, include_power)
        assert [g.indices for g in got] == want

    def test_partition_and_pairwise(self, bounds):
        rng = np.random.default_rng(0)
        vecs = [
            make_nv(rng.uniform(0, 1, 2), p=float(rng.uniform(0.1, 5)), seq=i)
            for i in range(300)
        ]
        groups = cluster_vectors(vecs, bounds)
        seen = [i for g in groups for i in g.indices]
        assert sorted(seen) == list(range(300))
        for g in groups:
            for a in g.indices:
                for b in g.indices:
                    assert is_similar(vecs[a], vecs[b], bounds)

    def test_determinism(self, bounds):
        rng = np.random.default_rng(1)
        vecs = [make_nv(rng.uniform(0, 1, 2), seq=i) for i in range(100)]
        a = cluster_vectors(vecs, bounds)
        b = cluster_vectors(vecs, bounds)
        assert [g.members for g in a] == [g.members for g in b]

    def test_loosening_never_increases_groups(self):
        rng = np.random.default_rng(2)
        vecs = [make_nv(rng.uniform(0, 1, 2), seq=i) for i in range(150)]
        counts = [
            len(cluster_vectors(vecs, SimilarityBounds(a))) for a in (0.95, 0.9, 0.8, 0.6, 0.3)
        ]
        assert counts == sorted(counts, reverse=True)
