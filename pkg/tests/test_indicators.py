import dataclasses

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from fuzzquant.errors import DegenerateCentroids, LengthMismatch
from fuzzquant.indicators import (
    CombinedIndicators,
    boundary_indicator,
    cluster_memberships,
    combined_indicators,
    crisp_indicator,
    fuzzy_indicator,
    fuzzy_indicator_at,
    verify_triplet,
)
from fuzzquant.quantizer import Quantization, kmeans_quantize


def two_cluster_triplet():
    q = Quantization(k=2, centroids=np.array([0.0, 10.0]), labels=np.array([1, 1, 2]), sse=0.0)
    return combined_indicators([0.0, 5.0, 10.0], q)


class TestCrisp:
    def test_partition_indices(self):
        q = Quantization(k=2, centroids=np.array([0.0, 1.0]), labels=np.array([1, 1, 2, 2]), sse=0.0)
        assert crisp_indicator(q).tolist() == [1, 1, 2, 2]

    def test_three_means_in_unit_to_three(self):
        q = kmeans_quantize([0, 3, 10, 12, 30, 31, 29], 3)
        assert set(crisp_indicator(q).tolist()) <= {1, 2, 3}

    def test_symbol_encoding_keeps_partition(self):
        q = kmeans_quantize([0, 0, 10, 10, 20, 20], 3)
        encoded = crisp_indicator(q.encode([10, 20, 30]))
        assert encoded.tolist() == [10, 10, 20, 20, 30, 30]
        assert (encoded // 10).tolist() == q.labels.tolist()


class TestFuzzy:
    def test_sample_at_centroid_is_full_member(self):
        ind = two_cluster_triplet()
        assert ind.cfi[0] == 1.0 and ind.cfi[2] == 2.0
        assert ind.fib[0] == 0.0 and ind.fib[2] == 0.0

    def test_midpoint_is_half_way(self):
        ind = two_cluster_triplet()
        assert ind.cfi[1] == 1.5
        assert ind.fib[1] == 1.0

    def test_outer_samples_stay_at_edge_labels(self):
        cfi = fuzzy_indicator_at([-100.0, 100.0], [0.0, 10.0])
        assert cfi.tolist() == [1.0, 2.0]

    def test_monotone_over_dense_grid(self):
        cfi = fuzzy_indicator_at(np.linspace(-5, 35, 4001), [0.0, 10.0, 30.0])
        assert np.all(np.diff(cfi) >= 0)
        assert cfi.min() == 1.0 and cfi.max() == 3.0

    def test_coincident_centroids(self):
        q = Quantization(k=2, centroids=np.array([1.0, 1.0]), labels=np.array([1, 2]), sse=0.0)
        with pytest.raises(DegenerateCentroids):
            fuzzy_indicator([1.0, 1.0], q)

    def test_length_mismatch(self):
        q = kmeans_quantize([0, 0, 10, 10], 2)
        with pytest.raises(LengthMismatch):
            fuzzy_indicator([0, 0, 10], q)


class TestBoundary:
    def test_full_membership_gives_zero(self):
        cci = np.array([1, 2, 3])
        ind = CombinedIndicators(cci=cci, cfi=cci.astype(float), fib=np.empty(0), n=3)
        assert boundary_indicator(ind).tolist() == [0.0, 0.0, 0.0]

    def test_half_step_gives_one(self):
        cci = np.array([1, 2])
        ind = CombinedIndicators(cci=cci, cfi=np.array([1.5, 2.0]), fib=np.empty(0), n=2)
        assert boundary_indicator(ind).tolist() == [1.0, 0.0]

    def test_length_mismatch(self):
        ind = CombinedIndicators(cci=np.array([1, 2]), cfi=np.array([1.0]), fib=np.empty(0), n=2)
        with pytest.raises(LengthMismatch):
            boundary_indicator(ind)

    @given(st.lists(st.integers(min_value=-1000, max_value=1000).map(lambda v: v / 10), min_size=3, max_size=80))
    def test_matches_elementwise_pass(self, values):
        assume(len(set(values)) >= 3)
        ind = combined_indicators(values, kmeans_quantize(values, 3))
        for i in range(len(values)):
            assert ind.fib[i] == 2 * abs(ind.cfi[i] - ind.cci[i])


class TestVerify:
    def test_pipeline_output_passes(self):
        report = verify_triplet(two_cluster_triplet())
        assert report.ok and bool(report)
        assert report.describe() == "triplet consistent"

    def test_tampered_boundary(self):
        ind = two_cluster_triplet()
        fib = ind.fib.copy()
        fib[2] += 0.1
        report = verify_triplet(dataclasses.replace(ind, fib=fib))
        assert not report
        assert report.violations["boundary"] == 2

    def test_tampered_round_back(self):
        ind = two_cluster_triplet()
        cfi = ind.cfi.copy()
        cfi[0] = ind.cci[0] + 0.7
        report = verify_triplet(dataclasses.replace(ind, cfi=cfi))
        assert report.violations["round_back"] == 0

    def test_non_monotone_cfi(self):
        ind = two_cluster_triplet()
        cfi = np.array([1.0, 1.5, 1.4])
        report = verify_triplet(dataclasses.replace(ind, cfi=cfi, fib=2 * np.abs(cfi - ind.cci)))
        assert report.violations["monotone"] == 2

    def test_length_disagreement(self):
        ind = two_cluster_triplet()
        report = verify_triplet(dataclasses.replace(ind, fib=ind.fib[:2], values=None))
        assert report.violations == {"length": 2}


def test_memberships_sum_to_one():
    ind = combined_indicators([0, 1, 4, 5, 6, 9, 10, 20, 21], kmeans_quantize([0, 1, 4, 5, 6, 9, 10, 20, 21], 3))
    mu = cluster_memberships(ind.cfi, 3)
    assert mu.shape == (3, 9)
    assert np.allclose(mu.sum(axis=0), 1.0)
    assert np.all((mu >= 0) & (mu <= 1))


def test_symbols_do_not_change_fuzzy_indicator():
    values = [0, 1, 9, 10, 20, 22]
    q = kmeans_quantize(values, 3)
    plain = combined_indicators(values, q)
    named = combined_indicators(values, q.encode(["pupil", "iris", "sclera"]))
    assert np.array_equal(plain.cfi, named.cfi)
    assert named.encoded().tolist() == ["pupil", "pupil", "iris", "iris", "sclera", "sclera"]


@settings(max_examples=1000, deadline=None)
@given(
    values=st.lists(st.integers(min_value=0, max_value=10_000).map(lambda v: v / 10), min_size=3, max_size=500),
    k=st.integers(min_value=2, max_value=5),
)
def test_indicator_triplet_holds_for_random_signals(values, k):
    assume(len(set(values)) >= k)
    q = kmeans_quantize(values, k)
    ind = combined_indicators(values, q)

    report = verify_triplet(ind)
    assert report.ok, report.describe()
    assert np.all(ind.fib == 2 * np.abs(ind.cfi - ind.cci))
    assert np.all(np.abs(ind.cfi - ind.cci) <= 0.5)
    assert np.all((ind.fib >= 0) & (ind.fib <= 1))

    centroids = q.centroids
    assert fuzzy_indicator_at(centroids, centroids).tolist() == list(range(1, k + 1))
    midpoints = (centroids[:-1] + centroids[1:]) / 2
    assert fuzzy_indicator_at(midpoints, centroids).tolist() == [j + 0.5 for j in range(1, k)]
