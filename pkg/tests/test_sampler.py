import numpy as np
import pytest

from tete.core import WeightedTripletSet
from tete.datasets import gaussian_clusters
from tete.sampler import (
    DistanceCounter,
    NeighborIndex,
    compute_weights,
    knn,
    normalize_weights,
    sample_triplets,
    scale_factors,
    weight_triplets,
)
from tete.triplets import LabeledDataset, TripletSet


def points(*xs):
    return LabeledDataset(np.array(xs, dtype=float))


def brute_force(data, m):
    d = np.linalg.norm(data[:, None] - data[None], axis=2)
    out = []
    for i in range(len(data)):
        order = sorted((v, j) for j, v in enumerate(d[i]) if j != i)
        out.append([j for _, j in order[:m]])
    return np.array(out)


class TestKnn:
    def test_line_example(self):
        nb = knn(points(0, 1, 3), 1)
        np.testing.assert_array_equal(nb.neighbors[:, 0], [1, 0, 1])
        np.testing.assert_array_equal(nb.distances[:, 0], [1, 1, 2])

    def test_full_ranking(self, rng):
        ds = LabeledDataset(rng.normal(size=(12, 3)))
        nb = knn(ds, 11)
        assert np.all(np.diff(nb.distances, axis=1) >= 0)
        for i in range(12):
            assert sorted(nb.neighbors[i]) == [j for j in range(12) if j != i]

    def test_matches_brute_force_with_ties(self, rng):
        # integer grid coordinates produce many exact ties
        ds = LabeledDataset(rng.integers(0, 4, size=(40, 2)).astype(float))
        np.testing.assert_array_equal(knn(ds, 7).neighbors, brute_force(ds.data, 7))

    def test_duplicates(self):
        nb = knn(points(0, 5, 0, 9), 1)
        assert nb.neighbors[0, 0] == 2 and nb.neighbors[2, 0] == 0
        assert nb.distances[0, 0] == 0.0

    def test_too_many_neighbours(self):
        with pytest.raises(ValueError):
            knn(points(0, 1, 2), 3)

    def test_counter(self):
        counter = DistanceCounter()
        knn(points(*range(10)), 3, counter=counter)
        assert counter.count == 100


class TestSampleTriplets:
    def test_count_and_validity(self):
        ds = gaussian_clusters(n=100, dim=5, centers=4, seed=0)
        ts = sample_triplets(ds, 20, seed=1)
        assert len(ts) == 40_000
        x = ds.data
        i, j, k = ts.triplets.T
        assert np.all(np.linalg.norm(x[i] - x[j], axis=1) < np.linalg.norm(x[i] - x[k], axis=1))

    def test_pairs_are_near_neighbours(self):
        ds = gaussian_clusters(n=50, dim=3, centers=2, seed=3)
        ts = sample_triplets(ds, 4, seed=0)
        nb = knn(ds, 4).neighbors
        rows = ts.triplets.reshape(50, 16, 3)
        for i in range(50):
            assert np.all(rows[i, :, 0] == i)
            np.testing.assert_array_equal(rows[i, :, 1], np.repeat(nb[i], 4))

    def test_only_valid_draw(self):
        ts = sample_triplets(points(0, 1, 10), 1, seed=3)
        assert tuple(ts[0]) == (0, 1, 2)

    def test_deterministic_and_seeded(self):
        ds = gaussian_clusters(n=40, dim=3, centers=2, seed=0)
        a = sample_triplets(ds, 5, seed=7)
        b = sample_triplets(ds, 5, seed=7)
        c = sample_triplets(ds, 5, seed=8)
        np.testing.assert_array_equal(a.triplets, b.triplets)
        assert np.any(a.triplets != c.triplets)

    def test_far_draws_are_uniform(self):
        # object 0 on 0..9 has neighbour 1 and the farther set {2, ..., 9}
        ds = points(*range(10))
        draws = [sample_triplets(ds, 1, seed=s)[0].far for s in range(1600)]
        counts = np.bincount(draws, minlength=10)
        assert counts[:2].sum() == 0
        # 200 expected per value, binomial sd about 13
        assert np.all(np.abs(counts[2:] - 200) < 70)

    def test_error_names_pair(self):
        with pytest.raises(ValueError, match=r"from 0 than 1"):
            sample_triplets(points(0, 5, 5, 5), 1, seed=0)

    def test_precomputed_neighbours(self):
        ds = gaussian_clusters(n=30, dim=2, centers=2, seed=1)
        nb = knn(ds, 10)
        a = sample_triplets(ds, 4, seed=2, neighbors=nb)
        b = sample_triplets(ds, 4, seed=2)
        np.testing.assert_array_equal(a.triplets, b.triplets)

    def test_distance_count_is_subquadratic_in_triplets(self):
        ds = gaussian_clusters(n=200, dim=4, centers=4, seed=0)
        counter = DistanceCounter()
        m = 5
        sample_triplets(ds, m, seed=0, counter=counter)
        n = ds.n
        assert counter.count <= 2 * n * (m * m + n)


class TestWeights:
    def test_symmetric_triplet_has_unit_weight(self):
        x = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        ds = LabeledDataset(x)
        wts = compute_weights(ds, TripletSet.from_list([(0, 1, 2)], 5), nn_for_sigma=2)
        assert wts.weights[0] == pytest.approx(1.0, rel=1e-15)

    def test_substitution_example(self):
        # |x0 - x1|^2 = 1, |x0 - x2|^2 = 4 and every sigma^2 product equal to 2
        ds = LabeledDataset(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]))
        nb = NeighborIndex(np.zeros((3, 1), dtype=np.int64), np.full((3, 1), np.sqrt(2.0)))
        wts = compute_weights(ds, TripletSet.from_list([(0, 1, 2)]), nn_for_sigma=1, neighbors=nb)
        assert wts.weights[0] == pytest.approx(np.exp(1.5), rel=1e-14)

    def test_sigma_is_kth_neighbour_distance(self):
        assert scale_factors(points(0, 1, 3, 6, 10), 2).tolist() == [3, 2, 3, 4, 7]

    def test_deterministic(self):
        ds = gaussian_clusters(n=50, dim=3, centers=2, seed=0)
        ts = sample_triplets(ds, 5, seed=1)
        np.testing.assert_array_equal(compute_weights(ds, ts).weights, compute_weights(ds, ts).weights)

    def test_sampled_weights_positive(self):
        ds = gaussian_clusters(n=80, dim=4, centers=2, seed=5)
        ts = sample_triplets(ds, 5, seed=0)
        assert np.all(compute_weights(ds, ts).weights > 0)

    def test_zero_sigma(self):
        ds = points(*([0.0] * 11 + [1.0]))
        ts = TripletSet.from_list([(0, 1, 11)], 12)
        with pytest.raises(ValueError, match="object 0"):
            compute_weights(ds, ts)

    def test_log_domain_matches_direct(self):
        ds = gaussian_clusters(n=60, dim=3, centers=3, seed=2)
        ts = sample_triplets(ds, 5, seed=3)
        direct = normalize_weights(compute_weights(ds, ts), 0.01).weights
        np.testing.assert_allclose(weight_triplets(ds, ts, 0.01).weights, direct, rtol=1e-13)

    def test_log_domain_survives_overflow(self):
        ds = points(*(list(range(11)) + [1e4]))
        ts = TripletSet.from_list([(0, 1, 11), (1, 0, 2)], 12)
        with pytest.raises(FloatingPointError):
            compute_weights(ds, ts)
        w = weight_triplets(ds, ts, 0.01).weights
        assert w[0] == 1.01 and 0.01 <= w[1] < 1.01


class TestNormalize:
    def _wts(self, values):
        n = len(values)
        ts = TripletSet(np.array([[0, 1, 2]] * n), 3)
        return WeightedTripletSet(ts, values)

    def test_example(self):
        out = normalize_weights(self._wts([2.0, 4.0]), 0.01).weights
        np.testing.assert_allclose(out, [0.51, 1.01], rtol=1e-15)

    def test_gamma_zero(self):
        assert normalize_weights(self._wts([0.3, 9.0, 2.0]), 0.0).weights.max() == 1.0

    def test_single(self):
        np.testing.assert_allclose(normalize_weights(self._wts([7.0]), 0.01).weights, [1.01])

    def test_range(self, rng):
        out = normalize_weights(self._wts(rng.exponential(size=50)), 0.2).weights
        assert np.all(out > 0.2) and out.max() == 1.2

    def test_errors(self):
        with pytest.raises(ValueError):
            normalize_weights(self._wts([0.0, 0.0]), 0.01)
        with pytest.raises(ValueError):
            normalize_weights(self._wts([1.0]), -0.1)
