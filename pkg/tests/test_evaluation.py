import numpy as np
import pytest

from conftest import random_triplets
from tete.core import EmbedConfig
from tete.datasets import gaussian_clusters
from tete.evaluation import (
    MetricsReport,
    nearest_neighbors,
    nn_error,
    run_cv,
    run_noise_sweep,
    satisfaction,
    triplet_error,
)
from tete.triplets import TripletSet, reverse_noise, synth_triplets


def line(*xs):
    return np.array(xs, dtype=float)[:, None]


class TestTripletError:
    def test_examples(self):
        ts = TripletSet.from_list([(0, 1, 2), (2, 0, 1)])
        assert triplet_error(line(0, 1, 2), TripletSet.from_list([(0, 1, 2)])) == 0.0
        assert triplet_error(np.zeros((3, 2)), ts) == 1.0
        assert triplet_error(line(0, 1, 2), ts) == 0.5

    def test_empty(self):
        with pytest.raises(ValueError):
            triplet_error(np.zeros((3, 1)), TripletSet.from_list([], 3))

    def test_complement(self, rng):
        y = rng.normal(size=(10, 2))
        ts = random_triplets(rng, 10, 77)
        assert triplet_error(y, ts) + satisfaction(y, ts) == 1.0

    def test_similarity_invariance(self, rng):
        y = rng.normal(size=(20, 3))
        ts = random_triplets(rng, 20, 200)
        base = triplet_error(y, ts)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        assert triplet_error(y * 4.0, ts) == base
        assert triplet_error(y * 0.25 + 3.0, ts) == base
        assert triplet_error(y @ q, ts) == base

    def test_reversal_flips_exactly_the_reversed_subset(self, rng):
        y = rng.normal(size=(30, 2))
        ts = random_triplets(rng, 30, 500)
        noisy = reverse_noise(ts, 0.3, seed=5)
        reversed_rows = np.any(noisy.triplets != ts.triplets, axis=1)
        sat = np.array([satisfaction(y, TripletSet(r[None], 30)) for r in ts.triplets]) == 1.0
        flipped = sat[reversed_rows].sum() - (~sat[reversed_rows]).sum()
        expected = triplet_error(y, ts) + flipped / len(ts)
        assert triplet_error(y, noisy) == pytest.approx(expected, abs=1e-15)


class TestNearestNeighbour:
    def test_separated_clusters(self):
        y = np.vstack([np.zeros((5, 2)), np.full((5, 2), 10.0)]) + np.arange(10)[:, None] * 1e-3
        assert nn_error(y, np.repeat([0, 1], 5)) == 0.0

    def test_pair(self):
        assert nn_error(line(0, 1), np.array([0, 1])) == 1.0

    def test_tie_goes_to_lower_index(self):
        np.testing.assert_array_equal(nearest_neighbors(line(0, 1, 2)), [1, 0, 1])

    def test_random_labels(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=(40, 2))
        labels = np.repeat([0, 1], 20)
        errs = [nn_error(y, rng.permutation(labels)) for _ in range(1000)]
        assert abs(np.mean(errs) - 0.5) <= 0.05

    def test_errors(self):
        with pytest.raises(ValueError):
            nn_error(line(0, 1), None)
        with pytest.raises(ValueError):
            nn_error(line(0), np.array([0]))


def test_report_validates_fractions():
    with pytest.raises(ValueError):
        MetricsReport("tete", 1.5, None, 0.0, 0.0, 0.0)
    rep = MetricsReport("tete", 0.25, None, 0.75, 1.0, 0.1, trace=np.zeros(3))
    assert "trace" not in rep.to_dict()


@pytest.fixture(scope="module")
def small_clusters():
    return gaussian_clusters(n=40, dim=3, centers=2, seed=1)


class TestNoiseSweep:
    CFG = EmbedConfig(t=1.7, t_prime=1.7, learning_rate=0.01, iterations=15)

    def test_shape_and_order(self, small_clusters):
        reports = run_noise_sweep(small_clusters, ["tete", "ste"], [0.0, 0.1, 0.2], self.CFG,
                                  seed=3, per_point=5, nn_pool=5)
        assert len(reports) == 6
        assert [r.method for r in reports] == ["tete", "ste"] * 3
        assert [r.noise_level for r in reports] == [0.0, 0.0, 0.1, 0.1, 0.2, 0.2]
        for r in reports:
            assert r.triplet_satisfaction == 1.0 - r.generalization_error
            assert r.nn_error is not None

    def test_level_zero_is_clean_run(self, small_clusters):
        seen = []

        def spy(ts, cfg, y0):
            seen.append(ts.triplets.copy())
            return y0, np.zeros(1)

        run_noise_sweep(small_clusters, [("spy", spy)], [0.0], self.CFG, seed=3, per_point=5, nn_pool=5)
        seeds = run_noise_sweep(small_clusters, ["tete"], [0.0], self.CFG, seed=3,
                                per_point=5, nn_pool=5)[0].seeds
        clean = synth_triplets(small_clusters, 5, 5, seeds["train"])
        np.testing.assert_array_equal(seen[0], clean.triplets)

    def test_deterministic(self, small_clusters):
        kwargs = dict(per_point=5, nn_pool=5, keep_traces=True)
        a = run_noise_sweep(small_clusters, ["tete", "tste"], [0.0, 0.2], self.CFG, 9, **kwargs)
        b = run_noise_sweep(small_clusters, ["tete", "tste"], [0.0, 0.2], self.CFG, 9, **kwargs)
        for ra, rb in zip(a, b):
            assert ra.generalization_error == rb.generalization_error
            np.testing.assert_array_equal(ra.trace, rb.trace)

    def test_shared_start(self, small_clusters):
        starts = []

        def spy(ts, cfg, y0):
            starts.append(y0)
            return y0, np.zeros(1)

        run_noise_sweep(small_clusters, [("a", spy), ("b", spy)], [0.0, 0.1], self.CFG, 2,
                        per_point=5, nn_pool=5)
        assert all(np.array_equal(s, starts[0]) for s in starts)

    def test_rejects_levels(self, small_clusters):
        with pytest.raises(ValueError):
            run_noise_sweep(small_clusters, ["tete"], [1.0], self.CFG, 0)
        with pytest.raises(ValueError):
            run_noise_sweep(small_clusters, ["gnmds"], [0.0], self.CFG, 0)


class TestCrossValidation:
    def test_truth_has_zero_error(self, small_clusters):
        ts = synth_triplets(small_clusters, 10, 5, seed=0)

        def truth(train, cfg, y0):
            return small_clusters.data, np.zeros(1)

        (rep,) = run_cv(ts, [("truth", truth)], 5, EmbedConfig(), seed=1)
        assert rep.generalization_error == 0.0

    def test_identical_methods_identical_reports(self, small_clusters):
        ts = synth_triplets(small_clusters, 5, 5, seed=0)
        cfg = EmbedConfig(iterations=10, learning_rate=0.01)
        a, b = run_cv(ts, ["tete", "tete"], 4, cfg, seed=2, labels=small_clusters.labels)
        assert a.to_dict() | {"wall_time": 0} == b.to_dict() | {"wall_time": 0}

    def test_fold_sizes(self, rng):
        ts = random_triplets(rng, 30, 1000)
        sizes = []

        def spy(train, cfg, y0):
            sizes.append(len(train))
            return y0, np.zeros(1)

        run_cv(ts, [("spy", spy)], 10, EmbedConfig(), seed=0)
        assert sizes == [900] * 10
