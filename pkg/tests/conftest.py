import numpy as np
import pytest

from tete.core import WeightedTripletSet, triplet_loss
from tete.genexp import rho_capped
from tete.triplets import TripletSet


def naive_objective(y, triplets, weights, t, t_prime):
    """Scalar loop over triplets using only the kernel functions."""
    total = 0.0
    for (i, j, k), w in zip(triplets, weights):
        total += w * rho_capped(triplet_loss(y, (i, j, k), t_prime), t)
    return total


def naive_ste_loglik(y, triplets, t_prime):
    """Sum of log satisfaction probabilities, straight from the definition."""
    from tete.genexp import exp_t

    total = 0.0
    for i, j, k in triplets:
        kij = exp_t(-np.sum((y[i] - y[j]) ** 2), t_prime)
        kik = exp_t(-np.sum((y[i] - y[k]) ** 2), t_prime)
        total += np.log(kij / (kij + kik))
    return total


def central_differences(f, y, step=1e-5):
    grad = np.zeros_like(y)
    for idx in np.ndindex(*y.shape):
        plus = y.copy()
        minus = y.copy()
        plus[idx] += step
        minus[idx] -= step
        grad[idx] = (f(plus) - f(minus)) / (2 * step)
    return grad


def relative_errors(analytic, numeric, floor=1e-6):
    # below `floor` a coordinate is numerically zero and relative error is meaningless
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def random_triplets(rng, n, count):
    rows = [rng.choice(n, size=3, replace=False) for _ in range(count)]
    return TripletSet(np.array(rows), n)


def random_instance(rng, n=6, d=2, count=15, weighted=True, scale=1.0):
    y = rng.normal(0.0, scale, size=(n, d))
    ts = random_triplets(rng, n, count)
    w = rng.uniform(0.1, 2.0, size=count) if weighted else np.ones(count)
    return y, WeightedTripletSet(ts, w)


@pytest.fixture
def rng():
    return np.random.default_rng(20161015)
