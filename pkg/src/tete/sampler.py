"""Informative triplet sampling and adaptive weights for dimensionality reduction.

Each object ``i`` contributes ``m`` near objects (its ``m`` nearest
neighbours) and, for every near object ``j``, ``m`` far objects drawn
uniformly from ``{k : |x_i - x_k| > |x_i - x_j|}``. That gives ``n m^2``
triplets, each weighted by the inverse of its high-dimensional loss ratio.

Nothing here builds an ``n x n`` matrix: kNN is computed row by row and
far objects are found by rejection against single distance evaluations.
"""

from typing import NamedTuple

import numpy as np

from tete.core import WeightedTripletSet
from tete.triplets import TripletSet

MAX_REJECTIONS = 50


class DistanceCounter:
    """Tally of point-to-point distance evaluations.

    Pass one to :func:`knn`, :func:`sample_triplets` or the weight
    functions to audit how many distances a pipeline computes.
    """

    def __init__(self):
        self.count = 0

    def add(self, k):
        self.count += int(k)

    def __repr__(self):
        return f"DistanceCounter(count={self.count})"


class NeighborIndex(NamedTuple):
    """``neighbors[i]`` lists the nearest objects to ``i``, closest first."""

    neighbors: np.ndarray
    distances: np.ndarray


def _distances_from(data, i, idx=None, counter=None):
    others = data if idx is None else data[idx]
    if counter is not None:
        counter.add(len(others))
    return np.sqrt(np.sum((others - data[i]) ** 2, axis=1))


def knn(ds, m, counter=None):
    """Exact Euclidean ``m``-nearest neighbours by brute force.

    Ties are broken toward the lower index and an object is never its own
    neighbour (exact duplicates are neighbours of each other at distance 0).

    Returns
    -------
    NeighborIndex
        ``neighbors`` of shape ``(n, m)`` and matching ``distances``.
    """
    data = ds.data
    n = data.shape[0]
    m = int(m)
    if m < 1:
        raise ValueError("m must be at least 1")
    if m >= n:
        raise ValueError(f"m must be smaller than the number of objects (m={m}, n={n})")
    neighbors = np.empty((n, m), dtype=np.int64)
    distances = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        dist = _distances_from(data, i, counter=counter)
        order = np.argsort(dist, kind="stable")
        order = order[order != i][:m]
        neighbors[i] = order
        distances[i] = dist[order]
    return NeighborIndex(neighbors, distances)


def draw_farther(data, i, thresholds, rng, counter=None):
    """For each threshold ``r``, draw ``k`` uniformly from ``{k : |x_i - x_k| > r}``.

    Candidates are proposed uniformly over all objects and rejected when
    not strictly farther than the threshold. A slot still unresolved after
    ``MAX_REJECTIONS`` proposals falls back to enumerating the farther set.
    Slots with an empty farther set are returned as ``-1``.
    """
    n = data.shape[0]
    thresholds = np.asarray(thresholds, dtype=np.float64)
    result = np.full(len(thresholds), -1, dtype=np.int64)
    pending = np.arange(len(thresholds))
    for _ in range(MAX_REJECTIONS):
        if not len(pending):
            return result
        cand = rng.integers(0, n, size=len(pending))
        ok = _distances_from(data, i, cand, counter) > thresholds[pending]
        result[pending[ok]] = cand[ok]
        pending = pending[~ok]
    if len(pending):
        full = _distances_from(data, i, counter=counter)
        for slot in pending:
            farther = np.flatnonzero(full > thresholds[slot])
            if len(farther):
                result[slot] = farther[rng.integers(0, len(farther))]
    return result


def sample_triplets(ds, m, seed, neighbors=None, counter=None):
    """Sample ``n m^2`` informative triplets from high-dimensional data.

    Object ``i`` uses its own random substream seeded by ``(seed, i)``, so
    the result does not depend on processing order.

    Parameters
    ----------
    ds : LabeledDataset
    m : int
        Number of nearest neighbours per object, and number of far objects
        drawn for each of them.
    seed : int
    neighbors : NeighborIndex, optional
        Precomputed kNN with at least ``m`` columns.
    counter : DistanceCounter, optional
    """
    n = ds.n
    m = int(m)
    if neighbors is None:
        neighbors = knn(ds, m, counter=counter)
    near_idx = neighbors.neighbors[:, :m]
    near_dist = neighbors.distances[:, :m]
    out = np.empty((n, m * m, 3), dtype=np.int64)
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        far = draw_farther(ds.data, i, np.repeat(near_dist[i], m), rng, counter=counter)
        if (far < 0).any():
            j = near_idx[i, int(np.flatnonzero(far < 0)[0]) // m]
            raise ValueError(f"no object is strictly farther from {i} than {j}")
        out[i, :, 0] = i
        out[i, :, 1] = np.repeat(near_idx[i], m)
        out[i, :, 2] = far
    return TripletSet(out.reshape(-1, 3), n)


def scale_factors(ds, nn_for_sigma=10, neighbors=None, counter=None):
    """Per-object scale: the distance to the ``nn_for_sigma``-th nearest neighbour."""
    if neighbors is None or neighbors.distances.shape[1] < nn_for_sigma:
        neighbors = knn(ds, nn_for_sigma, counter=counter)
    sigma = neighbors.distances[:, nn_for_sigma - 1]
    bad = np.flatnonzero(~(sigma > 0))
    if len(bad):
        raise ValueError(
            f"object {bad[0]} has zero distance to its {nn_for_sigma}-th neighbour; "
            "too many duplicate points"
        )
    return sigma


def compute_log_weights(ds, ts, nn_for_sigma=10, neighbors=None, counter=None):
    """Natural log of the triplet weights, see :func:`compute_weights`."""
    sigma = scale_factors(ds, nn_for_sigma, neighbors, counter)
    x = ds.data
    i, j, k = ts.triplets.T
    if counter is not None:
        counter.add(2 * len(ts))
    d_ij = np.sum((x[i] - x[j]) ** 2, axis=1)
    d_ik = np.sum((x[i] - x[k]) ** 2, axis=1)
    return d_ik / (sigma[i] * sigma[k]) - d_ij / (sigma[i] * sigma[j])


def compute_weights(ds, ts, nn_for_sigma=10, neighbors=None, counter=None):
    """Weight each triplet by its inverse loss ratio in the input space.

    ``w_ijk = exp(-|x_i - x_j|^2 / s_ij) / exp(-|x_i - x_k|^2 / s_ik)`` with
    ``s_ij = sigma_i * sigma_j`` and ``sigma_i`` the distance from ``i`` to its
    ``nn_for_sigma``-th nearest neighbour.

    Raises ``FloatingPointError`` if a weight exceeds the float64 range;
    :func:`weight_triplets` computes the normalized weights without forming
    the raw ones.
    """
    logw = compute_log_weights(ds, ts, nn_for_sigma, neighbors, counter)
    with np.errstate(over="ignore"):
        w = np.exp(logw)
    if not np.all(np.isfinite(w)):
        raise FloatingPointError(
            "triplet weights overflow float64; use weight_triplets for normalized weights"
        )
    return WeightedTripletSet(ts, w)


def normalize_weights(wts, gamma):
    """Divide every weight by the largest one and add ``gamma``."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    top = wts.weights.max() if len(wts) else 0.0
    if not top > 0:
        raise ValueError("cannot normalize: all weights are zero")
    return WeightedTripletSet(wts.base, wts.weights / top + gamma)


def weight_triplets(ds, ts, gamma=0.01, nn_for_sigma=10, neighbors=None, counter=None):
    """Normalized weights ``w / max(w) + gamma``, evaluated in log space.

    Agrees with ``normalize_weights(compute_weights(...), gamma)`` whenever
    the raw weights are representable, and stays finite when they are not.
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if not len(ts):
        raise ValueError("cannot normalize an empty triplet set")
    logw = compute_log_weights(ds, ts, nn_for_sigma, neighbors, counter)
    return WeightedTripletSet(ts, np.exp(logw - logw.max()) + gamma)
