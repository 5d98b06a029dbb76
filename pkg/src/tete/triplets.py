"""Triplets, labeled datasets, reversal noise, and cross-validation splits.

A triplet ``(i, j, k)`` states that object ``i`` (the query) is closer to
``j`` (near) than to ``k`` (far). Indices are 0-based throughout.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np


class Triplet(NamedTuple):
    query: int
    near: int
    far: int


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TripletSet:
    """An ordered collection of triplets over ``num_objects`` objects.

    ``triplets`` is an ``(T, 3)`` integer array; duplicates are allowed.
    """

    triplets: np.ndarray
    num_objects: int

    def __post_init__(self):
        arr = np.asarray(self.triplets, dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, 3)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"triplets must have shape (T, 3), got {arr.shape}")
        n = int(self.num_objects)
        if n < 0:
            raise ValueError("num_objects must be non-negative")
        if len(arr):
            if arr.min() < 0 or arr.max() >= n:
                raise IndexError(
                    f"triplet indices must lie in [0, {n}); "
                    f"found range [{arr.min()}, {arr.max()}]"
                )
            degenerate = (
                (arr[:, 0] == arr[:, 1])
                | (arr[:, 0] == arr[:, 2])
                | (arr[:, 1] == arr[:, 2])
            )
            if degenerate.any():
                row = int(np.flatnonzero(degenerate)[0])
                raise ValueError(f"degenerate triplet {tuple(arr[row])} at position {row}")
        object.__setattr__(self, "triplets", _frozen(arr))
        object.__setattr__(self, "num_objects", n)

    def __len__(self):
        return len(self.triplets)

    def __iter__(self):
        for row in self.triplets:
            yield Triplet(int(row[0]), int(row[1]), int(row[2]))

    def __getitem__(self, idx):
        row = self.triplets[idx]
        return Triplet(int(row[0]), int(row[1]), int(row[2]))

    def subset(self, indices):
        """Triplets at ``indices`` (in the given order), same object count."""
        return TripletSet(self.triplets[np.asarray(indices, dtype=np.int64)], self.num_objects)

    @classmethod
    def from_list(cls, triplets, num_objects=None):
        arr = np.asarray(list(triplets), dtype=np.int64).reshape(-1, 3)
        if num_objects is None:
            num_objects = int(arr.max()) + 1 if len(arr) else 0
        return cls(arr, num_objects)


@dataclass(frozen=True)
class LabeledDataset:
    """High-dimensional data ``X`` (``n x D``) with optional integer labels."""

    data: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[1] < 1:
            raise ValueError(f"data must be an (n, D) matrix with D >= 1, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("data contains non-finite values")
        object.__setattr__(self, "data", _frozen(data))
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (len(data),):
                raise ValueError(
                    f"expected {len(data)} labels, got array of shape {labels.shape}"
                )
            object.__setattr__(self, "labels", _frozen(labels))

    @property
    def n(self):
        return self.data.shape[0]


def reverse_noise(ts, fraction, seed):
    """Swap near and far in a random ``floor(fraction * |T|)`` subset.

    The subset is drawn without replacement (prefix of a seeded
    permutation), so the count is exact and a second call with the same
    arguments undoes the first.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    arr = np.array(ts.triplets, copy=True)
    count = int(np.floor(fraction * len(arr)))
    if count:
        rng = np.random.default_rng(seed)
        chosen = rng.permutation(len(arr))[:count]
        arr[chosen, 1], arr[chosen, 2] = ts.triplets[chosen, 2], ts.triplets[chosen, 1]
    return TripletSet(arr, ts.num_objects)


def cv_split(ts, folds, seed):
    """Seeded ``folds``-way partition into (train, test) pairs.

    Test sets are disjoint, cover every triplet once, and differ in size
    by at most one. Both sides keep the original triplet order.
    """
    folds = int(folds)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if len(ts) < folds:
        raise ValueError(f"too few triplets ({len(ts)}) for {folds} folds")
    perm = np.random.default_rng(seed).permutation(len(ts))
    splits = []
    for part in np.array_split(perm, folds):
        mask = np.zeros(len(ts), dtype=bool)
        mask[part] = True
        splits.append((ts.subset(np.flatnonzero(~mask)), ts.subset(np.flatnonzero(mask))))
    return splits


def synth_triplets(ds, per_point, nn_pool, seed, counter=None):
    """Synthetic triplets for evaluation experiments.

    For every object ``i``, emits ``per_point`` triplets whose near object
    is uniform over the ``nn_pool`` nearest neighbours of ``i`` and whose
    far object is uniform over the objects strictly farther from ``i``
    than that near object.
    """
    from tete.sampler import draw_farther, knn

    n = ds.n
    if per_point < 0:
        raise ValueError("per_point must be non-negative")
    if n <= nn_pool + 1:
        raise ValueError(f"need n > nn_pool + 1, got n={n}, nn_pool={nn_pool}")
    if per_point == 0:
        return TripletSet(np.empty((0, 3), dtype=np.int64), n)
    neighbors, distances = knn(ds, nn_pool, counter=counter)
    out = np.empty((n, per_point, 3), dtype=np.int64)
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        pick = rng.integers(0, nn_pool, size=per_point)
        near = neighbors[i, pick]
        far = draw_farther(ds.data, i, distances[i, pick], rng, counter=counter)
        if (far < 0).any():
            raise ValueError(f"object {i} has no object strictly farther than its chosen neighbour")
        out[i, :, 0] = i
        out[i, :, 1] = near
        out[i, :, 2] = far
    return TripletSet(out.reshape(-1, 3), n)
