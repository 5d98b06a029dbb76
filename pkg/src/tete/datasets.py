"""Small synthetic benchmark datasets."""

import numpy as np

from tete.triplets import LabeledDataset


def gaussian_clusters(n=300, dim=10, centers=5, spread=1.0, separation=5.0, seed=0):
    """Isotropic Gaussian blobs with centers drawn from ``N(0, separation^2 I)``.

    Points are assigned to clusters round-robin, so sizes differ by at most one.
    """
    rng = np.random.default_rng(seed)
    means = rng.normal(0.0, separation, size=(centers, dim))
    labels = np.arange(n) % centers
    data = means[labels] + rng.normal(0.0, spread, size=(n, dim))
    return LabeledDataset(data, labels)


def swiss_roll(n=1000, noise=0.0, seed=0):
    """Points on a 3-D swiss roll.

    Returns
    -------
    ds : LabeledDataset
        Unlabeled data of shape ``(n, 3)``.
    roll : ndarray, shape (n,)
        Position of each point along the spiral, in ``[1.5 pi, 4.5 pi]``.
    """
    rng = np.random.default_rng(seed)
    roll = 1.5 * np.pi * (1.0 + 2.0 * rng.random(n))
    height = 21.0 * rng.random(n)
    data = np.column_stack([roll * np.cos(roll), height, roll * np.sin(roll)])
    if noise:
        data = data + rng.normal(0.0, noise, size=data.shape)
    return LabeledDataset(data), roll
