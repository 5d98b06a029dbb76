"""Embedding quality metrics and the comparison experiments built on them."""

import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from tete.core import init_embedding, optimize
from tete.ste import ste_optimize
from tete.triplets import cv_split, reverse_noise, synth_triplets


@dataclass
class MetricsReport:
    """Outcome of fitting one method in one experiment cell.

    ``generalization_error`` is measured on held-out triplets and
    ``triplet_satisfaction`` is its complement. ``nn_error`` is ``None``
    when no labels are available.
    """

    method: str
    generalization_error: float
    nn_error: Optional[float]
    triplet_satisfaction: float
    final_objective: float
    wall_time: float
    noise_level: Optional[float] = None
    seeds: dict = field(default_factory=dict)
    trace: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("generalization_error", "triplet_satisfaction", "nn_error"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    def to_dict(self):
        out = asdict(self)
        out.pop("trace")
        return out


def _satisfied(y, triplets):
    y = np.asarray(y, dtype=np.float64)
    i, j, k = np.asarray(triplets).T
    d_ij = np.sum((y[i] - y[j]) ** 2, axis=1)
    d_ik = np.sum((y[i] - y[k]) ** 2, axis=1)
    return d_ij < d_ik


def triplet_error(y, ts):
    """Fraction of triplets the embedding violates; ties count as violations."""
    if not len(ts):
        raise ValueError("triplet error is undefined for an empty triplet set")
    return 1.0 - float(np.mean(_satisfied(y, ts.triplets)))


def satisfaction(y, ts):
    """Fraction of triplets with the near object strictly closer than the far one."""
    if not len(ts):
        raise ValueError("satisfaction is undefined for an empty triplet set")
    return float(np.mean(_satisfied(y, ts.triplets)))


def nearest_neighbors(y):
    """Index of each point's nearest other point, ties to the lower index."""
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        dist = np.sum((y - y[i]) ** 2, axis=1)
        dist[i] = np.inf
        out[i] = int(np.argmin(dist))
    return out


def nn_error(y, labels):
    """Leave-one-out 1-nearest-neighbour classification error in the embedding."""
    if labels is None:
        raise ValueError("nearest-neighbour error needs labels")
    labels = np.asarray(labels)
    if len(labels) != len(y):
        raise ValueError(f"got {len(labels)} labels for {len(y)} points")
    if len(y) < 2:
        raise ValueError("nearest-neighbour error needs at least two points")
    return float(np.mean(labels[nearest_neighbors(y)] != labels))


def _fit_tete(ts, cfg, y0):
    return optimize(ts, cfg, y0)


def _fit_ste(ts, cfg, y0):
    return ste_optimize(ts, replace(cfg, t_prime=1.0), y0)


def _fit_tste(ts, cfg, y0):
    return ste_optimize(ts, replace(cfg, t_prime=2.0), y0)


METHODS = {"tete": _fit_tete, "ste": _fit_ste, "tste": _fit_tste}


def resolve_methods(methods):
    """Turn method names or ``(name, fit)`` pairs into ``(name, fit)`` pairs.

    A fit callable takes ``(triplet_set, cfg, y0)`` and returns
    ``(embedding, trace)``.
    """
    out = []
    for m in methods:
        if isinstance(m, str):
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {sorted(METHODS)}")
            out.append((m, METHODS[m]))
        else:
            name, fit = m
            out.append((name, fit))
    return out


def _seed_schedule(seed, count):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


def run_noise_sweep(
    ds, methods, noise_levels, cfg, seed, per_point=30, nn_pool=20, keep_traces=False
):
    """Robustness of each method to reversed training triplets.

    Training and test triplets are drawn independently with
    :func:`synth_triplets` (same size). At every noise level the training
    set has that fraction of triplets reversed; the test set stays clean.
    All cells share one initial embedding and the iteration budget in
    ``cfg``. Reports come back ordered by noise level, then method.
    """
    levels = [float(lv) for lv in noise_levels]
    if any(not 0.0 <= lv < 1.0 for lv in levels):
        raise ValueError("noise levels must lie in [0, 1)")
    fits = resolve_methods(methods)
    train_seed, test_seed, noise_seed, init_seed = _seed_schedule(seed, 4)
    seeds = {"seed": seed, "train": train_seed, "test": test_seed,
             "noise": noise_seed, "init": init_seed}
    clean = synth_triplets(ds, per_point, nn_pool, train_seed)
    test = synth_triplets(ds, per_point, nn_pool, test_seed)
    y0 = init_embedding(ds.n, replace(cfg, seed=init_seed))
    reports = []
    for level in levels:
        train = reverse_noise(clean, level, noise_seed)
        for name, fit in fits:
            start = time.perf_counter()
            y, trace = fit(train, cfg, y0)
            elapsed = time.perf_counter() - start
            err = triplet_error(y, test)
            reports.append(MetricsReport(
                method=name,
                generalization_error=err,
                nn_error=nn_error(y, ds.labels) if ds.labels is not None else None,
                triplet_satisfaction=1.0 - err,
                final_objective=float(trace[-1]),
                wall_time=elapsed,
                noise_level=level,
                seeds=dict(seeds),
                trace=trace if keep_traces else None,
            ))
    return reports


def run_cv(ts, methods, folds, cfg, seed, labels=None):
    """Cross-validated held-out triplet error, one report per method.

    Fold ``f`` starts every method from the same initial embedding, so the
    methods differ only in their objective.
    """
    splits = cv_split(ts, folds, seed)
    fold_seeds = _seed_schedule(seed, len(splits))
    starts = [init_embedding(ts.num_objects, replace(cfg, seed=s)) for s in fold_seeds]
    reports = []
    for name, fit in resolve_methods(methods):
        errors, nn_errors, finals = [], [], []
        start = time.perf_counter()
        for (train, test), y0 in zip(splits, starts):
            y, trace = fit(train, cfg, y0)
            errors.append(triplet_error(y, test))
            finals.append(float(trace[-1]))
            if labels is not None:
                nn_errors.append(nn_error(y, labels))
        err = float(np.mean(errors))
        reports.append(MetricsReport(
            method=name,
            generalization_error=err,
            nn_error=float(np.mean(nn_errors)) if labels is not None else None,
            triplet_satisfaction=1.0 - err,
            final_objective=float(np.mean(finals)),
            wall_time=time.perf_counter() - start,
            seeds={"seed": seed, "folds": fold_seeds},
        ))
    return reports
