"""The t-ETE objective, its gradient, and the gradient-descent optimizer.

For a triplet ``(i, j, k)`` with squared distances ``a = |y_i - y_j|^2`` and
``b = |y_i - y_k|^2`` the ranking loss is the ratio

    l = exp_t'(-b) / exp_t'(-a)
      = [(1 + s a) / (1 + s b)] ** (1 / s),   s = t' - 1 > 0
      = exp(a - b),                             t' = 1

and the (weighted) objective is ``sum w * log_t(1 + l)``.

Gradient derivation
-------------------
With ``s = t' - 1`` (``s = 0`` covers ``t' = 1``)::

    dl/da =  l / (1 + s a)
    dl/db = -l / (1 + s b)
    d log_t(1 + l) / dl = (1 + l) ** -t          (the forgetting factor)

and ``da/dy_i = 2 (y_i - y_j) = -da/dy_j``, ``db/dy_i = 2 (y_i - y_k) = -db/dy_k``.
Writing ``f = w l (1 + l) ** -t``::

    grad_i += 2 f [ (y_i - y_j) / (1 + s a) - (y_i - y_k) / (1 + s b) ]
    grad_j -= 2 f   (y_i - y_j) / (1 + s a)
    grad_k += 2 f   (y_i - y_k) / (1 + s b)

Everything is evaluated from ``log l`` so that neither the loss nor
``f = exp(log l - t * log(1 + l))`` overflows for badly violated triplets.
The finite-difference tests in ``tests/test_core.py`` lock these formulas.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from tete.triplets import TripletSet


class DivergenceError(ArithmeticError):
    """Raised when the objective or gradient becomes non-finite."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(
            message
            or f"non-finite objective at iteration {iteration}; try a smaller learning rate"
        )


@dataclass(frozen=True)
class EmbedConfig:
    """Hyperparameters of a t-ETE run.

    ``t`` caps the per-triplet loss (``t = 1`` disables capping), ``t_prime``
    sets the tail of the distance-to-similarity map (``1`` Gaussian, ``2``
    Student-t with one degree of freedom).
    """

    t: float = 2.0
    t_prime: float = 2.0
    dim: int = 2
    learning_rate: float = 1.0
    iterations: int = 1000
    seed: int = 0
    init_scale: float = 1e-3
    threads: int = 1

    def __post_init__(self):
        if not 1.0 <= self.t <= 2.0:
            raise ValueError(f"t must lie in [1, 2], got {self.t}")
        if not 1.0 <= self.t_prime <= 2.0:
            raise ValueError(f"t_prime must lie in [1, 2], got {self.t_prime}")
        if int(self.dim) < 1:
            raise ValueError("dim must be at least 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if int(self.iterations) < 0:
            raise ValueError("iterations must be non-negative")
        if not self.init_scale >= 0:
            raise ValueError("init_scale must be non-negative")
        if int(self.threads) < 1:
            raise ValueError("threads must be at least 1")


@dataclass(frozen=True)
class WeightedTripletSet:
    """Triplets with one non-negative importance weight each."""

    base: TripletSet
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.weights is None:
            w = np.ones(len(self.base))
        else:
            w = np.array(self.weights, dtype=np.float64, copy=True).reshape(-1)
        if len(w) != len(self.base):
            raise ValueError(f"expected {len(self.base)} weights, got {len(w)}")
        if not np.all(np.isfinite(w)) or (w < 0).any():
            raise ValueError("weights must be finite and non-negative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.base)

    @property
    def num_objects(self):
        return self.base.num_objects


def as_weighted(ts_or_wts):
    if isinstance(ts_or_wts, WeightedTripletSet):
        return ts_or_wts
    return WeightedTripletSet(ts_or_wts)


def log_loss_ratio(sq_near, sq_far, t_prime):
    """``log l`` for squared distances to the near and far objects."""
    if t_prime == 1.0:
        return sq_near - sq_far
    s = t_prime - 1.0
    return (np.log1p(s * sq_near) - np.log1p(s * sq_far)) / s


def forgetting_factor(loss, t):
    """The gradient damping ``(1 + l) ** -t`` of a triplet with loss ``l``."""
    return np.exp(-t * np.log1p(np.asarray(loss, dtype=np.float64)))


def triplet_loss(y, tr, t_prime):
    """Ranking loss ``exp_t'(-|y_i - y_k|^2) / exp_t'(-|y_i - y_j|^2)`` of one triplet.

    At ``t' = 1`` a ratio beyond the float64 range saturates to the largest
    finite float.
    """
    if not 1.0 <= t_prime <= 2.0:
        raise ValueError(f"t_prime must lie in [1, 2], got {t_prime}")
    y = np.asarray(y, dtype=np.float64)
    i, j, k = tr
    a = float(np.sum((y[i] - y[j]) ** 2))
    b = float(np.sum((y[i] - y[k]) ** 2))
    if t_prime == 1.0:
        diff = a - b
        if diff > np.log(np.finfo(np.float64).max):
            return float(np.finfo(np.float64).max)
        return float(np.exp(diff))
    s = t_prime - 1.0
    return float(((1.0 + s * a) / (1.0 + s * b)) ** (1.0 / s))


class TripletBatch:
    """Index arrays of a weighted triplet set, laid out for vectorized sweeps."""

    def __init__(self, wts, threads=1):
        wts = as_weighted(wts)
        self.num_objects = wts.num_objects
        trip = wts.base.triplets
        self.chunks = []
        for part in np.array_split(np.arange(len(trip)), max(1, int(threads))):
            i, j, k = (np.ascontiguousarray(trip[part, c]) for c in range(3))
            self.chunks.append((i, j, k, wts.weights[part]))
        self.size = len(trip)
        self.threads = int(threads)


def _chunk_eval(cols, chunk, terms_fn, need_grad):
    # cols holds the embedding one coordinate at a time; 1-D gathers are much
    # cheaper than gathering rows of an (N, d) array
    i, j, k, w = chunk
    n = len(cols[0])
    us = [c[i] - c[j] for c in cols]
    vs = [c[i] - c[k] for c in cols]
    a = sum(u * u for u in us)
    b = sum(v * v for v in vs)
    values, g_a, g_b = terms_fn(a, b, need_grad)
    value = float(np.dot(w, values))
    if not need_grad:
        return value, None
    g_a *= 2.0 * w
    g_b *= 2.0 * w
    grad = np.empty((n, len(cols)))
    for c, (u, v) in enumerate(zip(us, vs)):
        u *= g_a
        v *= g_b
        grad[:, c] = (
            np.bincount(i, u + v, n) - np.bincount(j, u, n) - np.bincount(k, v, n)
        )
    return value, grad


def evaluate_batch(y, batch, terms_fn, need_grad=True, counter=None):
    """Sum of weighted per-triplet terms over a batch, optionally with the gradient.

    ``terms_fn(a, b, need_grad)`` maps the squared near/far distances to
    ``(values, d_values/da, d_values/db)`` (the derivatives may be ``None``
    when not needed). Chunks are reduced in a fixed order, so results depend
    only on the thread count, and ``threads == 1`` is a plain sequential sweep.
    """
    y = np.asarray(y, dtype=np.float64)
    if counter is not None:
        counter.add(2 * batch.size)
    if batch.size == 0:
        return 0.0, (np.zeros_like(y) if need_grad else None)
    cols = [np.ascontiguousarray(y[:, c]) for c in range(y.shape[1])]
    if batch.threads == 1:
        return _chunk_eval(cols, batch.chunks[0], terms_fn, need_grad)
    with ThreadPoolExecutor(max_workers=batch.threads) as pool:
        parts = list(
            pool.map(lambda ch: _chunk_eval(cols, ch, terms_fn, need_grad), batch.chunks)
        )
    value = 0.0
    grad = np.zeros_like(y) if need_grad else None
    for v, g in parts:
        value += v
        if need_grad:
            grad += g
    return value, grad


def tete_terms(t, t_prime):
    """Per-triplet capped losses and their derivatives in the squared distances."""
    if t == 2.0 and t_prime == 2.0:
        return _tete_terms_t2

    s = t_prime - 1.0

    def terms(a, b, need_grad):
        log_l = log_loss_ratio(a, b, t_prime)
        log1p_l = np.logaddexp(0.0, log_l)
        if t == 1.0:
            values = log1p_l
        else:
            values = np.expm1((1.0 - t) * log1p_l) / (1.0 - t)
        if not need_grad:
            return values, None, None
        f = np.exp(log_l - t * log1p_l)
        return values, f / (1.0 + s * a), -f / (1.0 + s * b)

    return terms


def _tete_terms_t2(a, b, need_grad):
    # t = t' = 2: with r = 1 + a, q = 1 + b the loss is r / q, the capped value
    # is r / (q + r) and its partials are q / (q + r)^2 and -r / (q + r)^2
    r = 1.0 + a
    q = 1.0 + b
    total = q + r
    values = r / total
    if not need_grad:
        return values, None, None
    inv_sq = 1.0 / (total * total)
    return values, q * inv_sq, -r * inv_sq


def objective_and_gradient(y, wts, cfg, need_grad=True, batch=None, counter=None):
    if batch is None:
        batch = TripletBatch(wts, cfg.threads)
    return evaluate_batch(y, batch, tete_terms(cfg.t, cfg.t_prime), need_grad, counter)


def objective(y, wts, cfg, counter=None):
    """Weighted capped objective ``sum w_ijk * log_t(1 + l_ijk)``.

    Accepts a plain :class:`TripletSet` (unit weights) or a
    :class:`WeightedTripletSet`. For ``t > 1`` every term is below
    ``w / (t - 1)``.
    """
    return objective_and_gradient(y, wts, cfg, need_grad=False, counter=counter)[0]


def gradient(y, wts, cfg, counter=None):
    """Gradient of :func:`objective` with respect to the embedding, shape ``(N, d)``."""
    return objective_and_gradient(y, wts, cfg, counter=counter)[1]


def init_embedding(n, cfg):
    """``n x d`` matrix of i.i.d. ``N(0, init_scale)`` entries drawn from ``cfg.seed``."""
    if n < 1:
        raise ValueError("need at least one object")
    rng = np.random.default_rng(cfg.seed)
    return rng.normal(0.0, np.sqrt(cfg.init_scale), size=(int(n), int(cfg.dim)))


def descend(value_and_grad, y0, cfg):
    """Fixed-step full-batch gradient descent.

    Returns the final iterate and the objective trace, which has
    ``cfg.iterations + 1`` entries starting with the initial value.
    """
    y = np.array(y0, dtype=np.float64, copy=True)
    trace = np.empty(cfg.iterations + 1)
    for it in range(cfg.iterations + 1):
        last = it == cfg.iterations
        # a blow-up surfaces as DivergenceError below, not as warnings
        with np.errstate(over="ignore", invalid="ignore"):
            value, grad = value_and_grad(y, not last)
        if not np.isfinite(value) or (grad is not None and not np.all(np.isfinite(grad))):
            raise DivergenceError(it)
        trace[it] = value
        if not last:
            y -= cfg.learning_rate * grad
    return y, trace


def check_start(y0, n, cfg):
    if y0 is None:
        return init_embedding(max(n, 1), cfg)
    y0 = np.asarray(y0, dtype=np.float64)
    if y0.shape != (n, cfg.dim):
        raise ValueError(f"initial embedding must have shape {(n, cfg.dim)}, got {y0.shape}")
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial embedding contains non-finite values")
    return y0


def optimize(ts_or_wts, cfg, y0=None, counter=None):
    """Minimize the t-ETE objective by plain gradient descent.

    Parameters
    ----------
    ts_or_wts : TripletSet or WeightedTripletSet
    cfg : EmbedConfig
    y0 : ndarray, optional
        Starting embedding; drawn with :func:`init_embedding` when omitted.
    counter : DistanceCounter, optional
        Receives two distance evaluations per triplet per sweep.

    Returns
    -------
    y : ndarray, shape (N, d)
    trace : ndarray, shape (iterations + 1,)

    Raises
    ------
    DivergenceError
        If the objective turns non-finite.
    """
    wts = as_weighted(ts_or_wts)
    y0 = check_start(y0, wts.num_objects, cfg)
    batch = TripletBatch(wts, cfg.threads)
    terms = tete_terms(cfg.t, cfg.t_prime)

    def value_and_grad(y, need_grad):
        return evaluate_batch(y, batch, terms, need_grad, counter)

    return descend(value_and_grad, y0, cfg)
