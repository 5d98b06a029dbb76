"""STE and t-STE baselines through the triplet satisfaction probability.

``p_ijk = K(a) / (K(a) + K(b))`` with ``K(x) = exp_t'(-x)`` on squared
distances; ``t' = 1`` is STE and ``t' = 2`` is t-STE with one degree of
freedom. The baselines maximize ``sum log p``.
"""

import numpy as np

from tete.core import TripletBatch, as_weighted, check_start, descend, evaluate_batch

_LOG_MIN = np.finfo(np.float64).min


def _check_t_prime(t_prime):
    if not 1.0 <= t_prime <= 2.0:
        raise ValueError(f"t_prime must lie in [1, 2], got {t_prime}")


def log_kernel(sq_dist, t_prime):
    """``log exp_t'(-sq_dist)`` for non-negative squared distances."""
    if t_prime == 1.0:
        return -np.asarray(sq_dist, dtype=np.float64)
    s = t_prime - 1.0
    return -np.log1p(s * np.asarray(sq_dist, dtype=np.float64)) / s


def _log_prob(a, b, t_prime):
    ka = log_kernel(a, t_prime)
    kb = log_kernel(b, t_prime)
    # log p = -log(1 + K(b)/K(a)), formed from the kernel difference so that
    # large kernel exponents neither overflow nor cancel
    return np.maximum(-np.logaddexp(0.0, kb - ka), _LOG_MIN)


def triplet_probability(y, tr, t_prime):
    """Probability that triplet ``tr`` is satisfied by embedding ``y``."""
    _check_t_prime(t_prime)
    y = np.asarray(y, dtype=np.float64)
    i, j, k = tr
    a = np.sum((y[i] - y[j]) ** 2)
    b = np.sum((y[i] - y[k]) ** 2)
    return float(np.exp(_log_prob(a, b, t_prime)))


def ste_terms(t_prime):
    """Per-triplet ``-log p`` and its derivatives in the squared distances."""
    s = t_prime - 1.0

    def terms(a, b, need_grad):
        values = -_log_prob(a, b, t_prime)
        if not need_grad:
            return values, None, None
        # d(-log p)/da = (1 - p) / (1 + s a); the far term has the opposite sign
        q = np.exp(_log_prob(b, a, t_prime))
        return values, q / (1.0 + s * a), -q / (1.0 + s * b)

    return terms


def ste_objective(y, ts, t_prime):
    """Log-likelihood ``sum log p_ijk`` (to be maximized)."""
    _check_t_prime(t_prime)
    value, _ = evaluate_batch(y, TripletBatch(ts), ste_terms(t_prime), need_grad=False)
    return -value


def ste_gradient(y, ts, t_prime):
    """Gradient of the negative log-likelihood ``-sum log p``."""
    _check_t_prime(t_prime)
    return evaluate_batch(y, TripletBatch(ts), ste_terms(t_prime))[1]


def ste_optimize(ts, cfg, y0=None, counter=None):
    """Minimize ``-sum log p`` by fixed-step gradient descent.

    Uses ``cfg.t_prime`` for the kernel and ignores ``cfg.t``; otherwise the
    contract matches :func:`tete.core.optimize`, including the trace of
    minimized values.
    """
    _check_t_prime(cfg.t_prime)
    wts = as_weighted(ts)
    if not np.all(wts.weights == 1.0):
        raise ValueError("the STE baselines take unweighted triplets")
    y0 = check_start(y0, wts.num_objects, cfg)
    batch = TripletBatch(wts, cfg.threads)
    terms = ste_terms(cfg.t_prime)

    def value_and_grad(y, need_grad):
        return evaluate_batch(y, batch, terms, need_grad, counter)

    return descend(value_and_grad, y0, cfg)
