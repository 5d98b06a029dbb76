"""Generalized logarithm and exponential with a temperature parameter.

``log_t`` and ``exp_t`` are mutual inverses and reduce to the natural
``log`` / ``exp`` at ``t = 1``. For ``1 < t < 2`` the transform
``rho_capped(l) = log_t(1 + l)`` is bounded above by ``1 / (t - 1)``,
which is what makes the triplet objective robust to outliers.

All functions accept scalars or numpy arrays and compute in float64.
"""

import numpy as np


def _check_temperature(t):
    t = float(t)
    if not 0.0 < t <= 2.0:
        raise ValueError(f"temperature must lie in (0, 2], got {t}")
    return t


def _as_output(result, like):
    if np.ndim(like) == 0:
        return float(result)
    return result


def log_t(x, t):
    """Generalized logarithm.

    ``log(x)`` when ``t == 1``, otherwise ``(x**(1 - t) - 1) / (1 - t)``.

    Parameters
    ----------
    x : float or array_like
        Strictly positive input.
    t : float
        Temperature in (0, 2]. ``t = 2`` is admitted as the closed end of the
        range used by the t-STE correspondence.

    Returns
    -------
    float or ndarray
    """
    t = _check_temperature(t)
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~(arr > 0)):
        raise ValueError("log_t is only defined for x > 0")
    if t == 1.0:
        out = np.log(arr)
    else:
        one_minus_t = 1.0 - t
        out = np.expm1(one_minus_t * np.log(arr)) / one_minus_t
    return _as_output(out, x)


def exp_t(x, t):
    """Generalized exponential, the inverse of :func:`log_t`.

    ``exp(x)`` when ``t == 1``, otherwise
    ``max(0, 1 + (1 - t) x) ** (1 / (1 - t))``.
    """
    t = _check_temperature(t)
    arr = np.asarray(x, dtype=np.float64)
    if t == 1.0:
        out = np.exp(arr)
    else:
        one_minus_t = 1.0 - t
        shifted = one_minus_t * arr
        out = np.zeros_like(shifted)
        pos = shifted > -1.0
        # log1p keeps the roundtrip with log_t exact to a few ulp near t = 1
        out[pos] = np.exp(np.log1p(shifted[pos]) / one_minus_t)
        if t > 1.0:
            # the exponent is negative, so the clamped base diverges to +inf
            out[~pos] = np.inf
    return _as_output(out, x)


def rho_capped(loss, t):
    """Robust loss transform ``log_t(1 + loss)``.

    For ``1 < t < 2`` the result is strictly below ``1 / (t - 1)`` for every
    finite loss; ``t = 1`` gives the uncapped ``log(1 + loss)``.
    """
    t = _check_temperature(t)
    arr = np.asarray(loss, dtype=np.float64)
    if np.any(~(arr >= 0)):
        raise ValueError("rho_capped requires a non-negative loss")
    log1p = np.log1p(arr)
    if t == 1.0:
        out = log1p
    else:
        one_minus_t = 1.0 - t
        out = np.expm1(one_minus_t * log1p) / one_minus_t
    return _as_output(out, loss)


def rho_capped_from_log(log_loss, t):
    """``log_t(1 + exp(log_loss))`` without forming the loss itself.

    Used by the embedding objective so that losses whose exponent leaves
    the float64 range still produce finite, exact capped values.
    """
    log1p = np.logaddexp(0.0, log_loss)
    if t == 1.0:
        return log1p
    one_minus_t = 1.0 - t
    return np.expm1(one_minus_t * log1p) / one_minus_t
