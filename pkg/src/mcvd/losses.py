"""
TD targets and the loss operators used to train the decomposition.

Every loss returns ``(value, grad)`` where ``grad`` is the derivative of the
batch-mean loss with respect to the estimate that carries gradient. Targets and
sample weights are treated as constants, so no gradient ever flows into them.
"""

import numpy as np

from .errors import ConfigError


def _check_sigma(sigma):
    if not np.all(np.asarray(sigma) > 0):
        raise ConfigError(f"sigma must be positive, got {sigma}", key="sigma")


def _check_alpha(alpha):
    if not 0 < alpha <= 1:
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha}", key="alpha")


def _batch(q, y):
    q = np.atleast_1d(np.asarray(q, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if q.size == 0:
        raise ValueError("empty batch")
    if q.shape != y.shape:
        raise ValueError(f"estimate shape {q.shape} does not match target shape {y.shape}")
    return q, y


def td_target(reward, gamma, terminal, q_next):
    """``r + gamma * (1 - t) * q_next``, elementwise."""
    if not 0 <= gamma <= 1:
        raise ConfigError(f"gamma must lie in [0, 1], got {gamma}", key="gamma")
    reward = np.asarray(reward, dtype=np.float64)
    terminal = np.asarray(terminal, dtype=np.float64)
    return reward + gamma * (1.0 - terminal) * np.asarray(q_next, dtype=np.float64)


def mcvd_weight(q_jt, y, sigma):
    """
    Correntropy weight with one-edged clipping.

    Only overestimates (``q_jt > y``) are down-weighted; anything at or below
    the target keeps weight 1.
    """
    _check_sigma(sigma)
    e = np.maximum(0.0, np.asarray(q_jt, dtype=np.float64) - np.asarray(y, dtype=np.float64))
    return np.exp(-(e * e) / (2.0 * sigma * sigma))


def ow_weight(q_jt, y, alpha):
    """1 where ``q_jt < y``, ``alpha`` otherwise (ties included)."""
    _check_alpha(alpha)
    q_jt = np.asarray(q_jt, dtype=np.float64)
    return np.where(q_jt < np.asarray(y, dtype=np.float64), 1.0, alpha)


def weighted_squared_loss(q, y, w):
    """Mean of ``w * (q - y)**2`` with ``w`` frozen."""
    q, y = _batch(q, y)
    w = np.broadcast_to(np.asarray(w, dtype=np.float64), q.shape)
    err = q - y
    loss = float(np.mean(w * err * err))
    grad = 2.0 * w * err / q.size
    return loss, grad


def mse_td_loss(q_jt, y):
    return weighted_squared_loss(q_jt, y, 1.0)


def weighted_td_loss(q_jt, y, alpha):
    q_jt, y = _batch(q_jt, y)
    return weighted_squared_loss(q_jt, y, ow_weight(q_jt, y, alpha))


def mcvd_td_loss(q_jt, y, sigma):
    q_jt, y = _batch(q_jt, y)
    return weighted_squared_loss(q_jt, y, mcvd_weight(q_jt, y, sigma))


def joint_approx_loss(q_hat, y):
    return weighted_squared_loss(q_hat, y, 1.0)


def td_loss(kind, q_jt, y, alpha=0.5, sigma=1.0):
    """Dispatch on the configured operator name: ``mse``, ``ow`` or ``mcvd``."""
    if kind == "mse":
        return mse_td_loss(q_jt, y)
    if kind == "ow":
        return weighted_td_loss(q_jt, y, alpha)
    if kind == "mcvd":
        return mcvd_td_loss(q_jt, y, sigma)
    raise ConfigError(f"unknown loss {kind!r}", key="loss")


def mcc_sample_correntropy(errors, sigma):
    """Sample correntropy ``(2 sigma^2 / M) * sum(exp(-e^2 / (2 sigma^2)))``."""
    _check_sigma(sigma)
    e = np.atleast_1d(np.asarray(errors, dtype=np.float64))
    if e.size == 0:
        raise ValueError("empty error vector")
    two_var = 2.0 * sigma * sigma
    return float(two_var * np.mean(np.exp(-(e * e) / two_var)))
