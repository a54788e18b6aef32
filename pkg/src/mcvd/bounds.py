"""Closed-form limits on the OW weight and the correntropy bandwidth."""

import math

import numpy as np

from .errors import UndefinedGapError


def delta_s(joint_values):
    """Gap between the largest value and the largest strictly smaller one."""
    values = np.unique(np.asarray(joint_values, dtype=np.float64).ravel())
    if values.size < 2:
        raise UndefinedGapError("all joint values are equal; the optimality gap is undefined")
    return float(values[-1] - values[-2])


def joint_action_count(n_actions, n_agents):
    """``|A|**N`` as a float, raising OverflowError when it is not representable."""
    count = int(n_actions) ** int(n_agents)
    try:
        return float(count)
    except OverflowError:
        raise OverflowError(f"|A|^N = {n_actions}^{n_agents} exceeds float range") from None


def alpha_bound(delta, gamma, r_max, n_actions, n_agents):
    """Upper bound ``delta^2 (1-gamma)^2 / (r_max^2 |A|^N)`` on the OW weight."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    count = joint_action_count(n_actions, n_agents)
    return delta * delta * (1.0 - gamma) ** 2 / (r_max * r_max * count)


def sigma_bound(delta, n_actions, n_agents):
    """Upper bound ``delta * sqrt(e / (2 |A|^N))`` on the kernel bandwidth."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    count = joint_action_count(n_actions, n_agents)
    return delta * math.sqrt(math.e / (2.0 * count))


def payoff_range(payoff):
    payoff = np.asarray(payoff, dtype=np.float64)
    return float(payoff.max() - payoff.min())
