"""
Fixed optimistic weighting on the matrix game
=============================================

The optimistic weighting gives weight 1 to underestimates and a constant
``alpha`` to everything else. With alpha = 0.5 the overestimates still pull
hard enough that the optimal row is pinned below the safe block.
"""

import sys

import numpy as np

from mcvd import parse_config, train_run
from mcvd.bounds import alpha_bound, delta_s, payoff_range
from mcvd.envs import OMG_PAYOFF

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
np.set_printoptions(precision=2, suppress=True)

limit = alpha_bound(delta_s(OMG_PAYOFF), 0.0, payoff_range(OMG_PAYOFF), 3, 2)
print(f"alpha would need to stay below {limit:.3e} for this payoff")

config = parse_config(overrides={"env": "matrix_game", "loss": "ow", "alpha": 0.5, "seed": seed})
final = train_run(config).final
print("greedy joint action", final.greedy_action)
print("Q_jt table")
print(final.q_jt)
print("Q_jt(A,A) < Q_jt(C,C):", final.q_jt[0, 0] < final.q_jt[2, 2])
