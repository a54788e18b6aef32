"""
Continuous cooperative navigation
=================================

Three agents accelerate in one of four directions (or coast) inside
``[-1, 1]^2`` and must spread over three landmarks. The reward each step is
minus the summed landmark coverage distance, with a penalty for overlapping
agents, averaged over agents. A uniform random policy is the reference point.

Training for the full 200,000 steps takes a few minutes; pass a smaller step
count as the first argument for a quick look.
"""

import sys

import numpy as np

from mcvd import parse_config, train_run

n_steps = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
config = parse_config(overrides={"env": "particlenav", "n_steps": n_steps, "evaluate_fre": max(n_steps // 10, 1)})

env = config.make_env()
rng = np.random.default_rng(0)
returns = []
for _ in range(200):
    env.reset(rng)
    done, total = False, 0.0
    while not done:
        r, done, _, _ = env.step(rng.integers(0, env.n_actions, size=env.n_agents))
        total += r
    returns.append(total)
print(f"uniform random policy: {np.mean(returns):.2f}")

result = train_run(config, on_eval=lambda e: print(f"step {e.step:>7}  greedy return {e.mean_return:8.2f}"))
