"""
The small grid navigation task
==============================

Two agents A and B sit in the middle column of a 2x3 grid with a landmark in
two opposite corners::

    G A .
    . B G

Each landmark scores the sign of the change in its nearest-agent Manhattan
distance. Colliding moves cost 10 and nobody moves.
"""

import numpy as np

from mcvd.envs import DEFAULT_GRID_LAYOUT, NAV_ACTIONS, GridNav, gridnav_transition, parse_grid_layout

shape, agents, landmarks, names = parse_grid_layout(DEFAULT_GRID_LAYOUT)

# the full one-step payoff from the start layout
payoff = np.zeros((5, 5))
for a in range(5):
    for b in range(5):
        payoff[a, b] = gridnav_transition(shape, agents, landmarks, [a, b])[1]

print("rows: A's action, columns: B's action")
print("        " + " ".join(f"{n:>6}" for n in NAV_ACTIONS))
for a, row in enumerate(payoff):
    print(f"{NAV_ACTIONS[a]:>6}  " + " ".join(f"{v:>6g}" for v in row))

# a short scripted episode: A heads left to its landmark, B right to the other
env = GridNav()
env.reset()
total = 0.0
for step in range(3):
    reward, done, state, obs = env.step([3, 4])
    total += reward
    print(f"step {step + 1}: reward {reward:+g}, positions {env.current.agents.tolist()}")
print("return", total)
