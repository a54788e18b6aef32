"""
Bandwidth and weight limits, and a gradient check
=================================================

For a payoff with optimality gap ``delta`` the correntropy bandwidth has to
shrink like ``|A|^(-N/2)`` and the optimistic weight like ``|A|^(-N)``. The
second half checks every hand-written backward pass with central differences.
"""

from mcvd.bounds import alpha_bound, sigma_bound
from mcvd.gradcheck import run_suite

print(" |A|  N   sigma_bound   alpha_bound")
for n_actions in (3, 5):
    for n_agents in (2, 3, 4):
        s = sigma_bound(2.0, n_actions, n_agents)
        a = alpha_bound(2.0, 0.0, 20.0, n_actions, n_agents)
        print(f"{n_actions:>4} {n_agents:>2}  {s:12.6f}  {a:12.4e}")

# one seed is enough for a demonstration; the test-suite uses ten
for name, err in run_suite(range(1)).items():
    print(f"{name:<24} {err:.2e}")
