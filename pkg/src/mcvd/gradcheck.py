"""
Finite-difference checks for every hand-written backward pass.

Sample weights of the TD losses are computed once from the analytic pass and
then held fixed while differencing, which is exactly the contract of the
detached weights.
"""

import numpy as np

from . import losses
from .config import TrainingConfig, resolve
from .decomposition import AgentQNet, JointApproxNet, MonotonicMixer
from .envs import ParticleNav
from .nn import max_relative_error, numerical_gradient, relu_margin

TOLERANCE = 1e-4
# central differences straddle a relu kink when a pre-activation is this close to zero
KINK_MARGIN = 1e-3


def _smooth_draw(draw, nets, forward, tries=200):
    """Redraw inputs until every relu pre-activation sits clear of its kink."""
    for _ in range(tries):
        data = draw()
        forward(data)
        if min(relu_margin(net) for net in nets) > KINK_MARGIN:
            return data
    raise RuntimeError("could not find an evaluation point away from relu kinks")


def _frozen_weights(kind, q, y, rng):
    if kind == "mcvd":
        return losses.mcvd_weight(q, y, sigma=float(rng.uniform(0.5, 3.0)))
    return losses.ow_weight(q, y, alpha=float(rng.uniform(0.05, 1.0)))


def check_agent_net(seed, kind="mcvd", batch=8):
    rng = np.random.default_rng(seed)
    n_agents, n_actions, obs_dim = 3, 5, 6
    agents = AgentQNet(obs_dim, n_agents, n_actions, rng, hidden_dim=24)
    obs, last = _smooth_draw(
        lambda: (rng.normal(size=(batch, n_agents, obs_dim)), rng.integers(-1, n_actions, size=(batch, n_agents))),
        agents.nets,
        lambda d: agents.q_values(*d),
    )
    acts = rng.integers(0, n_actions, size=(batch, n_agents))
    y = rng.normal(scale=3.0, size=batch)

    def mixed():
        q = agents.q_values(obs, last)
        return q, np.take_along_axis(q, acts[..., None], axis=-1)[..., 0].sum(axis=1)

    agents.nets[0].zero_grad()
    q, q_jt = mixed()
    w = _frozen_weights(kind, q_jt, y, rng)
    _, d = losses.weighted_squared_loss(q_jt, y, w)
    dq = np.zeros_like(q)
    np.put_along_axis(dq, acts[..., None], np.repeat(d[:, None], n_agents, axis=1)[..., None], axis=-1)
    agents.backward(dq)
    analytic = [g.copy() for g in agents.nets[0].gradients()]
    numeric = numerical_gradient(
        agents.nets[0].parameters(), lambda: losses.weighted_squared_loss(mixed()[1], y, w)[0]
    )
    return max_relative_error(analytic, numeric)


def check_joint_net(seed, batch=8):
    rng = np.random.default_rng(seed)
    state_dim, n_agents, n_actions = 7, 3, 4
    joint = JointApproxNet(state_dim, n_agents, n_actions, rng, hidden_dim=24)
    state, acts = _smooth_draw(
        lambda: (rng.normal(size=(batch, state_dim)), rng.integers(0, n_actions, size=(batch, n_agents))),
        joint.nets,
        lambda d: joint.q(*d),
    )
    y = rng.normal(scale=3.0, size=batch)
    joint.net.zero_grad()
    _, d = losses.joint_approx_loss(joint.q(state, acts), y)
    joint.backward(d)
    analytic = [g.copy() for g in joint.net.gradients()]
    numeric = numerical_gradient(joint.net.parameters(), lambda: losses.joint_approx_loss(joint.q(state, acts), y)[0])
    return max_relative_error(analytic, numeric)


def check_mixer(seed, kind="mcvd", batch=8):
    """Checks hypernetwork parameters and the gradient flowing back to the chosen values."""
    rng = np.random.default_rng(seed)
    state_dim, n_agents = 5, 3
    mixer = MonotonicMixer(state_dim, n_agents, rng, embed_dim=8)
    state = _smooth_draw(lambda: rng.normal(size=(batch, state_dim)), mixer.nets, lambda s: mixer.forward(np.zeros((batch, n_agents)), s))
    q = rng.normal(size=(batch, n_agents))
    y = rng.normal(scale=3.0, size=batch)
    for net in mixer.nets:
        net.zero_grad()
    q_jt = mixer.forward(q, state)
    w = _frozen_weights(kind, q_jt, y, rng)
    _, d = losses.weighted_squared_loss(q_jt, y, w)
    dq = mixer.backward(d)
    analytic = [g.copy() for net in mixer.nets for g in net.gradients()] + [dq]
    params = [p for net in mixer.nets for p in net.parameters()] + [q]
    numeric = numerical_gradient(params, lambda: losses.weighted_squared_loss(mixer.forward(q, state), y, w)[0])
    return max_relative_error(analytic, numeric)


def check_loss(seed, kind, batch=16):
    """Gradient of a TD loss operator with respect to ``Q_jt`` (weights frozen)."""
    rng = np.random.default_rng(seed)
    q = rng.normal(scale=4.0, size=batch)
    y = rng.normal(scale=4.0, size=batch)
    if kind == "mcvd":
        sigma = float(rng.uniform(0.5, 3.0))
        _, analytic = losses.mcvd_td_loss(q, y, sigma)
        w = losses.mcvd_weight(q, y, sigma)
    else:
        alpha = float(rng.uniform(0.05, 1.0))
        _, analytic = losses.weighted_td_loss(q, y, alpha)
        w = losses.ow_weight(q, y, alpha)
    numeric = numerical_gradient([q], lambda: losses.weighted_squared_loss(q, y, w)[0])
    return max_relative_error([analytic], numeric)


def check_train_step(seed, mixer="sum", loss="mcvd", batch=8):
    """Gradient of the full TD loss of one training batch wrt every agent-network parameter."""
    from .training import Learner

    rng = np.random.default_rng(seed)
    env = ParticleNav(n_agents=2)
    config = resolve(TrainingConfig(env="particlenav", mixer=mixer, loss=loss, hidden_dim=16, seed=seed))
    learner = Learner(config, env)
    n, a = env.n_agents, env.n_actions

    def draw():
        return {
            "state": rng.normal(size=(batch, env.state_dim)),
            "obs": rng.normal(size=(batch, n, env.obs_dim)),
            "last_actions": rng.integers(-1, a, size=(batch, n)),
            "actions": rng.integers(0, a, size=(batch, n)),
            "reward": rng.normal(size=batch),
            "next_state": rng.normal(size=(batch, env.state_dim)),
            "next_obs": rng.normal(size=(batch, n, env.obs_dim)),
            "terminal": (rng.random(batch) < 0.3).astype(float),
        }

    batch_data = _smooth_draw(draw, learner.td_nets, learner.mixed_q)
    learner.compute_gradients(batch_data)
    analytic = [g.copy() for net in learner.td_nets for g in net.gradients()]
    y = learner.targets(batch_data)
    _, q_jt = learner.mixed_q(batch_data)
    if loss == "mcvd":
        w = losses.mcvd_weight(q_jt, y, config.sigma)
    elif loss == "ow":
        w = losses.ow_weight(q_jt, y, config.alpha)
    else:
        w = np.ones_like(y)
    params = [p for net in learner.td_nets for p in net.parameters()]
    numeric = numerical_gradient(
        params, lambda: losses.weighted_squared_loss(learner.mixed_q(batch_data)[1], y, w)[0]
    )
    return max_relative_error(analytic, numeric)


SUITE = {
    "agent_net/mcvd": lambda s: check_agent_net(s, "mcvd"),
    "agent_net/ow": lambda s: check_agent_net(s, "ow"),
    "joint_net": check_joint_net,
    "monotonic_mixer/mcvd": lambda s: check_mixer(s, "mcvd"),
    "monotonic_mixer/ow": lambda s: check_mixer(s, "ow"),
    "loss/mcvd": lambda s: check_loss(s, "mcvd"),
    "loss/ow": lambda s: check_loss(s, "ow"),
    "train_step/sum": lambda s: check_train_step(s, "sum"),
    "train_step/monotonic": lambda s: check_train_step(s, "monotonic"),
}


def run_suite(seeds=range(10)):
    """Worst relative error per check over the given seeds."""
    return {name: max(check(seed) for seed in seeds) for name, check in SUITE.items()}

