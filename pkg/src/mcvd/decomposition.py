"""
Value-decomposition networks: per-agent Q networks, mixers, and the joint
action-value approximation network.

Batched shapes used throughout: observations ``(B, N, obs_dim)``, per-agent
action indices ``(B, N)``, global state ``(B, state_dim)``.
"""

import itertools

import numpy as np

from .errors import ConfigError
from .nn import DenseNet


def one_hot(indices, depth):
    """One-hot encode integer indices; negative indices encode to all zeros."""
    indices = np.asarray(indices, dtype=np.int64)
    out = np.zeros(indices.shape + (depth,))
    valid = indices >= 0
    out[valid, indices[valid]] = 1.0
    return out


def sync_targets(online_nets, target_nets):
    """Hard copy of every online parameter into its target twin."""
    online_nets, target_nets = list(online_nets), list(target_nets)
    if len(online_nets) != len(target_nets):
        raise ConfigError("online and target network lists differ in length")
    for src, dst in zip(online_nets, target_nets):
        dst.copy_from(src)


class AgentQNet:
    """
    Individual action-value networks for all agents.

    With ``reuse_network`` a single network is shared and a one-hot agent id
    is appended to each input; with ``last_action`` the previous action is
    appended as a one-hot (all zeros at the start of an episode).
    """

    def __init__(self, obs_dim, n_agents, n_actions, rng, hidden_dim=64, hidden_layers=2,
                 last_action=True, reuse_network=True):
        self.obs_dim = obs_dim
        self.n_agents = n_agents
        self.n_actions = n_actions
        self.last_action = last_action
        self.reuse_network = reuse_network
        self._ids = np.eye(n_agents)
        self.input_dim = obs_dim + (n_actions if last_action else 0) + (n_agents if reuse_network else 0)
        sizes = [self.input_dim] + [hidden_dim] * hidden_layers + [n_actions]
        count = 1 if reuse_network else n_agents
        self.nets = [DenseNet.build(sizes, rng) for _ in range(count)]
        self.target_nets = [net.clone() for net in self.nets]

    def encode(self, obs, last_actions):
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape[-2:] != (self.n_agents, self.obs_dim):
            raise ConfigError(
                f"observations must end in shape ({self.n_agents}, {self.obs_dim}), got {obs.shape}"
            )
        parts = [obs]
        if self.last_action:
            parts.append(one_hot(last_actions, self.n_actions))
        if self.reuse_network:
            parts.append(np.broadcast_to(self._ids, obs.shape[:-1] + (self.n_agents,)))
        return np.concatenate(parts, axis=-1)

    def q_values(self, obs, last_actions, target=False):
        """Q-vectors of shape ``(B, N, A)`` (or ``(N, A)`` for unbatched input)."""
        x = self.encode(obs, last_actions)
        nets = self.target_nets if target else self.nets
        if self.reuse_network:
            flat = nets[0].forward(x.reshape(-1, self.input_dim))
            return flat.reshape(x.shape[:-1] + (self.n_actions,))
        return np.stack([nets[i].forward(x[..., i, :]) for i in range(self.n_agents)], axis=-2)

    def backward(self, dq):
        """Backpropagate ``dL/dQ`` of shape ``(B, N, A)`` through the last online forward."""
        if self.reuse_network:
            self.nets[0].backward(dq.reshape(-1, self.n_actions))
        else:
            for i, net in enumerate(self.nets):
                net.backward(dq[..., i, :])

    def sync(self):
        sync_targets(self.nets, self.target_nets)


def individual_q(agents, obs, last_action, agent_id):
    """Q-vector of one agent for a single observation."""
    all_obs = np.zeros((agents.n_agents, agents.obs_dim))
    all_obs[agent_id] = obs
    last = np.full(agents.n_agents, -1)
    last[agent_id] = last_action
    x = agents.encode(all_obs, last)[agent_id]
    net = agents.nets[0] if agents.reuse_network else agents.nets[agent_id]
    return net.predict(x)


def sum_mix(chosen_q):
    """Joint value as the plain sum of the chosen individual values."""
    return np.sum(np.asarray(chosen_q, dtype=np.float64), axis=-1)


class SumMixer:
    nets = ()

    def forward(self, chosen_q, state=None):
        chosen_q = np.asarray(chosen_q, dtype=np.float64)
        self._n = chosen_q.shape[-1]
        return sum_mix(chosen_q)

    def backward(self, dq_jt):
        dq_jt = np.asarray(dq_jt, dtype=np.float64)
        return np.repeat(dq_jt[..., None], self._n, axis=-1)

    def clone(self):
        return SumMixer()

    def copy_from(self, other):
        pass


def _elu(z):
    return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))


def _elu_grad(z):
    return np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0)))


class MonotonicMixer:
    """
    State-conditioned mixing net whose weights come from hypernetworks.

    ``Q_jt = sum_e w2_e * elu(sum_i q_i W1_ie + b1_e) + V(s)`` where ``W1`` and
    ``w2`` pass through ``abs`` so that ``Q_jt`` is non-decreasing in every
    ``q_i``.
    """

    def __init__(self, state_dim, n_agents, rng, embed_dim=32, hyper_hidden=None):
        self.state_dim = state_dim
        self.n_agents = n_agents
        self.embed_dim = embed_dim
        hyper_hidden = hyper_hidden or embed_dim
        # random biases: with zero biases a zero state gives abs(0) weights, whose gradient is zero
        build = lambda sizes, **kw: DenseNet.build(sizes, rng, random_bias=True, **kw)
        self.hyper_w1 = build([state_dim, n_agents * embed_dim], output_activation="abs")
        self.hyper_b1 = build([state_dim, embed_dim])
        self.hyper_w2 = build([state_dim, embed_dim], output_activation="abs")
        self.hyper_v = build([state_dim, hyper_hidden, 1])
        self.nets = [self.hyper_w1, self.hyper_b1, self.hyper_w2, self.hyper_v]

    def forward(self, chosen_q, state):
        q = np.atleast_2d(np.asarray(chosen_q, dtype=np.float64))
        s = np.atleast_2d(np.asarray(state, dtype=np.float64))
        b = q.shape[0]
        w1 = self.hyper_w1.forward(s).reshape(b, self.n_agents, self.embed_dim)
        b1 = self.hyper_b1.forward(s)
        w2 = self.hyper_w2.forward(s)
        v = self.hyper_v.forward(s)[:, 0]
        z = np.einsum("bn,bne->be", q, w1) + b1
        h = _elu(z)
        self._cache = (q, w1, w2, z, h)
        out = np.sum(h * w2, axis=1) + v
        return out if np.ndim(chosen_q) > 1 else out[0]

    def backward(self, dq_jt):
        """Accumulate hypernetwork gradients; return ``dL/dq`` per agent."""
        q, w1, w2, z, h = self._cache
        squeeze = np.ndim(dq_jt) == 0
        g = np.atleast_1d(np.asarray(dq_jt, dtype=np.float64))[:, None]
        self.hyper_w2.backward(g * h)
        self.hyper_v.backward(g)
        dz = g * w2 * _elu_grad(z)
        self.hyper_b1.backward(dz)
        self.hyper_w1.backward((q[:, :, None] * dz[:, None, :]).reshape(q.shape[0], -1))
        dq = np.einsum("be,bne->bn", dz, w1)
        return dq[0] if squeeze else dq

    def clone(self):
        twin = object.__new__(MonotonicMixer)
        twin.state_dim, twin.n_agents, twin.embed_dim = self.state_dim, self.n_agents, self.embed_dim
        twin.hyper_w1, twin.hyper_b1, twin.hyper_w2, twin.hyper_v = (n.clone() for n in self.nets)
        twin.nets = [twin.hyper_w1, twin.hyper_b1, twin.hyper_w2, twin.hyper_v]
        return twin

    def copy_from(self, other):
        sync_targets(other.nets, self.nets)


def monotonic_mix(chosen_q, state, mixer):
    return mixer.forward(chosen_q, state)


class JointApproxNet:
    """Unconstrained ``Q_hat(s, a)`` over the global state and one-hot joint action."""

    def __init__(self, state_dim, n_agents, n_actions, rng, hidden_dim=64, hidden_layers=2):
        self.state_dim = state_dim
        self.n_agents = n_agents
        self.n_actions = n_actions
        self.input_dim = state_dim + n_agents * n_actions
        sizes = [self.input_dim] + [hidden_dim] * hidden_layers + [1]
        self.net = DenseNet.build(sizes, rng)
        self.target_net = self.net.clone()

    @property
    def nets(self):
        return [self.net]

    def encode(self, state, actions):
        state = np.atleast_2d(np.asarray(state, dtype=np.float64))
        acts = one_hot(np.atleast_2d(actions), self.n_actions).reshape(state.shape[0], -1)
        return np.concatenate([state, acts], axis=1)

    def q(self, state, actions, target=False):
        net = self.target_net if target else self.net
        return net.forward(self.encode(state, actions))[:, 0]

    def backward(self, dq):
        self.net.backward(np.asarray(dq, dtype=np.float64)[:, None])

    def sync(self):
        sync_targets([self.net], [self.target_net])


def joint_q(joint, state, joint_action):
    return float(joint.q(state, np.asarray(joint_action)[None, :])[0])


def greedy_joint_action(q_vectors):
    """Per-agent argmax; ties go to the lowest action index."""
    return np.argmax(np.asarray(q_vectors), axis=-1)


def enumerate_joint_actions(n_actions, n_agents, cap=100_000):
    count = n_actions ** n_agents
    if count > cap:
        raise ValueError(f"{count} joint actions exceed the enumeration cap of {cap}")
    return np.array(list(itertools.product(range(n_actions), repeat=n_agents)), dtype=np.int64)


def igm_holds(agents, joint, state, observations, last_actions=None, cap=100_000):
    """
    True when the per-agent greedy actions coincide with the maximiser of
    ``Q_hat`` over every joint action. Checks consistency, not optimality.
    """
    n = agents.n_agents
    if last_actions is None:
        last_actions = np.full(n, -1)
    greedy = greedy_joint_action(agents.q_values(observations, last_actions))
    table = enumerate_joint_actions(joint.n_actions, n, cap)
    states = np.repeat(np.atleast_2d(state), len(table), axis=0)
    values = joint.q(states, table)
    best = table[int(np.argmax(values))]
    return bool(np.array_equal(best, greedy))
