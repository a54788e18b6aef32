"""
Cooperative environments sharing one stepping interface.

All environments hand out a single team reward per step. Actions are integer
indices; the two navigation tasks use five actions
``0: still, 1: up, 2: down, 3: left, 4: right``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# payoff of the one-step matrix game; rows are agent A, columns agent B
OMG_PAYOFF = np.array(
    [
        [8.0, -12.0, -12.0],
        [-12.0, 6.0, 6.0],
        [-12.0, 6.0, 6.0],
    ]
)

NAV_ACTIONS = ("still", "up", "down", "left", "right")
# (drow, dcol) on the grid; (dx, dy) in the particle arena uses the same rows
GRID_MOVES = np.array([[0, 0], [-1, 0], [1, 0], [0, -1], [0, 1]])
PARTICLE_DIRS = np.array([[0.0, 0.0], [0.0, 1.0], [0.0, -1.0], [-1.0, 0.0], [1.0, 0.0]])

DEFAULT_GRID_LAYOUT = "G A . / . B G"


def _check_actions(actions, n_agents, n_actions):
    actions = np.asarray(actions, dtype=np.int64)
    if actions.shape != (n_agents,):
        raise ValueError(f"expected {n_agents} actions, got shape {actions.shape}")
    if np.any(actions < 0) or np.any(actions >= n_actions):
        raise ValueError(f"action out of range [0, {n_actions}): {actions.tolist()}")
    return actions


class MatrixGame:
    """Single-state, single-step cooperative game defined by an N-d payoff table."""

    def __init__(self, payoff=OMG_PAYOFF):
        payoff = np.asarray(payoff, dtype=np.float64)
        if payoff.ndim < 2 or len(set(payoff.shape)) != 1:
            raise ConfigError("payoff must be a square table with one axis per agent", key="payoff")
        self.payoff = payoff
        self.n_agents = payoff.ndim
        self.n_actions = payoff.shape[0]
        self.state_dim = 1
        self.obs_dim = 1
        self.episode_limit = 1
        self._done = False

    def reset(self, rng=None):
        self._done = False
        return self.state(), self.observations()

    def state(self):
        return np.zeros(1)

    def observations(self):
        return np.zeros((self.n_agents, 1))

    def available_actions(self, agent):
        return np.ones(self.n_actions, dtype=bool)

    def step(self, actions):
        actions = _check_actions(actions, self.n_agents, self.n_actions)
        self._done = True
        reward = float(self.payoff[tuple(actions)])
        return reward, True, self.state(), self.observations()


def parse_grid_layout(layout):
    """
    Parse a layout such as ``"G A . / . B G"``.

    Rows are separated by ``/`` and cells by whitespace. ``G`` marks a landmark,
    ``.`` an empty cell, and any other capital letter an agent; agents are
    numbered in alphabetical order of their letters.
    """
    rows = [r.split() for r in layout.split("/")]
    if not rows or any(len(r) != len(rows[0]) for r in rows) or not rows[0]:
        raise ConfigError(f"grid layout rows must be non-empty and equal length: {layout!r}", key="grid_layout")
    agents, landmarks = {}, []
    for r, row in enumerate(rows):
        for c, tok in enumerate(row):
            if tok == ".":
                continue
            if tok == "G":
                landmarks.append((r, c))
            elif len(tok) == 1 and tok.isupper():
                if tok in agents:
                    raise ConfigError(f"agent {tok} placed twice", key="grid_layout")
                agents[tok] = (r, c)
            else:
                raise ConfigError(f"unrecognised grid token {tok!r}", key="grid_layout")
    if not agents:
        raise ConfigError("grid layout has no agents", key="grid_layout")
    if not landmarks:
        raise ConfigError("grid layout has no landmarks", key="grid_layout")
    names = sorted(agents)
    return (
        (len(rows), len(rows[0])),
        np.array([agents[n] for n in names]),
        np.array(landmarks),
        names,
    )


def _manhattan_cover(agents, landmarks):
    """Per-landmark Manhattan distance to the nearest agent."""
    d = np.abs(landmarks[:, None, :] - agents[None, :, :]).sum(axis=2)
    return d.min(axis=1)


def gridnav_transition(shape, agents, landmarks, actions, collision_penalty=10.0):
    """
    Apply one joint move on the grid.

    Returns ``(next_agents, reward, collided)``. Moves off the grid leave the
    agent in place. If two agents would end in one cell, or swap cells, the
    team loses ``collision_penalty`` per colliding pair and every agent stays
    where it was. Otherwise each landmark contributes the sign of the decrease
    in its nearest-agent Manhattan distance.
    """
    agents = np.asarray(agents)
    tentative = agents + GRID_MOVES[np.asarray(actions)]
    tentative[:, 0] = np.clip(tentative[:, 0], 0, shape[0] - 1)
    tentative[:, 1] = np.clip(tentative[:, 1], 0, shape[1] - 1)
    n = len(agents)
    collisions = 0
    for i in range(n):
        for j in range(i + 1, n):
            same_cell = np.array_equal(tentative[i], tentative[j])
            swapped = np.array_equal(tentative[i], agents[j]) and np.array_equal(tentative[j], agents[i])
            if same_cell or swapped:
                collisions += 1
    if collisions:
        return agents.copy(), -collision_penalty * collisions, True
    before = _manhattan_cover(agents, landmarks)
    after = _manhattan_cover(tentative, landmarks)
    return tentative, float(np.sign(before - after).sum()), False


@dataclass
class GridNavState:
    agents: np.ndarray
    landmarks: np.ndarray
    t: int = 0


class GridNav:
    """Discrete grid version of cooperative navigation with revert-on-collision."""

    def __init__(self, layout=DEFAULT_GRID_LAYOUT, episode_limit=10, collision_penalty=10.0):
        self.shape, self.start, self.landmarks, self.agent_names = parse_grid_layout(layout)
        self.n_agents = len(self.start)
        self.n_actions = len(NAV_ACTIONS)
        self.n_cells = self.shape[0] * self.shape[1]
        self.state_dim = self.n_agents * self.n_cells
        self.obs_dim = self.n_agents * self.n_cells
        self.episode_limit = episode_limit
        self.collision_penalty = collision_penalty
        self.current = GridNavState(self.start.copy(), self.landmarks.copy())

    def reset(self, rng=None):
        self.current = GridNavState(self.start.copy(), self.landmarks.copy())
        return self.state(), self.observations()

    def _one_hot(self, cell):
        v = np.zeros(self.n_cells)
        v[cell[0] * self.shape[1] + cell[1]] = 1.0
        return v

    def state(self):
        return np.concatenate([self._one_hot(a) for a in self.current.agents])

    def observations(self):
        cells = [self._one_hot(a) for a in self.current.agents]
        # own cell first, then the others in index order
        return np.stack(
            [np.concatenate([cells[i]] + cells[:i] + cells[i + 1:]) for i in range(self.n_agents)]
        )

    def available_actions(self, agent):
        return np.ones(self.n_actions, dtype=bool)

    def step(self, actions):
        actions = _check_actions(actions, self.n_agents, self.n_actions)
        agents, reward, _ = gridnav_transition(
            self.shape, self.current.agents, self.landmarks, actions, self.collision_penalty
        )
        self.current = GridNavState(agents, self.landmarks, self.current.t + 1)
        terminal = self.current.t >= self.episode_limit
        return reward, terminal, self.state(), self.observations()


@dataclass
class ParticleNavState:
    pos: np.ndarray
    vel: np.ndarray
    landmarks: np.ndarray
    t: int = 0


@dataclass
class ParticleNavParams:
    n_agents: int = 3
    dt: float = 0.1
    damping: float = 0.25
    accel_gain: float = 5.0
    agent_radius: float = 0.1
    episode_limit: int = 25
    collision_penalty: float = 10.0
    arena: float = 1.0


def particlenav_reward(pos, landmarks, params):
    dist = np.linalg.norm(landmarks[:, None, :] - pos[None, :, :], axis=2)
    coverage = dist.min(axis=1).sum()
    gap = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    overlaps = np.triu(gap < 2.0 * params.agent_radius, k=1).sum()
    return float(-(coverage + params.collision_penalty * overlaps) / params.n_agents)


class ParticleNav:
    """
    Continuous cooperative navigation in ``[-1, 1]^2`` with discrete
    acceleration actions. There are as many landmarks as agents, and the
    reward is averaged over agents.
    """

    def __init__(self, params=None, **kwargs):
        self.params = params or ParticleNavParams(**kwargs)
        p = self.params
        if p.n_agents < 1:
            raise ConfigError("n_agents must be at least 1", key="n_agents")
        self.n_agents = p.n_agents
        self.n_actions = len(NAV_ACTIONS)
        self.state_dim = 6 * p.n_agents
        self.obs_dim = 4 + 2 * p.n_agents + 2 * (p.n_agents - 1)
        self.episode_limit = p.episode_limit
        self.current = None

    def reset(self, rng):
        n, a = self.n_agents, self.params.arena
        self.current = ParticleNavState(
            pos=rng.uniform(-a, a, size=(n, 2)),
            vel=np.zeros((n, 2)),
            landmarks=rng.uniform(-a, a, size=(n, 2)),
        )
        return self.state(), self.observations()

    def state(self):
        s = self.current
        return np.concatenate([s.pos.ravel(), s.vel.ravel(), s.landmarks.ravel()])

    def observations(self):
        s = self.current
        obs = []
        for i in range(self.n_agents):
            others = np.delete(s.pos, i, axis=0) - s.pos[i]
            obs.append(
                np.concatenate([s.pos[i], s.vel[i], (s.landmarks - s.pos[i]).ravel(), others.ravel()])
            )
        return np.stack(obs)

    def available_actions(self, agent):
        return np.ones(self.n_actions, dtype=bool)

    def reward(self):
        return particlenav_reward(self.current.pos, self.current.landmarks, self.params)

    def step(self, actions):
        actions = _check_actions(actions, self.n_agents, self.n_actions)
        p, s = self.params, self.current
        vel = (1.0 - p.damping) * s.vel + p.accel_gain * PARTICLE_DIRS[actions] * p.dt
        pos = np.clip(s.pos + vel * p.dt, -p.arena, p.arena)
        self.current = ParticleNavState(pos, vel, s.landmarks, s.t + 1)
        terminal = self.current.t >= p.episode_limit
        return self.reward(), terminal, self.state(), self.observations()


def encode_global_state(env):
    return env.state()
