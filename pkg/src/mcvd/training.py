"""
Replay, exploration and the two-loss training loop.

Each training step updates two disjoint parameter sets: the individual Q
networks (plus mixer hypernetworks, if any) through the TD loss on the mixed
joint value, and the joint approximation network through a plain squared
error against the same bootstrapped target.
"""

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import losses
from .decomposition import (
    AgentQNet,
    JointApproxNet,
    MonotonicMixer,
    SumMixer,
    enumerate_joint_actions,
    greedy_joint_action,
)
from .errors import TrainingAborted
from .nn import RMSProp, clip_grad_norm

log = logging.getLogger(__name__)


@dataclass
class Transition:
    state: np.ndarray
    obs: np.ndarray
    last_actions: np.ndarray
    actions: np.ndarray
    reward: float
    next_state: np.ndarray
    next_obs: np.ndarray
    terminal: bool


class ReplayBuffer:
    """
    Fixed-capacity FIFO store of whole episodes with uniform sampling.

    Every environment here runs episodes of one fixed length, so episode ``k``
    of the ring occupies the ``episode_len`` consecutive transition slots
    starting at ``k * episode_len``. ``capacity`` and batch sizes count
    episodes; a batch holds every transition of the sampled episodes.
    """

    def __init__(self, capacity, state_dim, n_agents, obs_dim, episode_len=1):
        self.capacity = int(capacity)
        self.episode_len = int(episode_len)
        slots = self.capacity * self.episode_len
        self.state = np.zeros((slots, state_dim))
        self.obs = np.zeros((slots, n_agents, obs_dim))
        self.last_actions = np.zeros((slots, n_agents), dtype=np.int64)
        self.actions = np.zeros((slots, n_agents), dtype=np.int64)
        self.reward = np.zeros(slots)
        self.next_state = np.zeros((slots, state_dim))
        self.next_obs = np.zeros((slots, n_agents, obs_dim))
        self.terminal = np.zeros(slots)
        self.cursor = 0
        self.size = 0

    def __len__(self):
        """Number of stored transitions."""
        return self.size

    @property
    def n_episodes(self):
        return self.size // self.episode_len

    def add(self, tr):
        i = self.cursor
        self.state[i] = tr.state
        self.obs[i] = tr.obs
        self.last_actions[i] = tr.last_actions
        self.actions[i] = tr.actions
        self.reward[i] = tr.reward
        self.next_state[i] = tr.next_state
        self.next_obs[i] = tr.next_obs
        self.terminal[i] = float(tr.terminal)
        slots = len(self.reward)
        self.cursor = (i + 1) % slots
        self.size = min(self.size + 1, slots)

    def add_episode(self, transitions):
        if len(transitions) != self.episode_len:
            raise ValueError(f"episode has {len(transitions)} steps, buffer expects {self.episode_len}")
        for tr in transitions:
            self.add(tr)

    def ready(self, batch_size):
        return self.n_episodes >= batch_size

    def sample_indices(self, batch_size, rng):
        if not self.ready(batch_size):
            raise ValueError(f"buffer holds {self.n_episodes} episodes, need {batch_size}")
        episodes = rng.integers(0, self.n_episodes, size=batch_size)
        if self.episode_len == 1:
            return episodes
        return (episodes[:, None] * self.episode_len + np.arange(self.episode_len)).ravel()

    def sample(self, batch_size, rng):
        """Uniform i.i.d. batch of episodes, flattened to a dict of stacked transitions."""
        idx = self.sample_indices(batch_size, rng)
        return self.gather(idx)

    def gather(self, idx):
        return {
            "state": self.state[idx],
            "obs": self.obs[idx],
            "last_actions": self.last_actions[idx],
            "actions": self.actions[idx],
            "reward": self.reward[idx],
            "next_state": self.next_state[idx],
            "next_obs": self.next_obs[idx],
            "terminal": self.terminal[idx],
        }


def sample_batch(buffer, batch_size, rng):
    """Mini-batch, or ``None`` when the buffer is not yet full enough."""
    if not buffer.ready(batch_size):
        return None
    return buffer.sample(batch_size, rng)


@dataclass(frozen=True)
class EpsilonSchedule:
    max_epsilon: float = 1.0
    min_epsilon: float = 0.05
    anneal_steps: int = 50_000

    def __call__(self, step):
        if self.anneal_steps <= 0 or step >= self.anneal_steps:
            return self.min_epsilon
        frac = step / self.anneal_steps
        return self.max_epsilon + frac * (self.min_epsilon - self.max_epsilon)


def epsilon_at(step, schedule):
    return schedule(step)


def select_actions(agents, obs, last_actions, epsilon, rng):
    """Epsilon-greedy, independently per agent."""
    q = agents.q_values(obs, last_actions)
    greedy = greedy_joint_action(q)
    if epsilon <= 0:
        return greedy
    explore = rng.random(agents.n_agents) < epsilon
    random_actions = rng.integers(0, agents.n_actions, size=agents.n_agents)
    return np.where(explore, random_actions, greedy)


class Learner:
    """Owns every network and optimiser of one training run."""

    def __init__(self, config, env, seed_seq=None):
        self.config = config
        self.n_agents = env.n_agents
        self.n_actions = env.n_actions
        seed_seq = seed_seq or np.random.SeedSequence(config.seed)
        agent_ss, mixer_ss, joint_ss = seed_seq.spawn(3)
        self.agents = AgentQNet(
            env.obs_dim,
            env.n_agents,
            env.n_actions,
            np.random.default_rng(agent_ss),
            hidden_dim=config.hidden_dim,
            hidden_layers=config.hidden_layers,
            last_action=config.last_action,
            reuse_network=config.reuse_network,
        )
        if config.mixer == "monotonic":
            self.mixer = MonotonicMixer(
                env.state_dim, env.n_agents, np.random.default_rng(mixer_ss), embed_dim=config.mixer_embed_dim
            )
        else:
            self.mixer = SumMixer()
        self.target_mixer = self.mixer.clone()
        self.joint = None
        if config.use_joint_net:
            self.joint = JointApproxNet(
                env.state_dim,
                env.n_agents,
                env.n_actions,
                np.random.default_rng(joint_ss),
                hidden_dim=config.hidden_dim,
                hidden_layers=config.hidden_layers,
            )
        opt = dict(lr=config.lr, decay=config.rms_decay, eps=config.rms_eps)
        self.td_nets = list(self.agents.nets) + list(self.mixer.nets)
        self.td_opt = RMSProp(self.td_nets, **opt)
        self.jt_opt = RMSProp(self.joint.nets, **opt) if self.joint else None

    def sync_targets(self):
        self.agents.sync()
        self.target_mixer.copy_from(self.mixer)
        if self.joint:
            self.joint.sync()

    def all_nets(self):
        return self.td_nets + (self.joint.nets if self.joint else [])

    def zero_grad(self):
        for net in self.all_nets():
            net.zero_grad()

    def targets(self, batch):
        """Bootstrapped ``y`` for a batch; plain arrays, never part of any backward pass."""
        cfg = self.config
        next_obs, actions = batch["next_obs"], batch["actions"]
        q_next_target = self.agents.q_values(next_obs, actions, target=True)
        if cfg.double_q_argmax_source == "online":
            best = greedy_joint_action(self.agents.q_values(next_obs, actions))
        else:
            best = greedy_joint_action(q_next_target)
        if self.joint is not None:
            q_next = self.joint.q(batch["next_state"], best, target=True)
        else:
            chosen = np.take_along_axis(q_next_target, best[..., None], axis=-1)[..., 0]
            q_next = self.target_mixer.forward(chosen, batch["next_state"])
        return losses.td_target(batch["reward"], cfg.gamma, batch["terminal"], q_next)

    def mixed_q(self, batch):
        q = self.agents.q_values(batch["obs"], batch["last_actions"])
        chosen = np.take_along_axis(q, batch["actions"][..., None], axis=-1)[..., 0]
        return q, self.mixer.forward(chosen, batch["state"])

    def td_loss(self, q_jt, y):
        cfg = self.config
        return losses.td_loss(cfg.loss, q_jt, y, alpha=cfg.alpha, sigma=cfg.sigma)

    def compute_gradients(self, batch):
        """Fill gradient buffers for both losses; returns ``(loss_td, loss_jt)``."""
        self.zero_grad()
        y = self.targets(batch)
        q, q_jt = self.mixed_q(batch)
        loss_td, d_qjt = self.td_loss(q_jt, y)
        d_chosen = self.mixer.backward(d_qjt)
        dq = np.zeros_like(q)
        np.put_along_axis(dq, batch["actions"][..., None], d_chosen[..., None], axis=-1)
        self.agents.backward(dq)
        loss_jt = 0.0
        if self.joint is not None:
            q_hat = self.joint.q(batch["state"], batch["actions"])
            loss_jt, d_hat = losses.joint_approx_loss(q_hat, y)
            self.joint.backward(d_hat)
        return loss_td, loss_jt

    def train_step(self, batch):
        cfg = self.config
        loss_td, loss_jt = self.compute_gradients(batch)
        if not (np.isfinite(loss_td) and np.isfinite(loss_jt)):
            raise TrainingAborted(f"non-finite loss: loss_td={loss_td} loss_jt={loss_jt}")
        scale_td = clip_grad_norm(self.td_nets, cfg.grad_norm_clip)
        self.td_opt.step()
        scale_jt = 1.0
        if self.joint is not None:
            scale_jt = clip_grad_norm(self.joint.nets, cfg.grad_norm_clip)
            self.jt_opt.step()
        return {"loss_td": loss_td, "loss_jt": loss_jt, "clip_td": scale_td, "clip_jt": scale_jt}

    def joint_tables(self, state, obs):
        """``Q_i`` vectors plus ``Q_jt`` / ``Q_hat`` over every joint action (single state)."""
        n, a = self.n_agents, self.n_actions
        last = np.full(n, -1)
        q = self.agents.q_values(obs, last)
        table = enumerate_joint_actions(a, n)
        chosen = q[np.arange(n)[None, :], table]
        states = np.repeat(np.atleast_2d(state), len(table), axis=0)
        q_jt = self.mixer.forward(chosen, states).reshape((a,) * n)
        q_hat = self.joint.q(states, table).reshape((a,) * n) if self.joint else None
        return q, q_jt, q_hat


def train_step(batch, learner):
    return learner.train_step(batch)


def run_episode(env, learner, epsilon, rng, env_rng, buffer=None):
    """Roll out one episode; returns ``(undiscounted return, length)``."""
    state, obs = env.reset(env_rng)
    last = np.full(env.n_agents, -1)
    total, episode = 0.0, []
    while True:
        actions = select_actions(learner.agents, obs, last, epsilon, rng)
        reward, terminal, next_state, next_obs = env.step(actions)
        episode.append(Transition(state, obs, last, actions, reward, next_state, next_obs, terminal))
        total += reward
        state, obs, last = next_state, next_obs, actions
        if terminal:
            if buffer is not None:
                buffer.add_episode(episode)
            return total, len(episode)


@dataclass
class EvalReport:
    step: int
    mean_return: float
    std_return: float
    epsilon: float = float("nan")
    loss_td: float = float("nan")
    loss_jt: float = float("nan")
    greedy_action: tuple = ()
    q_vectors: np.ndarray = None
    q_jt: np.ndarray = None
    q_hat: np.ndarray = None


def evaluate(env, learner, episodes, env_rng, step=0):
    """Greedy rollouts without learning; matrix games also get full value tables."""
    returns = [run_episode(env, learner, 0.0, None, env_rng)[0] for _ in range(episodes)]
    state, obs = env.reset(env_rng)
    last = np.full(env.n_agents, -1)
    greedy = tuple(int(a) for a in greedy_joint_action(learner.agents.q_values(obs, last)))
    report = EvalReport(step, float(np.mean(returns)), float(np.std(returns)), greedy_action=greedy)
    if env.episode_limit == 1 and env.n_actions ** env.n_agents <= 4096:
        report.q_vectors, report.q_jt, report.q_hat = learner.joint_tables(state, obs)
    return report


@dataclass
class RunResult:
    config: object
    learner: Learner
    curve: list = field(default_factory=list)
    train_steps: int = 0
    episodes: int = 0

    @property
    def final(self):
        return self.curve[-1]


def train_run(config, env=None, on_eval=None):
    """
    Run one full training loop from a resolved config.

    Everything random derives from ``config.seed``: network initialisation,
    exploration, replay sampling, and training and evaluation environment
    resets each draw from their own stream.
    """
    env = env or config.make_env()
    eval_env = config.make_env()
    root = np.random.SeedSequence(config.seed)
    nets_ss, explore_ss, replay_ss, env_ss, eval_ss = root.spawn(5)
    learner = Learner(config, env, nets_ss)
    explore_rng = np.random.default_rng(explore_ss)
    replay_rng = np.random.default_rng(replay_ss)
    env_rng = np.random.default_rng(env_ss)
    buffer = ReplayBuffer(config.buffer_size, env.state_dim, env.n_agents, env.obs_dim, env.episode_limit)
    schedule = EpsilonSchedule(config.max_epsilon, config.min_epsilon, config.anneal_steps)
    result = RunResult(config, learner)

    def record(step, td, jt):
        # a fresh stream per evaluation point keeps the curve independent of evaluation frequency
        eval_rng = np.random.default_rng(np.random.SeedSequence(eval_ss.entropy, spawn_key=eval_ss.spawn_key + (step,)))
        report = evaluate(eval_env, learner, config.evaluate_epoch, eval_rng, step)
        report.epsilon = schedule(step)
        report.loss_td = float(np.mean(td)) if td else float("nan")
        report.loss_jt = float(np.mean(jt)) if jt else float("nan")
        result.curve.append(report)
        if on_eval:
            on_eval(report)
        log.debug("step %d return %.3f", step, report.mean_return)

    record(0, [], [])
    next_eval = config.evaluate_fre
    steps = 0
    td_losses, jt_losses = [], []
    for episode in itertools.count(1):
        if steps >= config.n_steps:
            break
        _, length = run_episode(env, learner, schedule(steps), explore_rng, env_rng, buffer)
        steps += length
        result.episodes = episode
        if episode % config.train_fre == 0 and buffer.ready(config.batch_size):
            metrics = learner.train_step(buffer.sample(config.batch_size, replay_rng))
            result.train_steps += 1
            td_losses.append(metrics["loss_td"])
            jt_losses.append(metrics["loss_jt"])
            if config.target_update_unit == "steps" and result.train_steps % config.target_update_cycle == 0:
                learner.sync_targets()
        if config.target_update_unit == "episodes" and episode % config.target_update_cycle == 0:
            learner.sync_targets()
        while next_eval <= min(steps, config.n_steps):
            record(next_eval, td_losses, jt_losses)
            td_losses, jt_losses = [], []
            next_eval += config.evaluate_fre
    return result
