import numpy as np
import pytest
from scipy import stats

from mcvd import parse_config, train_run
from mcvd.decomposition import AgentQNet, greedy_joint_action
from mcvd.envs import MatrixGame, ParticleNav
from mcvd.training import (
    EpsilonSchedule,
    Learner,
    ReplayBuffer,
    Transition,
    evaluate,
    run_episode,
    sample_batch,
    select_actions,
)


def test_epsilon_schedule():
    sched = EpsilonSchedule()
    assert sched(0) == 1.0
    assert sched(50_000) == 0.05
    assert sched(10**6) == 0.05
    assert sched(25_000) == pytest.approx(0.525)


def test_epsilon_zero_is_greedy(rng):
    agents = AgentQNet(3, 2, 4, rng)
    obs = rng.normal(size=(2, 3))
    greedy = greedy_joint_action(agents.q_values(obs, [-1, -1]))
    np.testing.assert_array_equal(select_actions(agents, obs, [-1, -1], 0.0, None), greedy)


def test_epsilon_one_is_uniform(rng):
    agents = AgentQNet(3, 1, 5, rng)
    obs = np.zeros((1, 3))
    draws = [select_actions(agents, obs, [-1], 1.0, rng)[0] for _ in range(10_000)]
    assert stats.chisquare(np.bincount(draws, minlength=5)).pvalue > 1e-3


def test_selection_reproducible(rng):
    agents = AgentQNet(3, 2, 5, rng)
    obs = np.zeros((2, 3))
    runs = []
    for _ in range(2):
        r = np.random.default_rng(7)
        runs.append([tuple(select_actions(agents, obs, [-1, -1], 0.5, r)) for _ in range(50)])
    assert runs[0] == runs[1]


def _transition(k):
    return Transition(np.full(1, k), np.full((2, 1), k), np.zeros(2, int), np.array([k % 3, 0]),
                      float(k), np.full(1, k), np.full((2, 1), k), True)


def test_buffer_single_element(rng):
    buf = ReplayBuffer(4, 1, 2, 1)
    buf.add(_transition(5))
    batch = buf.sample(1, rng)
    assert batch["reward"][0] == 5.0


def test_buffer_fifo(rng):
    buf = ReplayBuffer(3, 1, 2, 1)
    for k in range(5):
        buf.add(_transition(k))
    assert len(buf) == 3
    assert sorted(buf.reward.tolist()) == [2.0, 3.0, 4.0]


def test_buffer_underfilled(rng):
    buf = ReplayBuffer(8, 1, 2, 1)
    buf.add(_transition(0))
    assert sample_batch(buf, 4, rng) is None
    with pytest.raises(ValueError):
        buf.sample(4, rng)


def test_buffer_samples_whole_episodes(rng):
    buf = ReplayBuffer(3, 1, 2, 1, episode_len=4)
    for ep in range(5):
        buf.add_episode([_transition(10 * ep + t) for t in range(4)])
    assert buf.n_episodes == 3
    rewards = np.concatenate([buf.sample(3, rng)["reward"].reshape(3, 4) for _ in range(4)])
    for row in rewards:
        assert row[0] // 10 in (2, 3, 4)
        np.testing.assert_array_equal(row, row[0] + np.arange(4))
    with pytest.raises(ValueError):
        buf.add_episode([_transition(0)])


def test_buffer_uniform_slots(rng):
    buf = ReplayBuffer(10, 1, 2, 1)
    for k in range(10):
        buf.add(_transition(k))
    counts = np.bincount(np.concatenate([buf.sample_indices(10, rng) for _ in range(2000)]), minlength=10)
    assert stats.chisquare(counts).pvalue > 1e-3


def _omg_learner(**overrides):
    config = parse_config(overrides={"env": "matrix_game", **overrides})
    env = config.make_env()
    return config, env, Learner(config, env, np.random.SeedSequence(0))


def _omg_batch(actions, reward):
    n = len(reward)
    return {
        "state": np.zeros((n, 1)),
        "obs": np.zeros((n, 2, 1)),
        "last_actions": np.full((n, 2), -1),
        "actions": np.asarray(actions),
        "reward": np.asarray(reward, dtype=float),
        "next_state": np.zeros((n, 1)),
        "next_obs": np.zeros((n, 2, 1)),
        "terminal": np.ones(n),
    }


def test_terminal_target_ignores_next_state():
    _, _, learner = _omg_learner()
    batch = _omg_batch([[0, 0]], [8.0])
    y1 = learner.targets(batch)
    learner.joint.target_net.flat_params += 5.0
    learner.agents.target_nets[0].flat_params -= 3.0
    assert y1[0] == 8.0 and learner.targets(batch)[0] == 8.0


def test_fixed_point_batch_leaves_parameters():
    _, _, learner = _omg_learner()
    for net in learner.all_nets():
        net.flat_params[...] = 0.0
    before = [net.flat_params.copy() for net in learner.all_nets()]
    metrics = learner.train_step(_omg_batch([[0, 1], [2, 2]], [0.0, 0.0]))
    assert metrics["loss_td"] == 0.0 and metrics["loss_jt"] == 0.0
    for net, b in zip(learner.all_nets(), before):
        np.testing.assert_array_equal(net.flat_params, b)


def test_losses_touch_disjoint_parameters():
    _, _, learner = _omg_learner()
    batch = _omg_batch([[0, 1], [2, 0], [1, 1]], [8.0, -12.0, 6.0])
    learner.compute_gradients(batch)
    jt = learner.joint.net.flat_grads.copy()
    td = [net.flat_grads.copy() for net in learner.td_nets]
    # L_td alone
    learner.zero_grad()
    y = learner.targets(batch)
    q, q_jt = learner.mixed_q(batch)
    _, d = learner.td_loss(q_jt, y)
    dq = np.zeros_like(q)
    np.put_along_axis(dq, batch["actions"][..., None], learner.mixer.backward(d)[..., None], axis=-1)
    learner.agents.backward(dq)
    assert not learner.joint.net.flat_grads.any()
    for net, g in zip(learner.td_nets, td):
        np.testing.assert_array_equal(net.flat_grads, g)
    assert jt.any()


def test_matrix_episode():
    _, env, learner = _omg_learner()
    rng = np.random.default_rng(0)
    buf = ReplayBuffer(10, 1, 2, 1)
    ret, length = run_episode(env, learner, 1.0, rng, rng, buf)
    assert length == 1 and len(buf) == 1
    assert ret == env.payoff[tuple(buf.actions[0])]


def test_greedy_evaluation_zero_std():
    _, env, learner = _omg_learner()
    report = evaluate(env, learner, 5, np.random.default_rng(0))
    assert report.std_return == 0.0
    assert report.q_jt.shape == (3, 3) and report.q_hat.shape == (3, 3)


def test_particle_buffer_grows_by_episode_length():
    config = parse_config(overrides={"env": "particlenav", "n_agents": 2})
    env = ParticleNav(n_agents=2)
    learner = Learner(config, env)
    buf = ReplayBuffer(4, env.state_dim, 2, env.obs_dim, episode_len=25)
    rng = np.random.default_rng(1)
    _, length = run_episode(env, learner, 0.5, rng, rng, buf)
    assert length == 25 and len(buf) == 25


def test_short_run_curve_and_determinism():
    overrides = {"env": "matrix_game", "n_steps": 700, "evaluate_fre": 200, "evaluate_epoch": 2, "seed": 4}
    a = train_run(parse_config(overrides=overrides))
    b = train_run(parse_config(overrides=overrides))
    assert [r.step for r in a.curve] == [0, 200, 400, 600]
    assert [r.mean_return for r in a.curve] == [r.mean_return for r in b.curve]
    assert np.array_equal(a.final.q_jt, b.final.q_jt)
    assert a.train_steps == 700 - 31


def test_agent_init_independent_of_joint_net():
    with_joint = _omg_learner()[2]
    without = _omg_learner(use_joint_net="false")[2]
    np.testing.assert_array_equal(with_joint.agents.nets[0].flat_params, without.agents.nets[0].flat_params)
    assert without.joint is None


def test_monotonic_learner_runs():
    config = parse_config(overrides={"env": "matrix_game", "mixer": "monotonic", "n_steps": 100,
                                     "evaluate_fre": 100, "evaluate_epoch": 1})
    result = train_run(config)
    assert len(result.curve) == 2 and np.isfinite(result.final.q_jt).all()


def test_nan_aborts():
    from mcvd.errors import TrainingAborted

    _, _, learner = _omg_learner()
    learner.agents.nets[0].flat_params[0] = np.nan
    with pytest.raises(TrainingAborted):
        learner.train_step(_omg_batch([[0, 0]], [8.0]))
