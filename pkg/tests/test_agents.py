from __future__ import annotations

import numpy as np
import pytest

from carl_lab.agents import (
    Adam,
    DQNAgent,
    DQNConfig,
    Momentum,
    ObservationBuilder,
    OUNoise,
    ReplayBuffer,
    TD3Agent,
    TD3Config,
    Transition,
    buffer_push,
    buffer_sample,
    huber,
    td_targets,
)
from carl_lab.envs import PENDULUM
from carl_lab.errors import Underfull
from carl_lab.nets import MLP

# 0.999 quantile of chi-square with 9 degrees of freedom
CHI2_9_999 = 27.877


def _fill(buf: ReplayBuffer, n: int, start: int = 0) -> None:
    for i in range(start, start + n):
        buf.push([float(i), 0.0], i % 2, float(i), [float(i + 1), 0.0], False)


def test_buffer_ring_evicts_oldest():
    buf = ReplayBuffer(3, 2, discrete=True)
    _fill(buf, 5)
    assert len(buf) == 3
    assert [buf.get(i).reward for i in range(3)] == [2.0, 3.0, 4.0]
    assert buf.get(0).action == 0 and buf.get(1).action == 1


def test_buffer_sampling_deterministic_and_underfull():
    buf = ReplayBuffer(100, 2, discrete=True)
    with pytest.raises(Underfull):
        buf.sample(1, np.random.default_rng(0))
    _fill(buf, 50)
    a = buf.sample(32, np.random.default_rng(7))
    b = buf.sample(32, np.random.default_rng(7))
    assert np.array_equal(a.obs, b.obs) and np.array_equal(a.actions, b.actions)
    assert np.all(a.rewards == a.obs[:, 0])
    with pytest.raises(Underfull):
        buf.sample(51, np.random.default_rng(0))


def test_buffer_functional_api_and_continuous_actions():
    buf = ReplayBuffer(4, 1, action_dim=2)
    buffer_push(buf, Transition(np.array([1.0]), np.array([0.5, -0.5]), 2.0, np.array([3.0]), True))
    t = buf.get(0)
    assert t.action.tolist() == [0.5, -0.5] and t.done
    batch = buffer_sample(buf, 1, np.random.default_rng(0))
    assert batch.actions.shape == (1, 2) and np.all(batch.dones == 1.0)
    with pytest.raises(ValueError):
        buf.push([1.0, 2.0], [0.0, 0.0], 0.0, [1.0], False)


def test_huber():
    loss, grad = huber(np.array([0.5, -3.0]))
    assert loss.tolist() == [0.125, 2.5]
    assert grad.tolist() == [0.5, -1.0]


def test_td_targets():
    r = np.array([1.0, 2.0])
    nq = np.array([[5.0, 7.0], [3.0, 1.0]])
    assert td_targets(r, nq, [0, 0], 0.0).tolist() == [1.0, 2.0]
    assert td_targets(r, nq, [1, 1], 0.99).tolist() == [1.0, 2.0]
    assert td_targets(r, nq, [0, 1], 0.5).tolist() == [4.5, 2.0]


def test_epsilon_one_is_uniform():
    agent = DQNAgent(2, 0, 10, config=DQNConfig(hidden=(4,)), seed=0)
    draws = [agent.act(np.zeros(2), epsilon=1.0) for _ in range(10_000)]
    counts = np.bincount(draws, minlength=10)
    chi2 = float(np.sum((counts - 1000.0) ** 2 / 1000.0))
    assert chi2 < CHI2_9_999


def test_epsilon_schedule():
    agent = DQNAgent(2, 0, 2, config=DQNConfig(eps_fraction=0.1, hidden=(4,)))
    assert agent.epsilon(0, 1000) == 1.0
    assert agent.epsilon(50, 1000) == pytest.approx(0.525)
    assert agent.epsilon(100, 1000) == pytest.approx(0.05)
    assert agent.epsilon(900, 1000) == pytest.approx(0.05)


def test_greedy_matches_argmax():
    agent = DQNAgent(3, 2, 4, mode="cgate", config=DQNConfig(hidden=(8,), embed_dim=8), seed=3)
    obs = np.random.default_rng(0).standard_normal((5, 5))
    q = agent.q(obs[:, :3], obs[:, 3:])
    assert np.array_equal(agent.greedy(obs), np.argmax(q, axis=1))
    assert agent.act(obs[0]) == int(np.argmax(q[0]))


def _dqn_batch(agent, rng, n=64):
    buf = ReplayBuffer(n, agent.state_dim + agent.context_dim, discrete=True)
    for _ in range(n):
        o = rng.standard_normal(buf.obs_dim)
        buf.push(o, int(rng.integers(agent.n_actions)), float(o[0]), rng.standard_normal(buf.obs_dim), True)
    return buf.sample(n, rng)


def test_dqn_target_lags_until_sync():
    cfg = DQNConfig(hidden=(8,), target_update_period=5)
    agent = DQNAgent(2, 0, 2, config=cfg, seed=1)
    rng = np.random.default_rng(0)
    before = [p.copy() for p in agent.target.params()]
    for _ in range(4):
        agent.train_step(_dqn_batch(agent, rng))
    assert all(np.array_equal(a, b) for a, b in zip(before, agent.target.params()))
    assert not all(np.array_equal(a, b) for a, b in zip(agent.q.params(), agent.target.params()))
    agent.train_step(_dqn_batch(agent, rng))
    assert all(np.array_equal(a, b) for a, b in zip(agent.q.params(), agent.target.params()))


def test_dqn_fits_terminal_rewards():
    # every transition is terminal, so the target is the reward alone
    cfg = DQNConfig(hidden=(16,), learning_rate=0.01, optimizer="adam")
    agent = DQNAgent(2, 0, 2, config=cfg, seed=2)
    batch = _dqn_batch(agent, np.random.default_rng(4))
    first = agent.train_step(batch)
    for _ in range(300):
        last = agent.train_step(batch)
    assert last < 0.1 * first


def test_td3_frozen_before_warmup():
    cfg = TD3Config(warmup=100, policy_warmup=200, hidden=(8,), embed_dim=8)
    agent = TD3Agent(3, 0, config=cfg, seed=0)
    batch = _td3_batch(agent)
    before = [p.copy() for net in agent.networks().values() for p in net.params()]
    assert agent.train_step(batch, frame=99) == {}
    after = [p for net in agent.networks().values() for p in net.params()]
    assert all(np.array_equal(a, b) for a, b in zip(before, after))
    # critics train from warmup, the actor waits for policy_warmup
    actor = [p.copy() for p in agent.actor.params()]
    out = agent.train_step(batch, frame=150)
    out = agent.train_step(batch, frame=151)
    assert "critic0" in out and "actor" not in out
    assert all(np.array_equal(a, b) for a, b in zip(actor, agent.actor.params()))


def _td3_batch(agent, n=32, seed=0):
    rng = np.random.default_rng(seed)
    buf = ReplayBuffer(n, agent.state_dim + agent.context_dim, agent.action_dim)
    for _ in range(n):
        buf.push(rng.standard_normal(buf.obs_dim), rng.uniform(-1, 1, agent.action_dim),
                 float(rng.standard_normal()), rng.standard_normal(buf.obs_dim), False)
    return buf.sample(n, rng)


def test_td3_tau_one_copies_online_nets():
    cfg = TD3Config(warmup=0, policy_warmup=0, policy_delay=1, target_tau=1.0, hidden=(8,), embed_dim=8)
    agent = TD3Agent(3, 2, mode="cgate", config=cfg, seed=4)
    out = agent.train_step(_td3_batch(agent), frame=0)
    assert "actor" in out
    pairs = [(agent.actor, agent.actor_target)] + list(zip(agent.critics, agent.critic_targets))
    for net, target in pairs:
        assert all(np.array_equal(a, b) for a, b in zip(net.params(), target.params()))


def test_td3_policy_delay():
    cfg = TD3Config(warmup=0, policy_warmup=0, policy_delay=2, hidden=(8,), embed_dim=8)
    agent = TD3Agent(3, 0, config=cfg, seed=5)
    batch = _td3_batch(agent)
    seen = ["actor" in agent.train_step(batch, frame=k) for k in range(6)]
    assert seen == [False, True] * 3
    assert agent.actor_updates == 3 and agent.updates == 6


def test_td3_actions_bounded():
    agent = TD3Agent(3, 0, config=TD3Config(noise_sigma=5.0, hidden=(8,), embed_dim=8), seed=0)
    for _ in range(50):
        a = agent.act(np.ones(3) * 10, explore=True)
        assert np.all(np.abs(a) <= 1.0)
    assert np.all(np.abs(agent.random_action()) <= 1.0)


def test_ou_sigma_decay_and_reset():
    noise = OUNoise(1, np.random.default_rng(0), sigma=0.2, decay=0.99)
    for k in range(1, 6):
        noise.sample()
        noise.decay()
        noise.reset()
        assert noise.sigma == pytest.approx(0.2 * 0.99**k, rel=1e-15)
        assert noise.state.tolist() == [0.0]


def test_ou_mean_reversion():
    noise = OUNoise(1, np.random.default_rng(1), sigma=1e-12)
    noise.state[:] = 1.0
    noise.sample()
    assert noise.state[0] == pytest.approx(0.85)


def test_momentum_and_adam_steps():
    net = MLP([1, 1])
    net.weights[0][:] = 1.0
    net.biases[0][:] = 0.0
    opt = Momentum(net, lr=0.1, momentum=0.9)
    g = [np.array([[1.0]]), np.array([2.0])]
    opt.step(g)
    assert net.weights[0][0, 0] == pytest.approx(0.9)
    opt.step(g)
    assert net.weights[0][0, 0] == pytest.approx(0.9 - 0.1 * 1.9)
    net2 = MLP([1, 1])
    w0, b0 = net2.weights[0][0, 0], net2.biases[0][0]
    Adam(net2, lr=0.01).step([np.array([[5.0]]), np.array([-3.0])])
    # first bias-corrected step moves each parameter by about lr against its gradient
    assert net2.weights[0][0, 0] == pytest.approx(w0 - 0.01, abs=1e-8)
    assert net2.biases[0][0] == pytest.approx(b0 + 0.01, abs=1e-8)


def test_observation_builder_scales_by_default():
    hidden = ObservationBuilder(PENDULUM, "hidden", [0])
    assert hidden.context_dim == 0
    changing = ObservationBuilder(PENDULUM, "concat_changing", [PENDULUM.index("g")])
    ctx = PENDULUM.default_context().replace(g=15.0)
    assert changing.context_features(ctx).tolist() == [1.5]
    full = ObservationBuilder(PENDULUM, "concat_all")
    assert full.context_features(PENDULUM.default_context()).tolist() == [1.0] * 5
