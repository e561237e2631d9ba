from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import pendulum_cost, pendulum_literal

from carl_lab.context import validate_context
from carl_lab.envs import (
    CARTPOLE,
    LUNARLANDER_GRAVITY,
    MOUNTAINCAR,
    PENDULUM,
    angle_normalize,
    cartpole_step,
    env_reset,
    get_space,
    make_env,
    mountaincar_step,
    pendulum_step,
)
from carl_lab.errors import NonFiniteState

P0 = PENDULUM.default_context()
C0 = CARTPOLE.default_context()
M0 = MOUNTAINCAR.default_context()


def test_pendulum_upright_fixed_point():
    r = pendulum_step([0.0, 0.0], 0.0, P0)
    # sin(pi) evaluates to 1.2e-16 in floating point, not 0
    assert r.next_state.tolist() == pytest.approx([0.0, 0.0], abs=1e-15)
    assert r.reward == 0.0 and not r.terminated and not r.truncated


def test_pendulum_horizontal_hand_case():
    r = pendulum_step([math.pi / 2, 0.0], 0.0, P0)
    assert r.next_state[1] == 0.75
    assert r.next_state[0] == math.pi / 2 + 0.0375


def test_pendulum_speed_clip_active():
    r = pendulum_step([0.0, 8.0], 2.0, P0)
    assert r.next_state[1] == 8.0
    # position uses the velocity before clipping
    assert r.next_state[0] == 0.0 + 8.3 * 0.05


def test_pendulum_torque_clipped():
    a = pendulum_step([0.3, 0.1], 5.0, P0)
    b = pendulum_step([0.3, 0.1], 2.0, P0)
    assert a.next_state.tolist() == b.next_state.tolist()
    assert a.reward == b.reward


def test_pendulum_length_doubling_halves_gravity_term():
    base = pendulum_step([math.pi / 2, 0.0], 0.0, P0).next_state[1]
    long = pendulum_step([math.pi / 2, 0.0], 0.0, P0.replace(l=2.0)).next_state[1]
    assert long == base / 2


def test_pendulum_reward_uses_wrapped_angle():
    r = pendulum_step([2 * math.pi + 0.5, 1.0], 1.0, P0)
    assert r.reward == pytest.approx(-(0.25 + 0.1 + 0.001))


def test_angle_normalize_range():
    assert angle_normalize(math.pi) == -math.pi
    assert angle_normalize(-math.pi) == -math.pi
    assert angle_normalize(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


def _pendulum_context(rng):
    return validate_context(
        PENDULUM,
        [
            rng.uniform(0.01, 0.1),
            rng.uniform(1.0, 20.0),
            rng.uniform(0.2, 3.0),
            rng.uniform(0.2, 3.0),
            rng.uniform(1.0, 12.0),
        ],
    )


def test_pendulum_matches_literal_transcription():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        ctx = _pendulum_context(rng)
        th, thd, u = rng.uniform(-10, 10), rng.uniform(-12, 12), rng.uniform(-3, 3)
        got = pendulum_step([th, thd], u, ctx)
        want = pendulum_literal(th, thd, u, *ctx.values)
        assert (got.next_state[0], got.next_state[1]) == want
        assert got.reward == pytest.approx(pendulum_cost(th, thd, u), abs=1e-12)


@given(
    th=st.floats(-50, 50),
    thd=st.floats(-50, 50),
    u=st.floats(-5, 5),
    max_speed=st.floats(0.5, 20),
)
@settings(max_examples=200, deadline=None)
def test_pendulum_speed_invariant_and_reward_sign(th, thd, u, max_speed):
    r = pendulum_step([th, thd], u, P0.replace(max_speed=max_speed))
    assert abs(r.next_state[1]) <= max_speed
    assert r.reward <= 0.0


def test_pendulum_step_is_deterministic():
    a = pendulum_step([0.4, -1.3], 0.7, P0)
    b = pendulum_step([0.4, -1.3], 0.7, P0)
    assert a.next_state.tobytes() == b.next_state.tobytes()


def test_cartpole_hand_derivation():
    # F=10, g=9.8, mc=1, mp=0.1, half length 0.5 from rest:
    # temp = 10/1.1, thetaacc = -temp / (0.5 (4/3 - 0.1/1.1)) = -600/41,
    # xacc = temp - 0.05 thetaacc / 1.1 = 400/41
    r = cartpole_step([0.0, 0.0, 0.0, 0.0], 1, C0)
    x, x_dot, theta, theta_dot = r.next_state
    assert x == 0.0 and theta == 0.0
    assert x_dot == pytest.approx(0.02 * 400 / 41, rel=1e-14)
    assert theta_dot == pytest.approx(-0.02 * 600 / 41, rel=1e-14)
    assert r.reward == 1.0 and not r.terminated


def test_cartpole_left_push_is_mirror():
    right = cartpole_step([0.0, 0.0, 0.0, 0.0], 1, C0).next_state
    left = cartpole_step([0.0, 0.0, 0.0, 0.0], 0, C0).next_state
    assert np.allclose(left, -right, atol=0, rtol=0)


def test_cartpole_terminates_past_angle_limit():
    r = cartpole_step([0.0, 0.0, 0.2, 1.0], 1, C0)
    assert r.next_state[2] == pytest.approx(0.22)
    assert r.terminated and r.reward == 0.0
    r = cartpole_step([2.39, 1.0, 0.0, 0.0], 1, C0)
    assert r.terminated


def test_cartpole_depends_on_gravity():
    s = [0.0, 0.0, 0.05, 0.0]
    a = cartpole_step(s, 1, C0).next_state[3]
    b = cartpole_step(s, 1, C0.replace(gravity=19.6)).next_state[3]
    assert a != b


@given(st.lists(st.floats(-0.2, 0.2), min_size=4, max_size=4), st.integers(0, 1))
@settings(max_examples=100, deadline=None)
def test_cartpole_reward_binary(state, action):
    r = cartpole_step(state, action, C0)
    assert r.reward in (0.0, 1.0)
    assert (r.reward == 0.0) == r.terminated


def test_mountaincar_goal():
    r = mountaincar_step([0.5 - 0.05, 0.05], 1, M0)
    # coasting at p=0.45: v' = 0.05 - cos(1.35) * 0.0025
    assert r.next_state[1] == pytest.approx(0.05 - math.cos(1.35) * 0.0025)
    r = mountaincar_step([0.49, 0.05], 2, M0)
    assert r.next_state[0] >= 0.5 and r.terminated
    assert r.reward == -1.0


def test_mountaincar_left_wall():
    r = mountaincar_step([-1.2, -0.07], 0, M0)
    assert r.next_state.tolist() == [-1.2, 0.0]


def test_mountaincar_coast_is_gravity_only():
    p, v = -0.3, 0.01
    r = mountaincar_step([p, v], 1, M0)
    assert r.next_state[1] == v - math.cos(3 * p) * 0.0025


@given(
    p=st.floats(-1.2, 0.6), v=st.floats(-0.07, 0.07), a=st.integers(0, 2)
)
@settings(max_examples=200, deadline=None)
def test_mountaincar_containment(p, v, a):
    r = mountaincar_step([p, v], a, M0)
    assert -1.2 <= r.next_state[0] <= 0.6
    assert abs(r.next_state[1]) <= 0.07
    assert r.reward == -1.0


def test_non_finite_raises():
    with pytest.raises(NonFiniteState):
        pendulum_step([math.inf, 0.0], 0.0, P0)


def test_resets():
    rng = np.random.default_rng(1)
    s = env_reset("pendulum", P0, rng)
    assert -math.pi <= s[0] <= math.pi and -1 <= s[1] <= 1
    s = env_reset("cartpole", C0, rng)
    assert s.shape == (4,) and np.all(np.abs(s) <= 0.05)
    pos = np.array([env_reset("mountaincar", M0, np.random.default_rng(i))[0] for i in range(2000)])
    assert abs(pos.mean() + 0.5) < 3 * 0.1 / math.sqrt(2000)
    exact = M0.replace(start_position_std=0.0)
    assert env_reset("mountaincar", exact, rng)[0] == -0.5
    a = env_reset("pendulum", P0, np.random.default_rng(5))
    b = env_reset("pendulum", P0, np.random.default_rng(5))
    assert a.tobytes() == b.tobytes()


def test_env_truncates_at_step_limit():
    env = make_env("pendulum")
    env.reset(P0, np.random.default_rng(0))
    for k in range(200):
        r = env.step([0.0])
        assert r.truncated == (k == 199)
    env = make_env("cartpole", max_episode_steps=3)
    env.reset(C0, np.random.default_rng(0))
    assert [env.step(k % 2).truncated for k in range(3)] == [False, False, True]


def test_pendulum_trig_observation():
    env = make_env("pendulum", trig_obs=True)
    obs = env.reset(P0, np.random.default_rng(0))
    assert obs.shape == (3,) and env.state_dim == 3
    assert obs[0] ** 2 + obs[1] ** 2 == pytest.approx(1.0)


def test_spaces_registry():
    assert get_space("pendulum").names == ["dt", "g", "l", "m", "max_speed"]
    assert MOUNTAINCAR.defaults[MOUNTAINCAR.index("force")] == 0.001
    assert MOUNTAINCAR.defaults[MOUNTAINCAR.index("gravity")] == 0.0025
    assert LUNARLANDER_GRAVITY.features[0].default == -10.0
    with pytest.raises(KeyError):
        make_env("acrobot")
