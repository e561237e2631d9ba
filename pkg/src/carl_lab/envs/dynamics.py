"""Pure step and reset functions for the classic-control environments.

Each ``*_step`` takes the current state, an action and a :class:`Context` and
returns a :class:`StepResult`. They never set ``truncated``; the step limit is
enforced by :class:`carl_lab.envs.ContextualEnv`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..context import Context
from ..errors import NonFiniteState

PENDULUM_MAX_TORQUE = 2.0
CARTPOLE_X_LIMIT = 2.4
CARTPOLE_THETA_LIMIT = 12 * 2 * math.pi / 360


@dataclass(frozen=True)
class StepResult:
    next_state: np.ndarray
    reward: float
    terminated: bool
    truncated: bool = False


def _checked(state: Sequence[float], reward: float, kind: str) -> np.ndarray:
    arr = np.array(state, dtype=np.float64)
    if not (np.all(np.isfinite(arr)) and math.isfinite(reward)):
        raise NonFiniteState(f"{kind} produced a non-finite state {arr} / reward {reward}")
    return arr


def _finite_inputs(state: Sequence[float], action: float, kind: str) -> None:
    if not (all(math.isfinite(float(v)) for v in state) and math.isfinite(float(action))):
        raise NonFiniteState(f"{kind} got a non-finite state {list(state)} or action {action}")


def angle_normalize(x: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return ((x + math.pi) % (2 * math.pi)) - math.pi


def pendulum_step(state: Sequence[float], torque: float, context: Context) -> StepResult:
    _finite_inputs(state, torque, "pendulum")
    theta, theta_dot = float(state[0]), float(state[1])
    dt, g, l, m, max_speed = context.values
    u = min(max(float(torque), -PENDULUM_MAX_TORQUE), PENDULUM_MAX_TORQUE)

    reward = -(angle_normalize(theta) ** 2 + 0.1 * theta_dot**2 + 0.001 * u**2)

    new_theta_dot = theta_dot + (-(3 * g / (2 * l)) * math.sin(theta + math.pi) + (3 / (m * l**2)) * u) * dt
    new_theta = theta + new_theta_dot * dt
    new_theta_dot = min(max(new_theta_dot, -max_speed), max_speed)

    return StepResult(_checked((new_theta, new_theta_dot), reward, "pendulum"), reward, False)


def cartpole_step(state: Sequence[float], action: int, context: Context) -> StepResult:
    _finite_inputs(state, action, "cartpole")
    x, x_dot, theta, theta_dot = (float(v) for v in state)
    force_mag, gravity, masscart, masspole, length, tau = context.values

    force = force_mag if int(action) == 1 else -force_mag
    costheta = math.cos(theta)
    sintheta = math.sin(theta)
    total_mass = masspole + masscart
    polemass_length = masspole * length

    temp = (force + polemass_length * theta_dot**2 * sintheta) / total_mass
    thetaacc = (gravity * sintheta - costheta * temp) / (
        length * (4.0 / 3.0 - masspole * costheta**2 / total_mass)
    )
    xacc = temp - polemass_length * thetaacc * costheta / total_mass

    x = x + tau * x_dot
    x_dot = x_dot + tau * xacc
    theta = theta + tau * theta_dot
    theta_dot = theta_dot + tau * thetaacc

    terminated = bool(
        x < -CARTPOLE_X_LIMIT
        or x > CARTPOLE_X_LIMIT
        or theta < -CARTPOLE_THETA_LIMIT
        or theta > CARTPOLE_THETA_LIMIT
    )
    reward = 0.0 if terminated else 1.0
    return StepResult(_checked((x, x_dot, theta, theta_dot), reward, "cartpole"), reward, terminated)


def mountaincar_step(state: Sequence[float], action: int, context: Context) -> StepResult:
    _finite_inputs(state, action, "mountaincar")
    position, velocity = float(state[0]), float(state[1])
    c = context.as_dict()
    max_speed = c["max_speed"]

    velocity += (int(action) - 1) * c["force"] - math.cos(3 * position) * c["gravity"]
    velocity = min(max(velocity, -max_speed), max_speed)
    position += velocity
    position = min(max(position, c["min_position"]), c["max_position"])
    if position == c["min_position"] and velocity < 0:
        velocity = 0.0

    terminated = bool(position >= c["goal_position"] and velocity >= c["goal_velocity"])
    reward = -1.0
    return StepResult(_checked((position, velocity), reward, "mountaincar"), reward, terminated)


def pendulum_reset(context: Context, rng: np.random.Generator) -> np.ndarray:
    return np.array([rng.uniform(-math.pi, math.pi), rng.uniform(-1.0, 1.0)])


def cartpole_reset(context: Context, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-0.05, 0.05, size=4)


def mountaincar_reset(context: Context, rng: np.random.Generator) -> np.ndarray:
    c = context.as_dict()
    p = rng.normal(c["start_position"], c["start_position_std"])
    v = rng.normal(c["start_velocity"], c["start_velocity_std"])
    p = min(max(p, c["min_position"]), c["max_position"])
    v = min(max(v, -c["max_speed"]), c["max_speed"])
    return np.array([p, v])


STEP_FUNCTIONS = {
    "pendulum": pendulum_step,
    "cartpole": cartpole_step,
    "mountaincar": mountaincar_step,
}

RESET_FUNCTIONS = {
    "pendulum": pendulum_reset,
    "cartpole": cartpole_reset,
    "mountaincar": mountaincar_reset,
}


def env_reset(env_kind: str, context: Context, rng: np.random.Generator) -> np.ndarray:
    """Draw an initial state from the context's initial-state distribution."""
    return RESET_FUNCTIONS[env_kind](context, rng)
