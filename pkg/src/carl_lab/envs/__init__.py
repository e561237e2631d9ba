"""Contextual classic-control environments."""

from __future__ import annotations

import math

import numpy as np

from ..context import Context
from .dynamics import (
    PENDULUM_MAX_TORQUE,
    RESET_FUNCTIONS,
    STEP_FUNCTIONS,
    StepResult,
    angle_normalize,
    cartpole_reset,
    cartpole_step,
    env_reset,
    mountaincar_reset,
    mountaincar_step,
    pendulum_reset,
    pendulum_step,
)
from .spaces import CARTPOLE, LUNARLANDER_GRAVITY, MOUNTAINCAR, PENDULUM, SPACES, get_space


class ContextualEnv:
    """Episodic environment whose dynamics, reward and reset depend on a context.

    ``reset`` takes the context for the coming episode; ``step`` enforces the
    episode step limit by setting ``truncated``.
    """

    kind: str = ""
    max_episode_steps: int = 0
    state_dim: int = 0
    n_actions: int | None = None  # discrete action count, None for continuous
    action_dim: int = 0
    action_scale: float = 1.0

    def __init__(self, max_episode_steps: int | None = None):
        if max_episode_steps is not None:
            self.max_episode_steps = int(max_episode_steps)
        self.space = get_space(self.kind)
        self._step_fn = STEP_FUNCTIONS[self.kind]
        self._reset_fn = RESET_FUNCTIONS[self.kind]
        self.state: np.ndarray | None = None
        self.context: Context | None = None
        self.elapsed = 0

    @property
    def obs_dim(self) -> int:
        return self.state_dim

    def reset(self, context: Context, rng: np.random.Generator) -> np.ndarray:
        self.context = context
        self.state = self._reset_fn(context, rng)
        self.elapsed = 0
        return self.observe()

    def observe(self) -> np.ndarray:
        return self.state.copy()

    def step(self, action) -> StepResult:
        if self.state is None:
            raise RuntimeError("step() before reset()")
        result = self._step_fn(self.state, action, self.context)
        self.state = result.next_state
        self.elapsed += 1
        truncated = self.elapsed >= self.max_episode_steps
        return StepResult(self.observe(), result.reward, result.terminated, truncated)


class PendulumEnv(ContextualEnv):
    kind = "pendulum"
    max_episode_steps = 200
    action_dim = 1
    action_scale = PENDULUM_MAX_TORQUE

    def __init__(self, max_episode_steps: int | None = None, trig_obs: bool = False):
        super().__init__(max_episode_steps)
        # raw (theta, theta_dot) unless the (cos, sin, theta_dot) encoding is requested
        self.trig_obs = trig_obs

    @property
    def state_dim(self) -> int:  # type: ignore[override]
        return 3 if self.trig_obs else 2

    def observe(self) -> np.ndarray:
        theta, theta_dot = self.state
        if self.trig_obs:
            return np.array([math.cos(theta), math.sin(theta), theta_dot])
        return self.state.copy()

    def step(self, action) -> StepResult:
        return super().step(float(np.asarray(action).reshape(-1)[0]))


class CartPoleEnv(ContextualEnv):
    kind = "cartpole"
    max_episode_steps = 500
    state_dim = 4
    n_actions = 2


class MountainCarEnv(ContextualEnv):
    kind = "mountaincar"
    max_episode_steps = 200
    state_dim = 2
    n_actions = 3


ENVS: dict[str, type[ContextualEnv]] = {
    "pendulum": PendulumEnv,
    "cartpole": CartPoleEnv,
    "mountaincar": MountainCarEnv,
}


def make_env(name: str, **kwargs) -> ContextualEnv:
    try:
        cls = ENVS[name]
    except KeyError:
        raise KeyError(f"unknown environment {name!r}; known: {sorted(ENVS)}") from None
    return cls(**kwargs)


__all__ = [
    "CARTPOLE",
    "ENVS",
    "LUNARLANDER_GRAVITY",
    "MOUNTAINCAR",
    "PENDULUM",
    "SPACES",
    "CartPoleEnv",
    "ContextualEnv",
    "MountainCarEnv",
    "PendulumEnv",
    "StepResult",
    "angle_normalize",
    "cartpole_reset",
    "cartpole_step",
    "env_reset",
    "get_space",
    "make_env",
    "mountaincar_reset",
    "mountaincar_step",
    "pendulum_reset",
    "pendulum_step",
]
