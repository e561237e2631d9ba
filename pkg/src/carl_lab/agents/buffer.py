"""Uniform replay buffer backed by preallocated ring arrays."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import Underfull


@dataclass(frozen=True)
class Transition:
    obs: np.ndarray
    action: np.ndarray | int
    reward: float
    next_obs: np.ndarray
    done: bool  # terminated only; time-limit truncation is not a terminal


@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    dones: np.ndarray


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int, action_dim: int = 1, discrete: bool = False):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.obs_dim = obs_dim
        self.discrete = discrete
        self.obs = np.zeros((capacity, obs_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64) if discrete else np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity)
        self.size = 0
        self._next = 0

    def __len__(self) -> int:
        return self.size

    def push(self, obs, action, reward: float, next_obs, done: bool) -> None:
        i = self._next
        if len(obs) != self.obs_dim or len(next_obs) != self.obs_dim:
            raise ValueError(f"observation length must stay {self.obs_dim}")
        self.obs[i] = obs
        self.next_obs[i] = next_obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.dones[i] = float(done)
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def push_transition(self, t: Transition) -> None:
        self.push(t.obs, t.action, t.reward, t.next_obs, t.done)

    def get(self, i: int) -> Transition:
        """The ``i``-th oldest stored transition."""
        if not 0 <= i < self.size:
            raise IndexError(i)
        j = (self._next - self.size + i) % self.capacity
        action = int(self.actions[j]) if self.discrete else self.actions[j].copy()
        return Transition(self.obs[j].copy(), action, float(self.rewards[j]), self.next_obs[j].copy(), bool(self.dones[j]))

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform draw with replacement over the current contents."""
        if batch_size > self.size:
            raise Underfull(f"asked for {batch_size} transitions, buffer holds {self.size}")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(self.obs[idx], self.actions[idx], self.rewards[idx], self.next_obs[idx], self.dones[idx])


def buffer_push(buffer: ReplayBuffer, transition: Transition) -> None:
    buffer.push_transition(transition)


def buffer_sample(buffer: ReplayBuffer, batch_size: int, rng: np.random.Generator) -> Batch:
    return buffer.sample(batch_size, rng)
