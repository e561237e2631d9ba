"""DQN-lite: epsilon-greedy Q-learning with a hard-synced target network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteLoss
from ..nets import ConditionedNet, copy_params
from .buffer import Batch
from .optim import clip_grad_norm, make_optimizer


@dataclass
class DQNConfig:
    learning_rate: float = 1e-3
    gamma: float = 0.99
    batch_size: int = 64
    buffer_size: int = 50_000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_fraction: float = 0.1
    target_update_period: int = 500
    warmup: int = 1_000
    train_freq: int = 1
    hidden: tuple[int, ...] = (64, 64)
    embed_dim: int = 64
    optimizer: str = "momentum"
    grad_clip: float = 10.0

    def __post_init__(self) -> None:
        for name in ("eps_start", "eps_end"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0.0 < self.eps_fraction <= 1.0:
            raise ValueError("eps_fraction must lie in (0, 1]")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.target_update_period < 1:
            raise ValueError("learning_rate, batch_size and target_update_period must be positive")
        self.hidden = tuple(int(h) for h in self.hidden)


def huber(delta: np.ndarray, kappa: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise Huber loss and its derivative."""
    a = np.abs(delta)
    loss = np.where(a <= kappa, 0.5 * delta**2, kappa * (a - 0.5 * kappa))
    return loss, np.clip(delta, -kappa, kappa)


def td_targets(rewards, next_q: np.ndarray, dones, gamma: float) -> np.ndarray:
    """``r + gamma * (1 - done) * max_a Q_target(s', a)``."""
    return np.asarray(rewards) + gamma * (1.0 - np.asarray(dones)) * next_q.max(axis=1)


class DQNAgent:
    def __init__(
        self,
        state_dim: int,
        context_dim: int,
        n_actions: int,
        mode: str = "hidden",
        config: DQNConfig | None = None,
        seed: int = 0,
    ):
        self.config = config or DQNConfig()
        self.state_dim, self.context_dim, self.n_actions = state_dim, context_dim, n_actions
        self.rng = np.random.default_rng([seed, 1])
        self.q = ConditionedNet(
            mode, state_dim, context_dim, n_actions, self.config.hidden, self.config.embed_dim,
            rng=np.random.default_rng([seed, 2]),
        )
        self.target = self.q.copy()
        self.optimizer = make_optimizer(self.config.optimizer, self.q, self.config.learning_rate)
        self.updates = 0

    def split(self, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return obs[..., : self.state_dim], obs[..., self.state_dim :]

    def epsilon(self, step: int, total_steps: int) -> float:
        c = self.config
        horizon = max(1.0, c.eps_fraction * total_steps)
        frac = min(1.0, step / horizon)
        return c.eps_start + frac * (c.eps_end - c.eps_start)

    def greedy(self, obs: np.ndarray) -> np.ndarray:
        s, c = self.split(np.atleast_2d(obs))
        return np.argmax(self.q(s, c), axis=1)

    def act(self, obs: np.ndarray, epsilon: float = 0.0) -> int:
        if epsilon > 0 and self.rng.random() < epsilon:
            return int(self.rng.integers(self.n_actions))
        return int(self.greedy(obs)[0])

    def train_step(self, batch: Batch) -> float:
        c = self.config
        s, ctx = self.split(batch.obs)
        s2, ctx2 = self.split(batch.next_obs)
        targets = td_targets(batch.rewards, self.target(s2, ctx2), batch.dones, c.gamma)
        q, cache = self.q.forward(s, ctx)
        rows = np.arange(len(q))
        losses, dloss = huber(q[rows, batch.actions] - targets)
        loss = float(losses.mean())
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"DQN loss became {loss} after {self.updates} updates")
        grad_q = np.zeros_like(q)
        grad_q[rows, batch.actions] = dloss / len(q)
        grads, _ = self.q.backward(cache, grad_q)
        self.optimizer.step(clip_grad_norm(grads, c.grad_clip))
        self.updates += 1
        if self.updates % c.target_update_period == 0:
            self.sync_target()
        return loss

    def sync_target(self) -> None:
        copy_params(self.q, self.target)

    def networks(self) -> dict:
        return {"q": self.q, "target": self.target}


