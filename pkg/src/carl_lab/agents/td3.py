"""TD3-lite: twin critics, target smoothing, delayed actor, OU exploration.

Actions live in [-1, 1]; the environment rescales them (Pendulum torque
bound 2). Before ``warmup`` frames nothing is trained; actor updates also wait
for ``policy_warmup`` frames, critic updates do not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteLoss
from ..nets import ConditionedNet, polyak_update
from .buffer import Batch
from .noise import OUNoise
from .optim import clip_grad_norm, make_optimizer


@dataclass
class TD3Config:
    noise_mu: float = 0.0
    noise_sigma: float = 0.2
    noise_theta: float = 0.15
    noise_decay: float = 0.99
    learning_rate: float = 0.001
    gamma: float = 0.98
    target_tau: float = 0.001
    buffer_size: int = 200_000
    warmup: int = 10_000
    policy_warmup: int = 15_000
    batch_size: int = 64
    policy_delay: int = 2
    target_noise: float = 0.2
    target_noise_clip: float = 0.5
    hidden: tuple[int, ...] = (64, 64)
    embed_dim: int = 64
    optimizer: str = "momentum"
    grad_clip: float = 10.0

    def __post_init__(self) -> None:
        if not 0.0 < self.target_tau <= 1.0:
            raise ValueError("target_tau must lie in (0, 1]")
        for name in ("noise_sigma", "noise_theta", "noise_decay", "learning_rate", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.buffer_size < 1 or self.batch_size < 1 or self.policy_delay < 1:
            raise ValueError("buffer_size, batch_size and policy_delay must be positive")
        if self.warmup < 0 or self.policy_warmup < 0:
            raise ValueError("warmup frames cannot be negative")
        self.hidden = tuple(int(h) for h in self.hidden)


class TD3Agent:
    def __init__(
        self,
        state_dim: int,
        context_dim: int,
        action_dim: int = 1,
        mode: str = "hidden",
        config: TD3Config | None = None,
        seed: int = 0,
    ):
        self.config = c = config or TD3Config()
        self.state_dim, self.context_dim, self.action_dim = state_dim, context_dim, action_dim
        self.rng = np.random.default_rng([seed, 1])
        self.actor = ConditionedNet(
            mode, state_dim, context_dim, action_dim, c.hidden, c.embed_dim,
            output_activation="tanh", rng=np.random.default_rng([seed, 2]),
        )
        self.critics = [
            ConditionedNet(
                mode, state_dim + action_dim, context_dim, 1, c.hidden, c.embed_dim,
                rng=np.random.default_rng([seed, 3 + k]),
            )
            for k in range(2)
        ]
        self.actor_target = self.actor.copy()
        self.critic_targets = [q.copy() for q in self.critics]
        self.actor_opt = make_optimizer(c.optimizer, self.actor, c.learning_rate)
        self.critic_opts = [make_optimizer(c.optimizer, q, c.learning_rate) for q in self.critics]
        self.noise = OUNoise(
            action_dim, np.random.default_rng([seed, 5]), c.noise_mu, c.noise_theta, c.noise_sigma, c.noise_decay
        )
        self.updates = 0
        self.actor_updates = 0

    def split(self, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return obs[..., : self.state_dim], obs[..., self.state_dim :]

    def policy(self, obs: np.ndarray) -> np.ndarray:
        s, ctx = self.split(np.atleast_2d(obs))
        return self.actor(s, ctx)

    def act(self, obs: np.ndarray, explore: bool = False) -> np.ndarray:
        a = self.policy(obs)[0]
        if explore:
            a = np.clip(a + self.noise.sample(), -1.0, 1.0)
        return a

    def random_action(self) -> np.ndarray:
        return self.rng.uniform(-1.0, 1.0, self.action_dim)

    def end_episode(self) -> None:
        self.noise.decay()
        self.noise.reset()

    def train_step(self, batch: Batch, frame: int) -> dict[str, float]:
        """One critic update, plus an actor/target update every ``policy_delay`` steps."""
        c = self.config
        out: dict[str, float] = {}
        if frame < c.warmup:
            return out
        s, ctx = self.split(batch.obs)
        s2, ctx2 = self.split(batch.next_obs)
        B = len(s)

        smoothing = np.clip(
            c.target_noise * self.rng.standard_normal((B, self.action_dim)),
            -c.target_noise_clip,
            c.target_noise_clip,
        )
        a2 = np.clip(self.actor_target(s2, ctx2) + smoothing, -1.0, 1.0)
        sa2 = np.concatenate([s2, a2], axis=1)
        q_next = np.minimum(self.critic_targets[0](sa2, ctx2), self.critic_targets[1](sa2, ctx2))[:, 0]
        y = batch.rewards + c.gamma * (1.0 - batch.dones) * q_next

        sa = np.concatenate([s, batch.actions.reshape(B, -1)], axis=1)
        for k, (critic, opt) in enumerate(zip(self.critics, self.critic_opts)):
            q, cache = critic.forward(sa, ctx)
            err = q[:, 0] - y
            loss = float(np.mean(err**2))
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"critic {k} loss became {loss} after {self.updates} updates")
            grads, _ = critic.backward(cache, (2.0 * err / B)[:, None])
            opt.step(clip_grad_norm(grads, c.grad_clip))
            out[f"critic{k}"] = loss
        self.updates += 1

        if frame >= c.policy_warmup and self.updates % c.policy_delay == 0:
            a, a_cache = self.actor.forward(s, ctx)
            q, q_cache = self.critics[0].forward(np.concatenate([s, a], axis=1), ctx)
            out["actor"] = float(-q.mean())
            _, (g_sa, _) = self.critics[0].backward(q_cache, np.full_like(q, -1.0 / B))
            grads, _ = self.actor.backward(a_cache, g_sa[:, self.state_dim :])
            self.actor_opt.step(clip_grad_norm(grads, c.grad_clip))
            self.actor_updates += 1
            polyak_update(self.actor, self.actor_target, c.target_tau)
            for q_net, q_targ in zip(self.critics, self.critic_targets):
                polyak_update(q_net, q_targ, c.target_tau)
        return out

    def networks(self) -> dict:
        return {
            "actor": self.actor,
            "critic0": self.critics[0],
            "critic1": self.critics[1],
            "actor_target": self.actor_target,
            "critic0_target": self.critic_targets[0],
            "critic1_target": self.critic_targets[1],
        }
