"""Ornstein-Uhlenbeck exploration noise with per-episode decay of sigma."""

from __future__ import annotations

import numpy as np


class OUNoise:
    def __init__(
        self,
        dim: int,
        rng: np.random.Generator,
        mu: float = 0.0,
        theta: float = 0.15,
        sigma: float = 0.2,
        decay: float = 0.99,
    ):
        self.dim = dim
        self.rng = rng
        self.mu, self.theta = mu, theta
        self.sigma0 = sigma
        self.sigma = sigma
        self.decay_rate = decay
        self.episodes = 0
        self.state = np.full(dim, mu, dtype=np.float64)

    def reset(self) -> None:
        self.state[:] = self.mu

    def sample(self) -> np.ndarray:
        self.state += self.theta * (self.mu - self.state) + self.sigma * self.rng.standard_normal(self.dim)
        return self.state.copy()

    def decay(self) -> None:
        """Call once per finished training episode."""
        self.episodes += 1
        self.sigma = self.sigma0 * self.decay_rate**self.episodes
