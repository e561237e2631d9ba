"""Replay buffer, exploration noise and the two desk-scale learning agents."""

from .buffer import Batch, ReplayBuffer, Transition, buffer_push, buffer_sample
from .common import ObservationBuilder
from .dqn import DQNAgent, DQNConfig, huber, td_targets
from .noise import OUNoise
from .optim import Adam, Momentum, make_optimizer
from .td3 import TD3Agent, TD3Config

__all__ = [
    "Adam",
    "Batch",
    "DQNAgent",
    "DQNConfig",
    "Momentum",
    "OUNoise",
    "ObservationBuilder",
    "ReplayBuffer",
    "TD3Agent",
    "TD3Config",
    "Transition",
    "buffer_push",
    "buffer_sample",
    "huber",
    "make_optimizer",
    "td_targets",
]
