"""In-place first-order optimizers over a network's parameter list."""

from __future__ import annotations

import numpy as np


class Momentum:
    """Heavy-ball gradient descent: ``v <- mu v + g``, ``p <- p - lr v``."""

    def __init__(self, net, lr: float = 1e-3, momentum: float = 0.9):
        self.net = net
        self.lr = lr
        self.momentum = momentum
        self.velocity = [np.zeros_like(p) for p in net.params()]

    def step(self, grads) -> None:
        for p, g, v in zip(self.net.params(), grads, self.velocity, strict=True):
            v *= self.momentum
            v += g
            p -= self.lr * v
        self.net.mark_updated()


class Adam:
    def __init__(self, net, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.net = net
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in net.params()]
        self.v = [np.zeros_like(p) for p in net.params()]
        self.t = 0

    def step(self, grads) -> None:
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for p, g, m, v in zip(self.net.params(), grads, self.m, self.v, strict=True):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        self.net.mark_updated()


def make_optimizer(name: str, net, lr: float):
    if name == "momentum":
        return Momentum(net, lr)
    if name == "adam":
        return Adam(net, lr)
    raise ValueError(f"unknown optimizer {name!r}")


def clip_grad_norm(grads, max_norm: float | None):
    if not max_norm:
        return grads
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        return [g * scale for g in grads]
    return grads
