"""Optimisers and the stepped learning-rate schedule."""

from __future__ import annotations

import numpy as np


class LrSchedule:
    """Step decay: ``base * factor ** (step // decay_every)``."""

    def __init__(self, base: float = 0.005, factor: float = 0.5, decay_every: int = 500):
        if base <= 0 or not 0 < factor <= 1 or decay_every < 1:
            raise ValueError("invalid learning-rate schedule")
        self.base, self.factor, self.decay_every = base, factor, decay_every

    def lr(self, step: int) -> float:
        return self.base * self.factor ** (step // self.decay_every)


class Sgd:
    """Plain stochastic gradient descent."""

    def __init__(self, params, lr: float = 0.01):
        self.params = list(params)
        self.lr = lr

    def step(self, lr: float | None = None) -> None:
        rate = self.lr if lr is None else lr
        for p in self.params:
            p.value -= rate * p.grad

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


class Adam:
    """Adam with bias-corrected moments."""

    def __init__(self, params, lr: float = 0.005, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self, lr: float | None = None) -> None:
        rate = self.lr if lr is None else lr
        self.t += 1
        correct1 = 1.0 - self.beta1**self.t
        correct2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad**2
            m_hat = m / correct1
            v_hat = v / correct2
            p.value -= rate * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
