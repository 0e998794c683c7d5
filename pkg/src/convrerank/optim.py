"""Adam updates for the hand-rolled trainers."""

from __future__ import annotations

import numpy as np


class Adam:
    """Bias-corrected Adam over a dict of named parameter arrays.

    Parameters are updated in place so callers can keep references to the
    arrays inside their model objects.
    """

    def __init__(
        self,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        if learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be positive, got {learning_rate}")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._step = 0
        self._mean: dict[str, np.ndarray] = {}
        self._var: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self._step += 1
        t = self._step
        for name, param in params.items():
            grad = grads[name]
            mean = self._mean.setdefault(name, np.zeros_like(param))
            var = self._var.setdefault(name, np.zeros_like(param))
            mean *= self.beta1
            mean += (1.0 - self.beta1) * grad
            var *= self.beta2
            var += (1.0 - self.beta2) * grad * grad
            mean_hat = mean / (1.0 - self.beta1**t)
            var_hat = var / (1.0 - self.beta2**t)
            param -= self.learning_rate * mean_hat / (np.sqrt(var_hat) + self.eps)
