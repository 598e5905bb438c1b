"""First-order optimizers over a single parameter array."""

import numpy as np

from .config import ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from .exceptions import InvalidArgumentError


class SGD:
    """Plain gradient descent: ``params -= lr * grad``."""

    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        """Update ``params`` in place."""
        params -= self.lr * grad


class Adam:
    """Adam with bias-corrected moment estimates.

    Moment buffers are part of the run state: two runs fed the same gradients
    produce bitwise-identical parameters.
    """

    def __init__(
        self,
        lr: float,
        beta1: float = ADAM_BETA1,
        beta2: float = ADAM_BETA2,
        eps: float = ADAM_EPS,
    ):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = None
        self.v = None
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        """Update ``params`` in place."""
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * (grad * grad)
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        params -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(kind: str, lr: float):
    """Build the optimizer named by a TrainConfig."""
    if kind == "sgd":
        return SGD(lr)
    if kind == "adam":
        return Adam(lr)
    raise InvalidArgumentError(f"Unknown optimizer '{kind}'. Valid: sgd, adam")
