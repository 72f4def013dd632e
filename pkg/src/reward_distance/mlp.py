"""A small float64 feed-forward network with hand-written backprop, plus Adam."""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np

from reward_distance.errors import ValidationError

DEFAULT_HIDDEN = (32, 32)


class TinyMlp:
    """Scalar-output MLP with tanh hidden layers.

    Hidden layers use Xavier-uniform weights. The output layer starts at zero
    unless ``zero_output=False``, so a fresh network computes the constant 0.

    Args:
        n_inputs: Input feature dimension.
        hidden: Hidden layer widths.
        rng: Generator used for initialization.
        zero_output: Zero-initialize the last layer.
    """

    activation = "tanh"

    def __init__(
        self,
        n_inputs: int,
        hidden: Sequence[int] = DEFAULT_HIDDEN,
        rng: Optional[np.random.Generator] = None,
        zero_output: bool = True,
    ):
        if n_inputs < 1:
            raise ValidationError("n_inputs must be positive")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.sizes = (int(n_inputs), *map(int, hidden), 1)
        self.params: List[np.ndarray] = []
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            last = i == len(self.sizes) - 2
            if last and zero_output:
                w = np.zeros((fan_in, fan_out))
            else:
                limit = np.sqrt(6.0 / (fan_in + fan_out))
                w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            self.params += [w, np.zeros(fan_out)]

    @property
    def n_layers(self) -> int:
        return len(self.params) // 2

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, list]:
        """Returns outputs of shape (n,) and the cache needed by `backward`."""
        h = np.asarray(x, dtype=float)
        if h.ndim != 2 or h.shape[1] != self.sizes[0]:
            raise ValidationError(f"expected inputs of shape (n, {self.sizes[0]}), got {h.shape}")
        cache = [h]
        for i in range(self.n_layers):
            w, b = self.params[2 * i], self.params[2 * i + 1]
            h = h @ w + b
            if i < self.n_layers - 1:
                h = np.tanh(h)
            cache.append(h)
        return h[:, 0], cache

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache: list, grad_out: np.ndarray) -> List[np.ndarray]:
        """Gradients of sum(grad_out * output) with respect to every parameter."""
        grads: List[np.ndarray] = [None] * len(self.params)
        delta = np.asarray(grad_out, dtype=float).reshape(-1, 1)
        for i in reversed(range(self.n_layers)):
            h_in = cache[i]
            grads[2 * i] = h_in.T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.params[2 * i].T) * (1.0 - cache[i] ** 2)
        return grads

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, flat: np.ndarray) -> None:
        offset = 0
        for p in self.params:
            p[...] = flat[offset : offset + p.size].reshape(p.shape)
            offset += p.size


class Adam:
    """Adam over a list of arrays, updated in place."""

    def __init__(self, params: Sequence[np.ndarray], lr: float = 1e-2, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
