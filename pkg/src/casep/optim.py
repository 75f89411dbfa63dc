"""Adam optimizer with bias-corrected moment estimates."""

from __future__ import annotations

import numpy as np

from .tensor import ConfigError


class Adam:
    """Keeps first/second moment per parameter, keyed by dotted path.

    The update is ``p -= lr * m_hat / (sqrt(v_hat) + eps)`` with the epsilon
    added outside the square root. State tensors share the parameter dtype
    so checkpointed state round-trips exactly.
    """

    def __init__(self, named_params, lr: float = 1.5e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ConfigError("learning rate must be positive")
        if not 0 <= beta1 < 1 or not 0 <= beta2 < 1:
            raise ConfigError("betas must lie in [0, 1)")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        # preserve insertion order, dedupe shared parameters by identity
        self._entries = []
        seen: set[int] = set()
        for name, p in named_params:
            if id(p) in seen:
                continue
            seen.add(id(p))
            self._entries.append((name, p))
        self._m = {name: np.zeros_like(p.data) for name, p in self._entries}
        self._v = {name: np.zeros_like(p.data) for name, p in self._entries}

    def step(self) -> None:
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name, p in self._entries:
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / p.data.dtype.type(bc1)
            v_hat = v / p.data.dtype.type(bc2)
            p.data -= p.data.dtype.type(self.lr) * m_hat / (
                np.sqrt(v_hat) + p.data.dtype.type(self.eps)
            )

    def zero_grad(self) -> None:
        for _, p in self._entries:
            p.grad = np.zeros_like(p.data)

    # -- checkpoint integration ------------------------------------------

    def state_tensors(self) -> dict[str, np.ndarray]:
        """Flat view of optimizer state for serialization."""
        out = {"optim.step": np.array([float(self.step_count)], dtype=np.float32)}
        for name, _ in self._entries:
            out[f"optim.m.{name}"] = self._m[name]
            out[f"optim.v.{name}"] = self._v[name]
        return out

    def load_state(self, tensors: dict[str, np.ndarray]) -> None:
        self.step_count = int(round(float(tensors["optim.step"][0])))
        for name, p in self._entries:
            m = tensors[f"optim.m.{name}"]
            v = tensors[f"optim.v.{name}"]
            if m.shape != p.data.shape or v.shape != p.data.shape:
                raise ConfigError(f"optimizer state shape mismatch for {name}")
            self._m[name] = m.astype(p.data.dtype)
            self._v[name] = v.astype(p.data.dtype)
