"""Adam optimizer over parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError
from .tensor import Tensor


@dataclass
class Adam:
    """Adam with bias correction and a constant learning rate.

    Moment buffers are keyed by parameter identity and created lazily on the
    first step that touches a parameter, so the same optimizer instance can
    serve any parameter collection as long as the tensors themselves persist.
    """

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    _m: dict[int, np.ndarray] = field(default_factory=dict, repr=False)
    _v: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def step(self, grads: dict[Tensor, np.ndarray]) -> None:
        """Apply one update in place to every parameter in ``grads``."""
        if not grads:
            raise ContractError("Adam.step called with no gradients")
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for p, g in grads.items():
            if g.shape != p.data.shape:
                raise ContractError(
                    f"gradient shape {g.shape} does not match parameter shape {p.data.shape}"
                )
            m = self._m.get(id(p))
            if m is None:
                m = np.zeros_like(p.data)
                self._m[id(p)] = m
                self._v[id(p)] = np.zeros_like(p.data)
            v = self._v[id(p)]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / b1t
            v_hat = v / b2t
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_arrays(self, params: list[Tensor]) -> dict[str, np.ndarray]:
        """Moment buffers in ``params`` order, for checkpointing."""
        out: dict[str, np.ndarray] = {"t": np.array([self.t], dtype=np.int64)}
        for i, p in enumerate(params):
            m = self._m.get(id(p))
            v = self._v.get(id(p))
            out[f"m{i}"] = m if m is not None else np.zeros_like(p.data)
            out[f"v{i}"] = v if v is not None else np.zeros_like(p.data)
        return out

    def load_state_arrays(self, params: list[Tensor], arrays: dict[str, np.ndarray]) -> None:
        self.t = int(arrays["t"][0])
        for i, p in enumerate(params):
            self._m[id(p)] = np.array(arrays[f"m{i}"], dtype=p.data.dtype)
            self._v[id(p)] = np.array(arrays[f"v{i}"], dtype=p.data.dtype)
