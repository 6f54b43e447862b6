"""Adam with bias correction and global-norm gradient clipping.

Defaults follow the training recipe this model ships with:
alpha=2e-4, beta1=0.85, beta2=0.997, epsilon=1e-6, clip threshold 2.0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import ParameterSet

DEFAULT_ALPHA = 2e-4
DEFAULT_BETA1 = 0.85
DEFAULT_BETA2 = 0.997
DEFAULT_EPSILON = 1e-6
DEFAULT_CLIP_NORM = 2.0


@dataclass
class AdamState:
    """Optimizer step counter plus per-parameter first/second moments."""

    alpha: float = DEFAULT_ALPHA
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epsilon: float = DEFAULT_EPSILON
    step: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: ParameterSet, **hyper) -> "AdamState":
        state = cls(**hyper)
        for name, p in params.items():
            state.first_moment[name] = np.zeros_like(p.tensor.data)
            state.second_moment[name] = np.zeros_like(p.tensor.data)
        return state


def adam_step(state: AdamState, params: ParameterSet) -> None:
    """Apply one bias-corrected Adam update in place; missing grads count as zero."""
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    lr = state.alpha
    for name, p in params.items():
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None or m.shape != p.tensor.data.shape:
            raise ValueError(f"optimizer state does not match parameter '{name}'")
        g = p.tensor.grad
        if g is None:
            g = 0.0
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p.tensor.data -= lr * m_hat / (np.sqrt(v_hat) + state.epsilon)


def clip_gradients(params: ParameterSet, threshold: float = DEFAULT_CLIP_NORM) -> float:
    """Scale all gradients by threshold/norm when the global L2 norm exceeds it.

    Returns the pre-clip global norm.
    """
    total = 0.0
    for p in params.tensors():
        if p.grad is not None:
            total += float(np.square(p.grad).sum())
    norm = float(np.sqrt(total))
    if norm > threshold:
        factor = threshold / norm
        for p in params.tensors():
            if p.grad is not None:
                p.grad = p.grad * factor
    return norm


def zero_gradients(params: ParameterSet) -> None:
    params.zero_grad()
