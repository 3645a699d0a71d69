"""
Adam optimizer with bias-corrected moments.
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from app.src.nets.network import NetworkParams, named_arrays


@dataclass
class AdamState:
    """First/second moments keyed by flat parameter name, and the step count."""
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(params: NetworkParams, grads: NetworkParams, state: AdamState, lr: float = 1e-4,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    """
    Apply one Adam update to ``params`` in place.

    Args:
        params: Parameters to update
        grads: Gradients with the same structure
        state: Moments from previous steps (updated in place)
        lr, beta1, beta2, eps: Adam hyper-parameters

    Returns:
        The updated state (t incremented)
    """
    state.t += 1
    t = state.t
    correction1 = 1.0 - beta1 ** t
    correction2 = 1.0 - beta2 ** t
    param_arrays = named_arrays(params)
    for name, g in named_arrays(grads).items():
        if name not in state.m:
            state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        param_arrays[name] -= lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
    return state
