"""SGD and Adam parameter updates honouring trainable flags."""

import logging
from typing import Dict, List, Optional

import numpy as np

from nilmkit.errors import ConfigError, ShapeError
from nilmkit.nn.network import NetworkState

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


def optimizer_step(state: NetworkState, gradients: List[Optional[Dict[str, np.ndarray]]],
                   kind: Optional[str] = None, learning_rate: Optional[float] = None) -> NetworkState:
    """
    Apply one update in place and return the state.

    sgd:  W_n = W_o - alpha * dE/dW_o
    adam: bias-corrected first/second moment update.
    Frozen layers are skipped entirely; their slots are never created or touched.
    """
    kind = kind or state.optimizer
    alpha = state.learning_rate if learning_rate is None else float(learning_rate)
    if alpha <= 0:
        raise ConfigError(f"learning rate must be positive, got {alpha}")
    if kind not in ("sgd", "adam"):
        raise ConfigError(f"unknown optimizer '{kind}'")
    if len(gradients) != len(state.layers):
        raise ShapeError("one gradient entry per layer is required", "layers",
                         len(state.layers), len(gradients))

    state.step += 1
    t = state.step
    for layer, layer_grads in zip(state.layers, gradients):
        if not layer.trainable or not layer_grads:
            continue
        for key, param in layer.params.items():
            grad = layer_grads.get(key)
            if grad is None:
                continue
            if grad.shape != param.shape:
                raise ShapeError(f"gradient for {layer.name}.{key}", key, param.shape, grad.shape)
            if kind == "sgd":
                param -= alpha * grad
                continue
            slot = state.slots.setdefault(
                f"{layer.name}.{key}", {"m": np.zeros_like(param), "v": np.zeros_like(param)}
            )
            m, v = slot["m"], slot["v"]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * grad
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * (grad * grad)
            m_hat = m / (1.0 - ADAM_BETA1 ** t)
            v_hat = v / (1.0 - ADAM_BETA2 ** t)
            param -= alpha * m_hat / (np.sqrt(v_hat) + ADAM_EPSILON)
    return state
