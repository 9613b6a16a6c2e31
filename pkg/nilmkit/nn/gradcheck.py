"""Central-difference verification of the analytic gradients."""

import logging
from typing import Optional

import numpy as np

from nilmkit.errors import ConfigError
from nilmkit.nn.losses import LossKind, loss_eval
from nilmkit.nn.network import NetworkState
from nilmkit.nn.tensor import as_tensor

logger = logging.getLogger(__name__)


def _default_targets(state: NetworkState, inputs: np.ndarray, kind: LossKind,
                     rng: np.random.Generator) -> np.ndarray:
    out = state.forward(inputs)
    if kind is LossKind.CROSS_ENTROPY:
        return rng.integers(0, out.shape[1], size=out.shape[0])
    return rng.normal(size=out.shape)


def finite_difference_check(state: NetworkState, inputs, loss_kind=None, epsilon: float = 1e-6,
                            targets=None, sample: Optional[int] = None, seed: int = 0) -> float:
    """
    Max over trainable parameters of |analytic - central difference| / max(1, |analytic|).

    Frozen layers are excluded. `sample` limits the check to that many seeded
    coordinates per parameter tensor, for networks too large to perturb fully.
    """
    if not 1e-6 <= epsilon <= 1e-3:
        raise ConfigError(f"epsilon must lie in [1e-6, 1e-3], got {epsilon}")
    kind = LossKind(loss_kind or state.loss)
    rng = np.random.default_rng(seed)
    inputs = as_tensor(inputs, "gradcheck input")
    if targets is None:
        targets = _default_targets(state, inputs, kind, rng)

    out, caches = state.forward_train(inputs)
    if kind is state.loss:
        _, analytic = state.loss_backward(out, caches, targets)
    else:
        analytic = state.backward(loss_eval(kind, out, targets)[1], caches)

    def loss_at() -> float:
        return loss_eval(kind, state.forward(inputs), targets)[0]

    worst = 0.0
    for layer, layer_grads in zip(state.layers, analytic):
        if not layer.trainable or not layer_grads:
            continue
        for key, param in layer.params.items():
            flat = param.reshape(-1)
            grad = layer_grads[key].reshape(-1)
            coords = np.arange(flat.size)
            if sample is not None and sample < flat.size:
                coords = np.sort(rng.choice(flat.size, size=sample, replace=False))
            for idx in coords:
                original = flat[idx]
                flat[idx] = original + epsilon
                plus = loss_at()
                flat[idx] = original - epsilon
                minus = loss_at()
                flat[idx] = original
                numeric = (plus - minus) / (2.0 * epsilon)
                err = abs(grad[idx] - numeric) / max(1.0, abs(grad[idx]))
                worst = max(worst, float(err))
    logger.debug("gradient check: max relative discrepancy %.3e", worst)
    return worst
