"""Mini-batch training loop shared by the disaggregator and the classifiers."""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from nilmkit.errors import ConfigError, ShapeError, TrainingDivergedError
from nilmkit.nn.network import NetworkState
from nilmkit.nn.optim import optimizer_step
from nilmkit.nn.tensor import as_tensor

logger = logging.getLogger(__name__)


@dataclass
class TrainingHistory:
    """Per-epoch mean training loss plus any extra per-epoch metric."""

    losses: List[float] = field(default_factory=list)
    metrics: List[float] = field(default_factory=list)


def fit(state: NetworkState, inputs, targets, epochs: int, batch_size: int, seed: int,
        on_epoch: Optional[Callable[[int, NetworkState], float]] = None) -> TrainingHistory:
    """
    Train in place with the state's loss and optimizer.

    Each epoch visits the samples in a permutation drawn from a generator seeded
    with `seed`, so identical inputs give bit-identical states. `on_epoch`, when
    given, returns a metric recorded after every epoch.
    """
    if epochs < 1 or batch_size < 1:
        raise ConfigError("epochs and batch_size must be >= 1")
    x = as_tensor(inputs, "training inputs")
    y = np.asarray(targets)
    if len(x) != len(y):
        raise ShapeError("inputs and targets are not row-aligned", "rows", len(x), len(y))
    if len(x) == 0:
        raise ShapeError("no training samples", "rows", ">= 1", 0)

    rng = np.random.default_rng(seed)
    history = TrainingHistory()
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(x))
        total = 0.0
        for batch, start in enumerate(range(0, len(x), batch_size)):
            idx = order[start:start + batch_size]
            out, caches = state.forward_train(x[idx])
            if not np.all(np.isfinite(out)):
                raise TrainingDivergedError(epoch, batch, state.parameter_norm())
            loss, grads = state.loss_backward(out, caches, y[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, batch, state.parameter_norm())
            optimizer_step(state, grads)
            total += loss * len(idx)
        epoch_loss = total / len(x)
        history.losses.append(epoch_loss)
        if on_epoch is not None:
            history.metrics.append(float(on_epoch(epoch, state)))
        logger.info("epoch %d/%d loss %.6f", epoch, epochs, epoch_loss)
    return history
