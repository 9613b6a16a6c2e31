"""Loss functions returning the scalar loss and its gradient."""

from enum import Enum
from typing import Tuple

import numpy as np

from nilmkit.errors import DataError, ShapeError
from nilmkit.nn.tensor import DTYPE

SOFTMAX_TOLERANCE = 1e-9


class LossKind(str, Enum):
    MSE = "mse"
    CROSS_ENTROPY = "cross_entropy"


def _check_finite(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN or infinite values")


def loss_eval(kind, predictions, targets) -> Tuple[float, np.ndarray]:
    """
    Evaluate a loss and its gradient with respect to `predictions`.

    mse: mean of squared elementwise differences.
    cross_entropy: mean negative log-probability of the true class. Predictions
    must be softmax rows; targets are class indices [batch] or one-hot rows.
    """
    kind = LossKind(kind)
    pred = np.asarray(predictions, dtype=DTYPE)
    _check_finite(pred, "predictions")

    if kind is LossKind.MSE:
        target = np.asarray(targets, dtype=DTYPE)
        _check_finite(target, "targets")
        if pred.shape != target.shape:
            raise ShapeError("mse predictions and targets differ", "shape", pred.shape, target.shape)
        diff = pred - target
        loss = float(np.mean(diff * diff))
        return loss, 2.0 * diff / diff.size

    onehot = _onehot(pred, targets)
    batch = pred.shape[0]
    safe = np.maximum(pred, np.finfo(DTYPE).tiny)
    loss = float(-np.sum(onehot * np.log(safe)) / batch)
    grad = -onehot / (batch * safe)
    return max(loss, 0.0), grad


def softmax_cross_entropy_grad(probabilities, targets) -> np.ndarray:
    """Cross-entropy gradient with respect to the softmax logits: (p - onehot) / batch."""
    pred = np.asarray(probabilities, dtype=DTYPE)
    _check_finite(pred, "predictions")
    return (pred - _onehot(pred, targets)) / pred.shape[0]


def _onehot(pred: np.ndarray, targets) -> np.ndarray:
    if pred.ndim != 2:
        raise ShapeError("cross_entropy predictions must be [batch, classes]", "rank", 2, pred.ndim)
    sums = pred.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > SOFTMAX_TOLERANCE) or np.any(pred < 0):
        raise DataError("cross_entropy needs softmax outputs (rows summing to 1)")
    batch, classes = pred.shape
    target = np.asarray(targets)
    if target.ndim == 1:
        if target.shape[0] != batch:
            raise ShapeError("cross_entropy targets", "batch", batch, target.shape[0])
        if not np.issubdtype(target.dtype, np.integer):
            if not np.all(np.isfinite(target)) or not np.all(target == np.round(target)):
                raise DataError("class-index targets must be integers")
            target = target.astype(np.int64)
        if np.any(target < 0) or np.any(target >= classes):
            raise DataError(f"class index outside [0, {classes})")
        onehot = np.zeros_like(pred)
        onehot[np.arange(batch), target] = 1.0
    else:
        onehot = np.asarray(target, dtype=DTYPE)
        _check_finite(onehot, "targets")
        if onehot.shape != pred.shape:
            raise ShapeError("cross_entropy targets", "shape", pred.shape, onehot.shape)
    return onehot
