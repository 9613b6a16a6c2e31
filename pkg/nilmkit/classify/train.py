"""Training and evaluation of the appliance classifiers on manifest images."""

import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from nilmkit.classify.model import CLASS_COUNT, UNKNOWN_CLASS
from nilmkit.errors import DataError, ShapeError
from nilmkit.metrics import ConfusionMatrix, MetricSet, confusion_from_pairs, precision_recall_f1
from nilmkit.nn.checkpoint import save_checkpoint
from nilmkit.nn.network import NetworkState
from nilmkit.nn.training import TrainingHistory, fit
from nilmkit.signatures.dataset import read_manifest
from nilmkit.signatures.images import load_png

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ImageSet:
    """Stacked pixels [n, H, W] with class indices into `class_names`."""

    pixels: np.ndarray
    labels: np.ndarray
    class_names: Tuple[str, ...]

    def __len__(self) -> int:
        return len(self.pixels)


def class_index(names: Sequence[str], class_count: int = CLASS_COUNT) -> Tuple[str, ...]:
    """Sorted appliance names padded with the reserved unknown class."""
    populated = sorted(set(names) - {UNKNOWN_CLASS})
    if len(populated) > class_count - 1:
        raise DataError(f"{len(populated)} appliance classes exceed the {class_count - 1} available")
    padding = [f"reserved_{i}" for i in range(class_count - 1 - len(populated))]
    return tuple(populated + padding + [UNKNOWN_CLASS])


def load_manifest_images(path: str, split: Optional[str] = None,
                         class_names: Optional[Sequence[str]] = None) -> ImageSet:
    """Read the PNGs listed in a manifest, optionally one split only."""
    frame = read_manifest(path)
    if split is not None:
        frame = frame[frame["split"] == split]
    if frame.empty:
        raise DataError(f"manifest {path} has no images" + (f" in split '{split}'" if split else ""))
    names = tuple(class_names) if class_names is not None else class_index(frame["class"])
    lookup = {name: i for i, name in enumerate(names)}
    unknown = sorted(set(frame["class"]) - set(lookup))
    if unknown:
        raise DataError(f"classes {unknown} are not known to the classifier")
    root = os.path.dirname(path)
    pixels = np.stack([load_png(os.path.join(root, rel)) for rel in frame["path"]])
    labels = np.array([lookup[c] for c in frame["class"]], dtype=np.int64)
    return ImageSet(pixels, labels, names)


def _as_input(state: NetworkState, pixels: np.ndarray) -> np.ndarray:
    if state.input_shape is None:
        raise ShapeError("classifier has no declared input shape")
    image_shape = tuple(state.input_shape[-2:])
    if tuple(pixels.shape[1:]) != image_shape:
        raise ShapeError("image size does not match the classifier", "H x W", image_shape,
                         tuple(pixels.shape[1:]))
    return pixels.reshape((len(pixels),) + tuple(state.input_shape))


def predict_classes(state: NetworkState, pixels: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Argmax class index per image."""
    return np.argmax(state.predict(_as_input(state, pixels), batch_size), axis=1)


def train_classifier(state: NetworkState, train: ImageSet, test: Optional[ImageSet], epochs: int,
                     batch_size: int, seed: int, learning_rate: Optional[float] = None,
                     checkpoint_path: Optional[str] = None) -> Tuple[NetworkState, TrainingHistory]:
    """
    Cross-entropy training with the state's optimizer (SGD for both models).
    `history.metrics` holds the per-epoch test accuracy when a test set is given.
    """
    if learning_rate is not None:
        state.learning_rate = float(learning_rate)
    if test is not None:
        missing = sorted(set(test.labels.tolist()) - set(train.labels.tolist()))
        if missing:
            names = [test.class_names[i] for i in missing]
            raise DataError(f"classes {names} appear in the test split but not in the train split")
        if test.class_names != train.class_names:
            raise DataError("train and test sets use different class indices")
    state.meta["classes"] = list(train.class_names)

    on_epoch = None
    if test is not None:
        def on_epoch(epoch: int, current: NetworkState) -> float:
            hits = int(np.sum(predict_classes(current, test.pixels) == test.labels))
            return 100.0 * hits / len(test)

    history = fit(state, _as_input(state, train.pixels), train.labels, epochs, batch_size, seed, on_epoch)
    if history.metrics:
        logger.info("final test accuracy %.2f%%", history.metrics[-1])
    if checkpoint_path:
        save_checkpoint(state, checkpoint_path)
    return state, history


@dataclass(frozen=True)
class ClassifierReport:
    confusion: ConfusionMatrix
    metrics: MetricSet
    populated: List[str] = field(default_factory=list)


def evaluate_classifier(state: NetworkState, test: ImageSet) -> ClassifierReport:
    """Argmax decisions scored into a confusion matrix and per-class metrics."""
    if len(test) == 0:
        raise DataError("no test images")
    predicted = predict_classes(state, test.pixels)
    matrix = confusion_from_pairs(test.labels, predicted, len(test.class_names), test.class_names)
    # metrics over the classes that occur, so empty reserved slots do not dilute macro-F1
    active = sorted(set(test.labels.tolist()) | set(predicted.tolist()))
    scored = ConfusionMatrix(matrix.counts[np.ix_(active, active)], [test.class_names[i] for i in active])
    populated = [test.class_names[i] for i in sorted(set(test.labels.tolist()))]
    report = ClassifierReport(matrix, precision_recall_f1(scored), populated)
    logger.info("classifier accuracy %.2f%% (macro F1 %.4f) on %d image(s)",
                report.metrics.accuracy, report.metrics.macro_f1, len(test))
    return report
