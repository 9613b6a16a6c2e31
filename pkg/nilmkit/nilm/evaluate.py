"""Threshold accuracy for home NILM and four-class evaluation for site NILM."""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import pandas as pd

from nilmkit.errors import ConfigError, DataError, ShapeError
from nilmkit.ingest.normalize import NormStats, denormalize, normalize
from nilmkit.ingest.site import SITE_CLASSES, SiteFile, site_class_indices
from nilmkit.metrics import ConfusionMatrix, accuracy, confusion_from_pairs
from nilmkit.nilm.model import predict_windows
from nilmkit.nn.network import NetworkState
from nilmkit.windowing import WindowBatch, WindowConfig, build_windows, mid_index

logger = logging.getLogger(__name__)

# Per-appliance tau in normalized units.
APPLIANCE_THRESHOLDS: Dict[str, float] = {
    "dishwasher": 0.05,
    "microwave": 0.055,
    "refrigerator": 0.4,
    "washer_dryer": 0.025,
}

_ALIASES = {
    "dish_washer": "dishwasher",
    "dishwaser": "dishwasher",
    "fridge": "refrigerator",
    "washer-dryer": "washer_dryer",
    "washerdryer": "washer_dryer",
}


def threshold_for(appliance: str) -> float:
    """Look up an appliance's tau; REDD channel suffixes like `refrigerator_5` are ignored."""
    key = appliance.strip().lower().replace(" ", "_")
    candidates = [key, key.rstrip("0123456789").rstrip("_")]
    for candidate in candidates:
        candidate = _ALIASES.get(candidate, candidate)
        if candidate in APPLIANCE_THRESHOLDS:
            return APPLIANCE_THRESHOLDS[candidate]
    raise ConfigError(f"no preset threshold for '{appliance}'; known: {sorted(APPLIANCE_THRESHOLDS)}")


@dataclass(frozen=True)
class EvalReport:
    """Points with |PD - GT| < tau count as correct."""

    appliance: str
    tau: float
    total: int
    correct: int
    predictions: np.ndarray
    ground_truth: np.ndarray

    @property
    def accuracy(self) -> float:
        return accuracy(self.correct, self.total)

    @property
    def differences(self) -> np.ndarray:
        return np.abs(self.predictions - self.ground_truth)

    def summary(self) -> str:
        name = self.appliance or "appliance"
        return (f"appliance: {name}\n"
                f"tau: {self.tau:g} (normalized)\n"
                f"points: {self.total}\n"
                f"correct: {self.correct}\n"
                f"accuracy: {self.accuracy:.2f}%\n")


def threshold_accuracy(predictions, ground_truth, tau: float, appliance: str = "") -> EvalReport:
    """Elementwise D = |PD - GT|; batched [n, 3] arrays count every point."""
    pd_ = np.asarray(predictions, dtype=np.float64)
    gt = np.asarray(ground_truth, dtype=np.float64)
    if pd_.shape != gt.shape:
        raise ShapeError("predictions and ground truth differ", "shape", gt.shape, pd_.shape)
    if not tau > 0:
        raise ConfigError(f"tau must be positive, got {tau}")
    if pd_.size == 0:
        raise DataError("nothing to evaluate")
    correct = int(np.sum(np.abs(pd_ - gt) < tau))
    return EvalReport(appliance, float(tau), int(pd_.size), correct, pd_.ravel(), gt.ravel())


def evaluate_appliance(state: NetworkState, batch: WindowBatch, tau: float,
                       appliance: str = "") -> EvalReport:
    """Predict every window and score all three output points."""
    return threshold_accuracy(predict_windows(state, batch.inputs), batch.targets, tau, appliance)


def write_eval_csv(report: EvalReport, path: str) -> None:
    """Per-point PD, GT and D."""
    frame = pd.DataFrame({"pd": report.predictions, "gt": report.ground_truth, "d": report.differences})
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")


# --- site NILM -----------------------------------------------------------------

@dataclass(frozen=True)
class SiteEvalReport:
    """4 x 4 confusion over the site classes A-D."""

    confusion: ConfusionMatrix

    @property
    def total(self) -> int:
        return self.confusion.total

    @property
    def correct(self) -> int:
        return self.confusion.correct

    @property
    def accuracy(self) -> float:
        return accuracy(self.correct, self.total)

    @property
    def per_class_accuracy(self) -> Dict[str, Optional[float]]:
        """Recall per class in percent; None for classes absent from the truth."""
        counts = self.confusion.counts
        result: Dict[str, Optional[float]] = {}
        for i, name in enumerate(SITE_CLASSES):
            row = int(counts[i].sum())
            result[name] = 100.0 * counts[i, i] / row if row else None
        return result

    def summary(self) -> str:
        lines = [f"samples: {self.total}", f"correct: {self.correct}", f"accuracy: {self.accuracy:.2f}%"]
        for name, value in self.per_class_accuracy.items():
            lines.append(f"  class {name}: " + ("n/a" if value is None else f"{value:.2f}%"))
        return "\n".join(lines) + "\n"


def site_windows(site: SiteFile, stats: NormStats, config: WindowConfig) -> WindowBatch:
    """
    Normalized windows of the site aggregate with targets taken from the same
    aggregate column: the site model regresses the aggregate from itself and
    its classes come from the denormalized mid-point. The appliance column is
    carried in the site file for reference and plays no part in training or
    evaluation.
    """
    z = normalize(site.aggregate, stats)
    return build_windows(z, z, config)


def site_evaluate(state: NetworkState, site: SiteFile, stats: Optional[NormStats],
                  config: WindowConfig) -> SiteEvalReport:
    """
    Denormalize each window's mid-point prediction with the training stats
    (X = Z * sigma + mu), classify it, and compare with the label at that position.
    """
    if stats is None:
        raise DataError("site evaluation needs the training split's normalization stats")
    batch = site_windows(site, stats, config)
    predicted_watts = denormalize(predict_windows(state, batch.inputs)[:, 1], stats)
    # the regression can undershoot zero watts
    predicted = site_class_indices(np.maximum(predicted_watts, 0.0))
    positions = batch.starts + mid_index(config.length)
    letter_index = {name: i for i, name in enumerate(SITE_CLASSES)}
    truth = np.array([letter_index[str(label)] for label in site.labels[positions]], dtype=np.int64)
    report = SiteEvalReport(confusion_from_pairs(truth, predicted, len(SITE_CLASSES), SITE_CLASSES))
    logger.info("site evaluation: %d/%d correct (%.2f%%)", report.correct, report.total, report.accuracy)
    return report
