"""
Accuracy, per-class precision/recall/F1 and the plot-ready report files
(CSV data plus a static SVG chart) written for overlays, histograms,
confusion matrices and spectrogram grids.
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

import matplotlib
from matplotlib.figure import Figure
import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix as sk_confusion_matrix

from nilmkit.errors import DataError, ShapeError

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.6f"
SVG_HASH_SALT = "nilmkit"
PLOT_KINDS = ("overlay", "histogram", "confusion", "spectrogram")


def accuracy(correct: int, total: int) -> float:
    """Samples_c / Samples_t * 100."""
    if total < 1:
        raise DataError("accuracy needs at least one sample")
    if not 0 <= correct <= total:
        raise DataError(f"correct count {correct} outside [0, {total}]")
    return 100.0 * correct / total


@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K counts, rows = truth, columns = prediction."""

    counts: np.ndarray
    class_names: Sequence[str] = ()

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or counts.shape[0] == 0:
            raise ShapeError("confusion matrix must be square and non-empty", "shape", "K x K", counts.shape)
        if np.any(counts < 0):
            raise DataError("confusion counts must be non-negative")
        if self.class_names and len(self.class_names) != counts.shape[0]:
            raise ShapeError("one name per class", "class names", counts.shape[0], len(self.class_names))
        object.__setattr__(self, "counts", counts.astype(np.int64))

    @property
    def size(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.counts))

    def names(self) -> List[str]:
        return list(self.class_names) if self.class_names else [str(i) for i in range(self.size)]


def confusion_from_pairs(truth, predicted, class_count: int,
                         class_names: Sequence[str] = ()) -> ConfusionMatrix:
    """Count (truth, prediction) index pairs into a K x K matrix."""
    truth = np.asarray(truth, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if truth.shape != predicted.shape:
        raise ShapeError("truth and prediction differ in length", "length", len(truth), len(predicted))
    if len(truth) == 0:
        return ConfusionMatrix(np.zeros((class_count, class_count), dtype=np.int64), class_names)
    for name, values in (("truth", truth), ("prediction", predicted)):
        if values.min() < 0 or values.max() >= class_count:
            raise DataError(f"{name} index outside [0, {class_count})")
    counts = sk_confusion_matrix(truth, predicted, labels=np.arange(class_count))
    return ConfusionMatrix(counts, class_names)


@dataclass(frozen=True)
class MetricSet:
    """Accuracy percent plus one-vs-rest precision/recall/F1 per class."""

    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    macro_f1: float
    # classes whose precision or recall had a zero denominator
    undefined: List[int] = field(default_factory=list)
    class_names: Sequence[str] = ()


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros(len(num), dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def precision_recall_f1(matrix: ConfusionMatrix) -> MetricSet:
    """Per-class metrics from the matrix; 0/0 gives 0 and flags the class."""
    counts = matrix.counts.astype(np.float64)
    if matrix.total == 0:
        raise DataError("confusion matrix holds no samples")
    tp = np.diag(counts)
    predicted = counts.sum(axis=0)
    actual = counts.sum(axis=1)
    precision = _safe_ratio(tp, predicted)
    recall = _safe_ratio(tp, actual)
    f1 = _safe_ratio(2.0 * precision * recall, precision + recall)
    undefined = [int(i) for i in np.flatnonzero((predicted == 0) | (actual == 0))]
    return MetricSet(
        accuracy=accuracy(matrix.correct, matrix.total),
        precision=precision,
        recall=recall,
        f1=f1,
        macro_f1=float(np.mean(f1)),
        undefined=undefined,
        class_names=matrix.names(),
    )


def format_summary(metrics: MetricSet, title: str = "") -> str:
    """Plain-text block: accuracy, macro-F1 and one line per class."""
    lines = [title] if title else []
    lines.append(f"accuracy: {metrics.accuracy:.2f}%")
    lines.append(f"macro_f1: {metrics.macro_f1:.4f}")
    names = list(metrics.class_names) or [str(i) for i in range(len(metrics.f1))]
    width = max(len(n) for n in names)
    for i, name in enumerate(names):
        flag = " (undefined)" if i in metrics.undefined else ""
        lines.append(f"  {name:<{width}}  precision {metrics.precision[i]:.4f}  "
                     f"recall {metrics.recall[i]:.4f}  f1 {metrics.f1[i]:.4f}{flag}")
    return "\n".join(lines) + "\n"


def write_confusion_csv(matrix: ConfusionMatrix, path: str) -> None:
    """Rows = truth, columns = prediction, first column the truth class name."""
    names = matrix.names()
    frame = pd.DataFrame(matrix.counts, columns=names)
    frame.insert(0, "truth", names)
    frame.to_csv(path, index=False, lineterminator="\n")


# --- plot data ---------------------------------------------------------------

def _save_svg(fig: Figure, path: str) -> None:
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def _overlay(payload: Mapping[str, Any], csv_path: str, svg_path: str) -> None:
    gt = np.asarray(payload.get("gt", []), dtype=np.float64)
    pd_ = np.asarray(payload.get("pd", []), dtype=np.float64)
    if len(gt) == 0 or len(gt) != len(pd_):
        raise DataError("overlay payload needs equal-length, non-empty 'gt' and 'pd'")
    pd.DataFrame({"index": np.arange(len(gt)), "gt": gt, "pd": pd_}).to_csv(
        csv_path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    fig = Figure(figsize=(8, 3))
    ax = fig.subplots()
    ax.plot(gt, label="ground truth", linewidth=0.8)
    ax.plot(pd_, label="prediction", linewidth=0.8)
    ax.set_xlabel("sample")
    ax.set_ylabel(payload.get("ylabel", "normalized power"))
    ax.set_title(payload.get("title", ""))
    ax.legend(loc="upper right")
    _save_svg(fig, svg_path)


def _histogram(payload: Mapping[str, Any], csv_path: str, svg_path: str) -> None:
    counts = payload.get("counts", payload)
    if not counts:
        raise DataError("histogram payload is empty")
    labels = [str(k) for k in counts]
    values = [int(v) for v in counts.values()]
    pd.DataFrame({"state": labels, "count": values}).to_csv(csv_path, index=False, lineterminator="\n")
    fig = Figure(figsize=(6, 3))
    ax = fig.subplots()
    ax.bar(np.arange(len(values)), values)
    ax.set_xticks(np.arange(len(values)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("count")
    ax.set_title(payload.get("title", "") if "counts" in payload else "")
    fig.tight_layout()
    _save_svg(fig, svg_path)


def _confusion(payload: Any, csv_path: str, svg_path: str) -> None:
    matrix = payload if isinstance(payload, ConfusionMatrix) else ConfusionMatrix(
        np.asarray(payload.get("counts")), payload.get("class_names", ()))
    write_confusion_csv(matrix, csv_path)
    names = matrix.names()
    fig = Figure(figsize=(1 + 0.4 * matrix.size, 1 + 0.4 * matrix.size))
    ax = fig.subplots()
    ax.pcolormesh(matrix.counts[::-1], cmap="Greys")
    ax.set_xticks(np.arange(matrix.size) + 0.5)
    ax.set_xticklabels(names, rotation=90)
    ax.set_yticks(np.arange(matrix.size) + 0.5)
    ax.set_yticklabels(names[::-1])
    ax.set_xlabel("predicted")
    ax.set_ylabel("truth")
    fig.tight_layout()
    _save_svg(fig, svg_path)


def _spectrogram_grid(payload: Mapping[str, Any], csv_path: str, svg_path: str) -> None:
    panels = [np.asarray(p, dtype=np.float64) for p in payload.get("images", [])]
    if not panels:
        raise DataError("spectrogram payload has no images")
    titles = list(payload.get("titles", [""] * len(panels)))
    rows = []
    for k, panel in enumerate(panels):
        r, c = np.indices(panel.shape)
        rows.append(pd.DataFrame({"panel": k, "row": r.ravel(), "col": c.ravel(), "value": panel.ravel()}))
    pd.concat(rows).to_csv(csv_path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    columns = min(len(panels), 4)
    grid_rows = -(-len(panels) // columns)
    fig = Figure(figsize=(2.5 * columns, 2 * grid_rows))
    axes = np.atleast_1d(fig.subplots(grid_rows, columns)).ravel()
    for ax in axes[len(panels):]:
        ax.set_axis_off()
    for ax, panel, title in zip(axes, panels, titles):
        ax.pcolormesh(panel[::-1], cmap="gray", vmin=0.0, vmax=1.0)
        ax.set_title(title, fontsize=8)
        ax.set_xticks([])
        ax.set_yticks([])
    _save_svg(fig, svg_path)


_RENDERERS = {
    "overlay": _overlay,
    "histogram": _histogram,
    "confusion": _confusion,
    "spectrogram": _spectrogram_grid,
}


def emit_plot_data(kind: str, payload: Any, out_dir: str, name: Optional[str] = None) -> Dict[str, str]:
    """
    Write `<name>.csv` and `<name>.svg` for one figure-shaped result.

    overlay:     {"gt": [...], "pd": [...]}
    histogram:   {state: count} or {"counts": {...}, "title": ...}
    confusion:   ConfusionMatrix or {"counts": KxK, "class_names": [...]}
    spectrogram: {"images": [HxW, ...], "titles": [...]}
    """
    if kind not in _RENDERERS:
        raise DataError(f"unknown report kind '{kind}', expected one of {PLOT_KINDS}")
    if payload is None or (isinstance(payload, Mapping) and not payload):
        raise DataError(f"{kind} payload is empty")
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, name or kind)
    paths = {"csv": stem + ".csv", "svg": stem + ".svg"}
    _RENDERERS[kind](payload, paths["csv"], paths["svg"])
    logger.info("wrote %s report: %s", kind, paths["svg"])
    return paths
