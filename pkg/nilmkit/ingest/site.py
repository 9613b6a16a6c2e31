"""
Site-NILM classes. A computer site is in class A below 10 W, B in [10, 15),
C in [15, 80) and D from 80 W up.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from nilmkit.errors import DataError, ParseError
from nilmkit.ingest.sync import CSV_FLOAT_FORMAT

logger = logging.getLogger(__name__)

SITE_CLASSES = ("A", "B", "C", "D")
SITE_BOUNDARIES = (10.0, 15.0, 80.0)


def site_class_indices(watts) -> np.ndarray:
    """Class index 0..3 per value, intervals closed on the left."""
    x = np.asarray(watts, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DataError("site watts must be finite")
    if np.any(x < 0):
        raise DataError("site watts must be non-negative")
    return np.digitize(x, SITE_BOUNDARIES, right=False)


def label_site_classes(watts) -> np.ndarray:
    """Class letters A-D per value."""
    return np.asarray(SITE_CLASSES)[site_class_indices(watts)]


@dataclass(frozen=True)
class SiteFile:
    """Three columns: aggregate watts, appliance watts, class label."""

    aggregate: np.ndarray
    appliance: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if not len(self.aggregate) == len(self.appliance) == len(self.labels):
            raise DataError("site file columns differ in length")

    def __len__(self) -> int:
        return len(self.aggregate)

    def split(self, ratio: float):
        """Chronological train/test split."""
        cut = int(round(len(self) * ratio))
        return (SiteFile(self.aggregate[:cut], self.appliance[:cut], self.labels[:cut]),
                SiteFile(self.aggregate[cut:], self.appliance[cut:], self.labels[cut:]))


def build_site_file(aggregate, appliance) -> SiteFile:
    """Label every row from its aggregate watts."""
    agg = np.asarray(aggregate, dtype=np.float64)
    app = np.asarray(appliance, dtype=np.float64)
    return SiteFile(agg, app, label_site_classes(agg))


def write_site_csv(site: SiteFile, path: str) -> None:
    frame = pd.DataFrame({"aggregate": site.aggregate, "appliance": site.appliance, "class": site.labels})
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def read_site_csv(path: str) -> SiteFile:
    """Read a site CSV and check the labels against the threshold rule."""
    try:
        frame = pd.read_csv(path, dtype={"class": str})
    except (FileNotFoundError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"cannot read site file: {e}", path)
    if list(frame.columns) != ["aggregate", "appliance", "class"]:
        raise ParseError("expected 'aggregate,appliance,class' header", path)
    site = SiteFile(frame["aggregate"].to_numpy(dtype=np.float64),
                    frame["appliance"].to_numpy(dtype=np.float64),
                    frame["class"].to_numpy(dtype=str))
    mismatched = int(np.sum(label_site_classes(site.aggregate) != site.labels))
    if mismatched:
        logger.warning("%s: %d label(s) disagree with the threshold rule", path, mismatched)
    return site
