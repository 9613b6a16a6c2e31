"""Time series and parse-report types produced by the dataset parsers."""

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from nilmkit.errors import DataError


@dataclass(frozen=True)
class TimeSeries:
    """Power readings in watts at strictly increasing UTC seconds."""

    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=np.int64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.shape != v.shape or t.ndim != 1:
            raise DataError(f"timestamps {t.shape} and values {v.shape} must be equal-length 1D arrays")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise DataError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise DataError("time series values must be finite")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.timestamps)

    def between(self, start: int, end: int) -> "TimeSeries":
        """Samples with start <= t < end."""
        mask = (self.timestamps >= start) & (self.timestamps < end)
        return TimeSeries(self.timestamps[mask], self.values[mask])


@dataclass
class ParseReport:
    """Counts of lines read and skipped per parsed file."""

    lines_read: Dict[str, int] = field(default_factory=dict)
    skipped: Dict[str, int] = field(default_factory=dict)
    skipped_lines: Dict[str, List[int]] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def record(self, name: str, read: int, skipped_lines: List[int]) -> None:
        self.lines_read[name] = read
        self.skipped[name] = len(skipped_lines)
        self.skipped_lines[name] = list(skipped_lines)

    @property
    def total_skipped(self) -> int:
        return int(sum(self.skipped.values()))

    def summary(self) -> str:
        read = sum(self.lines_read.values())
        return f"{len(self.lines_read)} file(s), {read} line(s) read, {self.total_skipped} skipped"
