"""
Appliance behavior: max/mean power over a period and a histogram of
consecutive-reading changes in five transient states plus an out-of-range bucket.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from nilmkit.errors import DataError
from nilmkit.ingest.timeseries import TimeSeries

logger = logging.getLogger(__name__)

# |d| < 3 stable, [3, 10) minor, [10, 50) large, >= 50 out of range
STABLE_LIMIT = 3.0
MINOR_LIMIT = 10.0
LARGE_LIMIT = 50.0
TRANSIENT_STATES = ("stable", "minor_increase", "minor_decrease", "large_increase", "large_decrease")
SECONDS_PER_DAY = 86400


@dataclass(frozen=True)
class PowerSummary:
    appliance: str
    house: str
    start: int
    end: int
    max_watts: float
    mean_watts: float
    samples: int


def period_for_days(series: TimeSeries, days: float, start: Optional[int] = None) -> Tuple[int, int]:
    """[start, start + days) in Unix seconds; defaults to the first reading."""
    if len(series) == 0:
        raise DataError("series is empty")
    begin = int(series.timestamps[0]) if start is None else int(start)
    return begin, begin + int(round(days * SECONDS_PER_DAY))


def power_summary(series: TimeSeries, period: Tuple[int, int], appliance: str = "",
                  house: str = "") -> PowerSummary:
    """Max and arithmetic mean of the readings with start <= t < end."""
    start, end = period
    if end <= start:
        raise DataError(f"empty period [{start}, {end})")
    inside = series.between(start, end)
    if len(inside) == 0:
        raise DataError(f"no readings of '{appliance or 'series'}' in [{start}, {end})")
    values = inside.values
    return PowerSummary(appliance, str(house), start, end, float(values.max()), float(values.mean()), len(values))


@dataclass(frozen=True)
class TransientHistogram:
    counts: Dict[str, int]
    out_of_range: int

    @property
    def total(self) -> int:
        return sum(self.counts.values()) + self.out_of_range

    def as_rows(self) -> List[Tuple[str, int]]:
        return list(self.counts.items()) + [("out_of_range", self.out_of_range)]


def transient_histogram(series) -> TransientHistogram:
    """Bucket every consecutive difference d = x[i+1] - x[i] by |d| and sign."""
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)
    if len(values) < 2:
        raise DataError("transient histogram needs at least two readings")
    d = np.diff(values)
    magnitude = np.abs(d)
    minor = (magnitude >= STABLE_LIMIT) & (magnitude < MINOR_LIMIT)
    large = (magnitude >= MINOR_LIMIT) & (magnitude < LARGE_LIMIT)
    counts = {
        "stable": int(np.sum(magnitude < STABLE_LIMIT)),
        "minor_increase": int(np.sum(minor & (d > 0))),
        "minor_decrease": int(np.sum(minor & (d < 0))),
        "large_increase": int(np.sum(large & (d > 0))),
        "large_decrease": int(np.sum(large & (d < 0))),
    }
    return TransientHistogram(counts, int(np.sum(magnitude >= LARGE_LIMIT)))


def compare_homes(entries: Sequence[Tuple[str, TimeSeries]], appliance: str, days: float) -> pd.DataFrame:
    """One row per home: max, mean and transient counts over its first `days` days."""
    rows = []
    for house, series in entries:
        period = period_for_days(series, days)
        summary = power_summary(series, period, appliance, house)
        inside = series.between(*period)
        row = {"house": str(house), "appliance": appliance, "start": period[0], "end": period[1],
               "max_watts": summary.max_watts, "mean_watts": summary.mean_watts}
        if len(inside) >= 2:
            histogram = transient_histogram(inside)
            row.update(dict(histogram.as_rows()))
        else:
            logger.warning("house %s: one reading in the period, no transitions", house)
            row.update({state: 0 for state in TRANSIENT_STATES}, out_of_range=0)
        rows.append(row)
    return pd.DataFrame(rows)


def write_summary_csv(summary: PowerSummary, path: str) -> None:
    frame = pd.DataFrame([{
        "appliance": summary.appliance, "house": summary.house, "start": summary.start,
        "end": summary.end, "max_watts": summary.max_watts, "mean_watts": summary.mean_watts,
        "samples": summary.samples,
    }])
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")


def write_histogram_csv(histogram: TransientHistogram, path: str) -> None:
    frame = pd.DataFrame(histogram.as_rows(), columns=["state", "count"])
    frame.to_csv(path, index=False, lineterminator="\n")


def write_comparison_csv(frame: pd.DataFrame, path: str) -> None:
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
