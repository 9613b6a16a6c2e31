"""
Mains/appliance synchronization and the two-column appliance pair files.

Reference timestamps come from the appliance channels, which must agree with
each other. Mains readings at other timestamps are dropped; reference
timestamps without a mains reading get 0.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from nilmkit.errors import DataError, ParseError, SyncError
from nilmkit.ingest.timeseries import TimeSeries

logger = logging.getLogger(__name__)

MAINS_LABEL = "mains"
CSV_FLOAT_FORMAT = "%.6f"


@dataclass(frozen=True)
class SyncedHouse:
    """Aligned table: timestamp, mains1, mains2 and N appliance columns."""

    timestamps: np.ndarray
    mains1: np.ndarray
    mains2: np.ndarray
    appliances: Dict[str, np.ndarray]
    labels: Dict[int, str] = field(default_factory=dict)
    gap_counts: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.timestamps)
        columns = {"mains1": self.mains1, "mains2": self.mains2, **self.appliances}
        for name, column in columns.items():
            if len(column) != n:
                raise DataError(f"column '{name}' has {len(column)} rows, expected {n}")
        for column in (self.timestamps, self.mains1, self.mains2, *self.appliances.values()):
            if isinstance(column, np.ndarray):
                column.setflags(write=False)

    @property
    def column_count(self) -> int:
        return 3 + len(self.appliances)

    @property
    def aggregate(self) -> np.ndarray:
        return self.mains1 + self.mains2

    def to_frame(self) -> pd.DataFrame:
        data = {"timestamp": self.timestamps, "mains1": self.mains1, "mains2": self.mains2}
        data.update(self.appliances)
        return pd.DataFrame(data)


@dataclass(frozen=True)
class AppliancePairFile:
    """Aggregate watts (mains1 + mains2) paired with one appliance."""

    appliance: str
    aggregate: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.aggregate) != len(self.values):
            raise DataError("pair file columns differ in length")

    def __len__(self) -> int:
        return len(self.aggregate)


def appliance_names(labels: Dict[int, str], channels: List[int]) -> Dict[int, str]:
    """Column names per appliance channel; repeated labels get a channel suffix."""
    counts: Dict[str, int] = {}
    for ch in channels:
        name = labels.get(ch, f"channel_{ch}")
        counts[name] = counts.get(name, 0) + 1
    names = {}
    for ch in channels:
        name = labels.get(ch, f"channel_{ch}")
        names[ch] = f"{name}_{ch}" if counts[name] > 1 else name
    return names


def _first_divergence(reference: np.ndarray, other: np.ndarray) -> Tuple[int, Optional[int], Optional[int]]:
    n = min(len(reference), len(other))
    diff = np.flatnonzero(reference[:n] != other[:n])
    index = int(diff[0]) if len(diff) else n
    ref = int(reference[index]) if index < len(reference) else None
    oth = int(other[index]) if index < len(other) else None
    return index, ref, oth


def synchronize_house(channels: Dict[int, TimeSeries], labels: Dict[int, str]) -> SyncedHouse:
    """Align mains channels to the shared appliance timestamps."""
    mains_channels = sorted(ch for ch in channels if labels.get(ch) == MAINS_LABEL)
    appliance_channels = sorted(ch for ch in channels if labels.get(ch) != MAINS_LABEL)
    if not appliance_channels:
        raise SyncError("at least one appliance channel is required")
    if len(mains_channels) > 2:
        raise SyncError(f"expected at most two mains channels, found {mains_channels}")

    reference = channels[appliance_channels[0]].timestamps
    for ch in appliance_channels[1:]:
        other = channels[ch].timestamps
        if len(other) != len(reference) or not np.array_equal(other, reference):
            index, ref, oth = _first_divergence(reference, other)
            raise SyncError(
                f"channel {ch} diverges from channel {appliance_channels[0]} at row {index}: "
                f"{oth} vs {ref}"
            )

    mains_columns = []
    gap_counts: Dict[str, int] = {}
    for slot in range(2):
        name = f"mains{slot + 1}"
        column = np.zeros(len(reference), dtype=np.float64)
        if slot < len(mains_channels):
            mains = channels[mains_channels[slot]]
            found = np.zeros(len(reference), dtype=bool)
            clipped = np.zeros(len(reference), dtype=np.int64)
            if len(mains):
                position = np.searchsorted(mains.timestamps, reference)
                clipped = np.minimum(position, len(mains) - 1)
                found = (position < len(mains)) & (mains.timestamps[clipped] == reference)
            column[found] = mains.values[clipped[found]]
            gap_counts[name] = int(len(reference) - found.sum())
            dropped = len(mains) - int(found.sum())
            logger.info("%s: %d reference stamps without a reading, %d readings dropped",
                        name, gap_counts[name], dropped)
        else:
            gap_counts[name] = len(reference)
            logger.warning("no channel for %s; column is all zeros", name)
        mains_columns.append(column)

    names = appliance_names(labels, appliance_channels)
    appliances = {names[ch]: channels[ch].values.copy() for ch in appliance_channels}
    return SyncedHouse(
        timestamps=reference.copy(),
        mains1=mains_columns[0],
        mains2=mains_columns[1],
        appliances=appliances,
        labels=dict(labels),
        gap_counts=gap_counts,
    )


def build_appliance_pair_file(synced: SyncedHouse, appliance: str,
                              split_ratio: float = 0.8) -> Tuple[AppliancePairFile, AppliancePairFile]:
    """Chronological train/test pair files for one appliance."""
    if appliance not in synced.appliances:
        raise DataError(f"unknown appliance '{appliance}'; available: {sorted(synced.appliances)}")
    if not 0.0 < split_ratio < 1.0:
        raise DataError(f"split ratio must be in (0, 1), got {split_ratio}")
    aggregate = synced.mains1 + synced.mains2
    values = np.asarray(synced.appliances[appliance], dtype=np.float64)
    cut = int(round(len(aggregate) * split_ratio))
    train = AppliancePairFile(appliance, aggregate[:cut].copy(), values[:cut].copy())
    test = AppliancePairFile(appliance, aggregate[cut:].copy(), values[cut:].copy())
    return train, test


def write_pair_csv(pair: AppliancePairFile, path: str) -> None:
    """Write an "aggregate,appliance" CSV with 6-decimal values."""
    frame = pd.DataFrame({"aggregate": pair.aggregate, "appliance": pair.values})
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def read_pair_csv(path: str, appliance: str = "") -> AppliancePairFile:
    """Read a pair CSV written by `write_pair_csv`."""
    try:
        frame = pd.read_csv(path)
    except (FileNotFoundError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"cannot read pair file: {e}", path)
    if list(frame.columns[:2]) != ["aggregate", "appliance"]:
        raise ParseError("expected 'aggregate,appliance' header", path)
    if frame[["aggregate", "appliance"]].isna().any().any():
        raise ParseError("pair file has empty or non-numeric cells", path)
    return AppliancePairFile(appliance, frame["aggregate"].to_numpy(dtype=np.float64),
                             frame["appliance"].to_numpy(dtype=np.float64))


def write_synced_csv(synced: SyncedHouse, path: str) -> None:
    """Write the N+3 column house table."""
    synced.to_frame().to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
