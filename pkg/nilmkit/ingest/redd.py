"""
REDD low-frequency house directories: one `channel_<n>.dat` per meter with
whitespace-separated "timestamp value" lines, plus `labels.dat` mapping
channel numbers to names.
"""

import logging
import math
import os
import re
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from nilmkit.errors import ParseError
from nilmkit.ingest.timeseries import ParseReport, TimeSeries

logger = logging.getLogger(__name__)

LABELS_FILE = "labels.dat"
CHANNEL_PATTERN = re.compile(r"^channel_(\d+)\.dat$")


@dataclass
class ReddHouse:
    """Parsed channels of one house."""

    channels: Dict[int, TimeSeries]
    labels: Dict[int, str]
    report: ParseReport


def parse_labels(path: str) -> Dict[int, str]:
    """Read "channel name" lines."""
    labels: Dict[int, str] = {}
    with open(path, "r") as f:
        for number, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 2 or not parts[0].isdigit():
                raise ParseError(f"bad labels line {line.strip()!r}", path, number)
            labels[int(parts[0])] = "_".join(parts[1:])
    return labels


def parse_channel_file(path: str) -> Tuple[TimeSeries, int, List[int]]:
    """Parse one channel file; returns the series, lines read, and skipped line numbers."""
    timestamps: List[int] = []
    values: List[float] = []
    skipped: List[int] = []
    read = 0
    with open(path, "r") as f:
        for number, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            read += 1
            if len(parts) != 2:
                skipped.append(number)
                continue
            try:
                stamp = float(parts[0])
                watts = float(parts[1])
            except ValueError:
                skipped.append(number)
                continue
            if not (math.isfinite(stamp) and math.isfinite(watts)) or watts < 0:
                skipped.append(number)
                continue
            second = int(math.floor(stamp))
            if timestamps and second <= timestamps[-1]:
                raise ParseError(
                    f"timestamp {second} is not after {timestamps[-1]}", path, number
                )
            timestamps.append(second)
            values.append(watts)
    return TimeSeries(np.array(timestamps, dtype=np.int64), np.array(values)), read, skipped


def parse_redd_house(house_dir: str) -> ReddHouse:
    """Parse every channel file of a REDD house directory."""
    labels_path = os.path.join(house_dir, LABELS_FILE)
    if not os.path.isfile(labels_path):
        raise ParseError("missing labels file", labels_path)
    labels = parse_labels(labels_path)

    report = ParseReport()
    channels: Dict[int, TimeSeries] = {}
    for filename in sorted(os.listdir(house_dir)):
        match = CHANNEL_PATTERN.match(filename)
        if not match:
            continue
        channel = int(match.group(1))
        series, read, skipped = parse_channel_file(os.path.join(house_dir, filename))
        report.record(filename, read, skipped)
        if len(series) == 0:
            message = f"{filename}: empty channel"
            report.warnings.append(message)
            logger.warning(message)
        if skipped:
            logger.warning("%s: skipped %d malformed line(s), first at line %d",
                           filename, len(skipped), skipped[0])
        channels[channel] = series

    for channel in sorted(set(labels) - set(channels)):
        message = f"label for channel {channel} has no channel file"
        report.warnings.append(message)
        logger.warning(message)
    logger.info("parsed %s: %s", house_dir, report.summary())
    return ReddHouse(channels=channels, labels=labels, report=report)
