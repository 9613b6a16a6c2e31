"""
Sliding windows over an aggregate series with 3-point appliance targets.

Windows start at S = start, start + offset, start + 2*offset, ... and stop when
the sample budget B is reached or the data runs out; they never wrap.
"""

import hashlib
import json
import logging
import os
import struct
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from nilmkit.errors import ConfigError, DataError, ShapeError

logger = logging.getLogger(__name__)

CACHE_MAGIC = b"NILMWIN\x00"
_CACHE_PREFIX = struct.Struct("<8s64sQQ")


@dataclass(frozen=True)
class WindowConfig:
    """S (start), L (length), B (budget) and offset; E = S + L."""

    length: int = 1000
    offset: int = 35
    budget: int = 20000
    start: int = 0

    def __post_init__(self):
        if self.length < 1:
            raise ConfigError("window length must be >= 1")
        if self.offset < 1:
            raise ConfigError("window offset must be >= 1")
        if self.budget < 1:
            raise ConfigError("window budget must be >= 1")
        if self.start < 0:
            raise ConfigError("window start must be >= 0")

    @property
    def end(self) -> int:
        return self.start + self.length

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()


@dataclass(frozen=True)
class WindowBatch:
    """inputs [n, L], targets [n, 3] (first, mid, last) and each row's start index."""

    inputs: np.ndarray
    targets: np.ndarray
    starts: np.ndarray

    def __post_init__(self):
        if not len(self.inputs) == len(self.targets) == len(self.starts):
            raise ShapeError("window batch rows are not aligned", "rows", len(self.inputs), len(self.targets))

    def __len__(self) -> int:
        return len(self.inputs)


def mid_index(length: int) -> int:
    """Midpoint index floor((L - 1) / 2)."""
    return (length - 1) // 2


def target_indices(length: int) -> Tuple[int, int, int]:
    return 0, mid_index(length), length - 1


def extract_targets(window, length: Optional[int] = None) -> Tuple[float, float, float]:
    """First, mid and last value of an appliance window."""
    w = np.asarray(window, dtype=np.float64)
    if w.ndim != 1 or len(w) == 0:
        raise ShapeError("appliance window must be a non-empty 1D array", "rank", 1, w.ndim)
    if length is not None and len(w) != length:
        raise ShapeError("appliance window", "length", length, len(w))
    first, mid, last = target_indices(len(w))
    return float(w[first]), float(w[mid]), float(w[last])


def window_count(data_length: int, config: WindowConfig) -> int:
    """min(B, floor((n - S - L) / offset) + 1), or 0 when the data is too short."""
    usable = data_length - config.start - config.length
    if usable < 0:
        return 0
    return min(config.budget, usable // config.offset + 1)


def window_starts(data_length: int, config: WindowConfig) -> np.ndarray:
    count = window_count(data_length, config)
    return config.start + config.offset * np.arange(count, dtype=np.int64)


def build_windows(aggregate, appliance, config: WindowConfig) -> WindowBatch:
    """Slice aggregate windows and their 3-point appliance targets."""
    agg = np.asarray(aggregate, dtype=np.float64)
    app = np.asarray(appliance, dtype=np.float64)
    if agg.shape != app.shape or agg.ndim != 1:
        raise ShapeError("aggregate and appliance must be equal-length 1D series", "length",
                         len(agg), len(app))
    if len(agg) < config.start + config.length:
        raise DataError(f"series of {len(agg)} samples is shorter than one window "
                        f"(start {config.start} + length {config.length})")
    starts = window_starts(len(agg), config)
    inputs = sliding_window_view(agg, config.length)[starts].copy()
    picks = starts[:, None] + np.asarray(target_indices(config.length))[None, :]
    targets = app[picks]
    if len(starts) < config.budget:
        logger.info("data exhausted after %d of %d windows", len(starts), config.budget)
    return WindowBatch(inputs=inputs, targets=targets, starts=starts)


def shuffle_windows(batch: WindowBatch, seed: int) -> WindowBatch:
    """Seeded permutation of the rows."""
    order = np.random.default_rng(seed).permutation(len(batch))
    return WindowBatch(batch.inputs[order], batch.targets[order], batch.starts[order])


def cache_key(config: WindowConfig, aggregate, appliance) -> str:
    """Hash of the window config and the source series."""
    digest = hashlib.sha256(config.config_hash().encode())
    digest.update(np.ascontiguousarray(aggregate, dtype="<f8").tobytes())
    digest.update(np.ascontiguousarray(appliance, dtype="<f8").tobytes())
    return digest.hexdigest()


def save_window_cache(batch: WindowBatch, key: str, path: str) -> None:
    """Write a window cache file tagged with `key`."""
    rows, length = batch.inputs.shape
    with open(path, "wb") as f:
        f.write(_CACHE_PREFIX.pack(CACHE_MAGIC, key.encode("ascii"), rows, length))
        f.write(np.ascontiguousarray(batch.inputs, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(batch.targets, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(batch.starts, dtype="<i8").tobytes())


def load_window_cache(path: str, key: str) -> Optional[WindowBatch]:
    """Load a cache file; None when absent, corrupt, or built for another key."""
    if not os.path.isfile(path):
        return None
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _CACHE_PREFIX.size:
        return None
    magic, stored_key, rows, length = _CACHE_PREFIX.unpack_from(data, 0)
    if magic != CACHE_MAGIC or stored_key.decode("ascii") != key:
        logger.info("window cache %s is stale; rebuilding", path)
        return None
    expected = _CACHE_PREFIX.size + 8 * (rows * length + rows * 3 + rows)
    if len(data) != expected:
        logger.warning("window cache %s has the wrong size; rebuilding", path)
        return None
    offset = _CACHE_PREFIX.size
    inputs = np.frombuffer(data, "<f8", rows * length, offset).reshape(rows, length).astype(np.float64)
    offset += 8 * rows * length
    targets = np.frombuffer(data, "<f8", rows * 3, offset).reshape(rows, 3).astype(np.float64)
    offset += 8 * rows * 3
    starts = np.frombuffer(data, "<i8", rows, offset).astype(np.int64)
    return WindowBatch(inputs, targets, starts)
