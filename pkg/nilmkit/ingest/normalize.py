"""Z-normalization with population statistics and its exact inverse."""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from nilmkit.errors import DataError, ParseError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormStats:
    """Mean and population standard deviation in watts."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.sigma)):
            raise DataError("normalization statistics must be finite")
        if self.sigma <= 0:
            raise DataError(f"sigma must be positive, got {self.sigma}")


def compute_norm_stats(series) -> NormStats:
    """Mean and population (divide by n) standard deviation."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise DataError("normalization needs a 1D series of at least two values")
    if not np.all(np.isfinite(x)):
        raise DataError("series contains non-finite values")
    sigma = float(np.std(x))
    if sigma == 0.0:
        raise DataError("constant series cannot be normalized (sigma = 0)")
    return NormStats(mu=float(np.mean(x)), sigma=sigma)


def normalize(series, stats: NormStats) -> np.ndarray:
    """Z = (X - mu) / sigma."""
    return (np.asarray(series, dtype=np.float64) - stats.mu) / stats.sigma


def denormalize(series, stats: NormStats) -> np.ndarray:
    """X = Z * sigma + mu."""
    return np.asarray(series, dtype=np.float64) * stats.sigma + stats.mu


def write_norm_stats(stats: NormStats, path: str) -> None:
    """Write the "mu,sigma" sidecar at full precision."""
    frame = pd.DataFrame([{"mu": stats.mu, "sigma": stats.sigma}])
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def read_norm_stats(path: str) -> NormStats:
    """Read a "mu,sigma" sidecar."""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError:
        raise ParseError("normalization stats file not found", path)
    if list(frame.columns) != ["mu", "sigma"] or len(frame) != 1:
        raise ParseError("expected a single 'mu,sigma' row", path)
    return NormStats(mu=float(frame["mu"].iloc[0]), sigma=float(frame["sigma"].iloc[0]))
