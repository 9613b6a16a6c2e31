"""
Mexican-hat continuous wavelet transform and STFT magnitude spectrogram of
one window of appliance readings.
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import fftconvolve, get_window

from nilmkit.errors import ConfigError, DataError

logger = logging.getLogger(__name__)

SCALE_LIMITS = (1, 500)
# kernels are cut off at |t| <= TRUNCATION
TRUNCATION = 5.0
_MEXICAN_HAT_NORM = 2.0 / (np.sqrt(3.0) * np.pi ** 0.25)
_WINDOW_ALIASES = {"rectangular": "boxcar", "rect": "boxcar", "none": "boxcar"}


@dataclass(frozen=True)
class CwtConfig:
    """Inclusive integer scale range with a Mexican-hat mother wavelet."""

    scale_min: int = 1
    scale_max: int = 500

    def __post_init__(self):
        lo, hi = SCALE_LIMITS
        if not lo <= self.scale_min <= self.scale_max <= hi:
            raise ConfigError(f"scale range must satisfy {lo} <= min <= max <= {hi}, "
                              f"got {self.scale_min}-{self.scale_max}")

    @property
    def scales(self) -> np.ndarray:
        return np.arange(self.scale_min, self.scale_max + 1)


@dataclass(frozen=True)
class StftConfig:
    segment: int = 64
    hop: int = 32
    window: str = "hann"

    def __post_init__(self):
        if self.segment < 2:
            raise ConfigError("STFT segment must be >= 2 points")
        if not 1 <= self.hop <= self.segment:
            raise ConfigError(f"STFT hop must be in [1, {self.segment}], got {self.hop}")

    def window_values(self) -> np.ndarray:
        name = _WINDOW_ALIASES.get(self.window.lower(), self.window.lower())
        try:
            return get_window(name, self.segment)
        except ValueError as e:
            raise ConfigError(f"unknown STFT window '{self.window}': {e}")


def mexican_hat_values(t) -> np.ndarray:
    """psi(t) = 2 / (sqrt(3) pi^(1/4)) (1 - t^2) exp(-t^2 / 2)."""
    t = np.asarray(t, dtype=np.float64)
    return _MEXICAN_HAT_NORM * (1.0 - t * t) * np.exp(-0.5 * t * t)


def mexican_hat(points: int, scale: float) -> np.ndarray:
    """Mother wavelet sampled at t = (n - center) / scale over `points` samples."""
    if points < 1 or scale <= 0:
        raise ConfigError("points must be >= 1 and scale positive")
    n = np.arange(points, dtype=np.float64)
    return mexican_hat_values((n - (points - 1) / 2.0) / scale)


def wavelet_kernel(scale: int) -> np.ndarray:
    """
    Discrete kernel for one scale: `mexican_hat` sampled on |t| <= 5, minus the
    mean of those samples. The subtraction makes the truncated kernel sum to
    zero, so every coefficient is shifted from the raw wavelet samples by the
    same small constant.
    """
    half = int(np.floor(TRUNCATION * scale))
    kernel = mexican_hat(2 * half + 1, scale)
    return kernel - kernel.mean()


def mexican_hat_cwt(window, config: CwtConfig) -> np.ndarray:
    """Coefficients [scales x time]; the window is edge-padded so each row keeps its length."""
    x = np.asarray(window, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise DataError("wavelet transform needs a 1D window of at least two points")
    if not np.all(np.isfinite(x)):
        raise DataError("window contains non-finite values")
    rows = np.empty((len(config.scales), len(x)), dtype=np.float64)
    for i, scale in enumerate(config.scales):
        kernel = wavelet_kernel(int(scale))
        half = len(kernel) // 2
        rows[i] = fftconvolve(np.pad(x, half, mode="edge"), kernel, mode="valid")
    return rows


def stft_frame_count(length: int, config: StftConfig) -> int:
    return 0 if length < config.segment else (length - config.segment) // config.hop + 1


def stft_spectrogram(window, config: StftConfig) -> np.ndarray:
    """One-sided DFT magnitudes [segment // 2 + 1 bins x frames] of windowed segments."""
    x = np.asarray(window, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("STFT input must be 1D")
    if len(x) < config.segment:
        raise DataError(f"window of {len(x)} points is shorter than one {config.segment}-point segment")
    segments = sliding_window_view(x, config.segment)[::config.hop]
    spectrum = np.fft.rfft(segments * config.window_values()[None, :], axis=1)
    return np.abs(spectrum).T
