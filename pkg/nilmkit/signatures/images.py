"""
Grayscale signature images: rendering transform matrices to a fixed H x W,
pixel-wise fusion, label-preserving augmentation and 8-bit PNG storage.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from PIL import Image
from scipy import ndimage

from nilmkit.errors import ConfigError, DataError, ShapeError

logger = logging.getLogger(__name__)

IMAGE_HEIGHT = 34
IMAGE_WIDTH = 56
IMAGE_KINDS = ("wavelet", "stft", "fused")
AUGMENT_OPS = ("rotate", "shear", "crop")


@dataclass(frozen=True)
class Provenance:
    """Where a slice came from: house, channel and start index S_p."""

    house: str
    channel: int
    start: int


@dataclass(frozen=True)
class SpectrogramImage:
    """Pixels in [0, 1]; augmented images keep their original's id as `ancestor`."""

    pixels: np.ndarray
    kind: str
    label: str
    provenance: Provenance
    original: bool = True
    ancestor: str = ""
    augmentation: str = ""

    def __post_init__(self):
        if self.kind not in IMAGE_KINDS:
            raise ConfigError(f"unknown image kind '{self.kind}', expected one of {IMAGE_KINDS}")
        p = np.asarray(self.pixels)
        if p.ndim != 2:
            raise ShapeError("image pixels must be 2D", "rank", 2, p.ndim)
        if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
            raise DataError("image pixels must lie in [0, 1]")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.pixels.shape

    @property
    def identifier(self) -> str:
        """Stable id: label, house, channel, start, kind and any augmentation."""
        p = self.provenance
        base = f"{self.label}_h{p.house}_c{p.channel}_s{p.start}_{self.kind}"
        return f"{base}_{self.augmentation}" if self.augmentation else base

    @property
    def root(self) -> str:
        """Id of the original this image descends from (itself for originals)."""
        return self.ancestor or self.identifier


def normalize_matrix(matrix) -> np.ndarray:
    """Min-max to [0, 1]; a constant matrix maps to 0.5 everywhere."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ShapeError("expected a non-empty 2D matrix", "rank", 2, m.ndim)
    if not np.all(np.isfinite(m)):
        raise DataError("matrix contains NaN or infinite entries")
    lo, hi = m.min(), m.max()
    if hi == lo:
        return np.full(m.shape, 0.5)
    return (m - lo) / (hi - lo)


def resample(pixels: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resample so the corner pixels map onto the corner pixels."""
    h_in, w_in = pixels.shape
    if (h_in, w_in) == (height, width):
        return pixels.copy()
    rows = np.linspace(0.0, h_in - 1, height)
    cols = np.linspace(0.0, w_in - 1, width)
    grid = np.meshgrid(rows, cols, indexing="ij")
    out = ndimage.map_coordinates(pixels, grid, order=1, mode="nearest")
    return np.clip(out, 0.0, 1.0)


def render_image(matrix, kind: str, label: str, provenance: Provenance,
                 height: int = IMAGE_HEIGHT, width: int = IMAGE_WIDTH) -> SpectrogramImage:
    """Normalize a transform matrix and resample it to height x width."""
    if height < 1 or width < 1:
        raise ConfigError("image size must be positive")
    pixels = resample(normalize_matrix(matrix), height, width)
    return SpectrogramImage(pixels, kind, label, provenance)


def fuse_images(wavelet_img: SpectrogramImage, stft_img: SpectrogramImage) -> SpectrogramImage:
    """Pixel-wise sum clamped to [0, 1]."""
    if wavelet_img.shape != stft_img.shape:
        raise ShapeError("fused images must share a size", "H x W", wavelet_img.shape, stft_img.shape)
    if wavelet_img.label != stft_img.label:
        raise DataError(f"cannot fuse '{wavelet_img.label}' with '{stft_img.label}'")
    pixels = np.clip(wavelet_img.pixels + stft_img.pixels, 0.0, 1.0)
    return SpectrogramImage(pixels, "fused", wavelet_img.label, wavelet_img.provenance,
                            original=wavelet_img.original and stft_img.original,
                            ancestor=wavelet_img.ancestor, augmentation=wavelet_img.augmentation)


# --- augmentation primitives (no range checks) ---------------------------------

def rotate_pixels(pixels: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate about the image center; uncovered pixels become 0."""
    turns = degrees / 180.0
    if float(turns).is_integer():
        return np.rot90(pixels, 2).copy() if int(turns) % 2 else pixels.copy()
    out = ndimage.rotate(pixels, degrees, reshape=False, order=1, mode="constant", cval=0.0)
    return np.clip(out, 0.0, 1.0)


def shear_pixels(pixels: np.ndarray, factor: float) -> np.ndarray:
    """Horizontal shear about the center row: out(r, c) = in(r, c + factor * (r - r0))."""
    if factor == 0:
        return pixels.copy()
    matrix = np.array([[1.0, 0.0], [factor, 1.0]])
    center = (np.array(pixels.shape, dtype=np.float64) - 1.0) / 2.0
    offset = center - matrix @ center
    out = ndimage.affine_transform(pixels, matrix, offset=offset, order=1, mode="constant", cval=0.0)
    return np.clip(out, 0.0, 1.0)


def crop_resize_pixels(pixels: np.ndarray, box: Tuple[int, int, int, int]) -> np.ndarray:
    """Crop (top, left, height, width) and resample back to the full frame."""
    top, left, h, w = (int(v) for v in box)
    height, width = pixels.shape
    if h < 2 or w < 2 or top < 0 or left < 0 or top + h > height or left + w > width:
        raise DataError(f"degenerate crop box {box} for a {height}x{width} image")
    if (top, left, h, w) == (0, 0, height, width):
        return pixels.copy()
    return resample(pixels[top:top + h, left:left + w], height, width)


@dataclass(frozen=True)
class AugmentConfig:
    rotation_range: Tuple[float, float] = (-15.0, 15.0)
    shear_range: Tuple[float, float] = (-0.2, 0.2)
    min_crop_fraction: float = 0.8

    def __post_init__(self):
        if self.rotation_range[0] > self.rotation_range[1] or self.shear_range[0] > self.shear_range[1]:
            raise ConfigError("augmentation ranges must be (low, high)")
        if not 0.0 < self.min_crop_fraction <= 1.0:
            raise ConfigError("min_crop_fraction must be in (0, 1]")


def _draw_crop(shape: Tuple[int, int], fraction: float, rng: np.random.Generator) -> Tuple[int, int, int, int]:
    height, width = shape
    h = max(2, int(round(height * fraction)))
    w = max(2, int(round(width * fraction)))
    top = int(rng.integers(0, height - h + 1))
    left = int(rng.integers(0, width - w + 1))
    return top, left, h, w


def augment_image(image: SpectrogramImage, op: str, seed: int,
                  config: Optional[AugmentConfig] = None, parameter=None) -> SpectrogramImage:
    """
    Apply one augmentation. `parameter` is the angle (degrees), shear factor,
    or crop box (top, left, height, width); when omitted it is drawn from the
    configured range with `seed`. Explicit values outside the range are rejected.
    """
    config = config or AugmentConfig()
    rng = np.random.default_rng(seed)
    if op == "rotate":
        lo, hi = config.rotation_range
        angle = float(rng.uniform(lo, hi)) if parameter is None else float(parameter)
        if not lo <= angle <= hi:
            raise ConfigError(f"rotation {angle} outside [{lo}, {hi}]")
        pixels, tag = rotate_pixels(image.pixels, angle), f"rot{angle:+.3f}"
    elif op == "shear":
        lo, hi = config.shear_range
        factor = float(rng.uniform(lo, hi)) if parameter is None else float(parameter)
        if not lo <= factor <= hi:
            raise ConfigError(f"shear {factor} outside [{lo}, {hi}]")
        pixels, tag = shear_pixels(image.pixels, factor), f"shear{factor:+.3f}"
    elif op == "crop":
        if parameter is None:
            fraction = float(rng.uniform(config.min_crop_fraction, 1.0))
            box = _draw_crop(image.shape, fraction, rng)
        else:
            box = tuple(int(v) for v in parameter)
        if len(box) != 4:
            raise DataError(f"crop box needs (top, left, height, width), got {box}")
        height, width = image.shape
        min_h = max(2, int(round(height * config.min_crop_fraction)))
        min_w = max(2, int(round(width * config.min_crop_fraction)))
        if box[2] < min_h or box[3] < min_w:
            raise ConfigError(f"crop box {box} keeps less than {config.min_crop_fraction:.0%} of the frame")
        pixels, tag = crop_resize_pixels(image.pixels, box), "crop{}x{}at{}-{}".format(box[2], box[3], box[0], box[1])
    else:
        raise ConfigError(f"unknown augmentation '{op}', expected one of {AUGMENT_OPS}")
    augmentation = f"{image.augmentation}+{tag}" if image.augmentation else tag
    return replace(image, pixels=pixels, original=False, ancestor=image.root, augmentation=augmentation)


# --- storage -------------------------------------------------------------------

def save_png(pixels: np.ndarray, path: str) -> None:
    """8-bit grayscale PNG; values are rounded from [0, 1] to 0..255."""
    data = np.round(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(data).save(path, format="PNG")


def load_png(path: str) -> np.ndarray:
    try:
        with Image.open(path) as img:
            data = np.asarray(img.convert("L"), dtype=np.float64)
    except (FileNotFoundError, OSError) as e:
        raise DataError(f"cannot read image {path}: {e}")
    return data / 255.0
