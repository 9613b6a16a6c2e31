"""
Signature datasets: slide a window over one channel, transform and render each
slice, then build a class-balanced train/test split stored as PNG files and a
CSV manifest.
"""

import hashlib
import logging
import os
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from nilmkit.errors import ConfigError, DataError
from nilmkit.signatures.images import (
    AUGMENT_OPS,
    IMAGE_HEIGHT,
    IMAGE_KINDS,
    IMAGE_WIDTH,
    AugmentConfig,
    Provenance,
    SpectrogramImage,
    augment_image,
    fuse_images,
    render_image,
    save_png,
)
from nilmkit.signatures.transforms import CwtConfig, StftConfig, mexican_hat_cwt, stft_spectrogram

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.csv"
MANIFEST_COLUMNS = ["path", "class", "kind", "house", "channel", "start", "original", "ancestor", "split"]
SPLITS = ("train", "test")
# augmented images may make up at most this share of a class on either side
MAX_AUGMENTED_FRACTION = 0.25


@dataclass(frozen=True)
class SlidingConfig:
    """Max_r points per slice, D_o offset between slices, It_m iterations at most."""

    max_points: int = 300
    offset: int = 150
    max_iterations: int = 1000

    def __post_init__(self):
        if self.max_points < 2:
            raise ConfigError("max_points must be >= 2")
        if not 1 <= self.offset <= self.max_points:
            raise ConfigError(f"offset must be in [1, {self.max_points}], got {self.offset}")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")


def slice_starts(length: int, config: SlidingConfig) -> List[int]:
    starts = []
    start = 0
    while len(starts) < config.max_iterations and start + config.max_points <= length:
        starts.append(start)
        start += config.offset
    return starts


def sliding_spectrogram_dataset(readings, label: str, house: str, channel: int,
                                config: SlidingConfig, kind: str,
                                cwt: Optional[CwtConfig] = None, stft: Optional[StftConfig] = None,
                                height: int = IMAGE_HEIGHT, width: int = IMAGE_WIDTH) -> List[SpectrogramImage]:
    """Render one image per slice [S_p, S_p + Max_r) of a channel's readings."""
    if kind not in IMAGE_KINDS:
        raise ConfigError(f"unknown transform '{kind}', expected one of {IMAGE_KINDS}")
    values = np.asarray(readings, dtype=np.float64)
    if len(values) < config.max_points:
        raise DataError(f"channel {channel} of house {house} has {len(values)} readings, "
                        f"fewer than one {config.max_points}-point slice")
    cwt = cwt or CwtConfig()
    stft = stft or StftConfig()
    images = []
    for start in slice_starts(len(values), config):
        window = values[start:start + config.max_points]
        provenance = Provenance(str(house), int(channel), int(start))
        rendered = {}
        if kind in ("wavelet", "fused"):
            rendered["wavelet"] = render_image(mexican_hat_cwt(window, cwt), "wavelet", label,
                                               provenance, height, width)
        if kind in ("stft", "fused"):
            rendered["stft"] = render_image(stft_spectrogram(window, stft), "stft", label,
                                            provenance, height, width)
        if kind == "fused":
            images.append(fuse_images(rendered["wavelet"], rendered["stft"]))
        else:
            images.append(rendered[kind])
    logger.info("%s: %d %s image(s) from house %s channel %d", label, len(images), kind, house, channel)
    return images


@dataclass(frozen=True)
class SplitEntry:
    image: SpectrogramImage
    split: str


def _augmented(originals: List[SpectrogramImage], count: int, rng: np.random.Generator,
               config: AugmentConfig) -> List[SpectrogramImage]:
    """`count` augmentations cycling over the originals and the three ops."""
    out = []
    for k in range(count):
        source = originals[k % len(originals)]
        op = AUGMENT_OPS[(k // len(originals)) % len(AUGMENT_OPS)]
        image = augment_image(source, op, int(rng.integers(0, 2 ** 31 - 1)), config)
        out.append(replace(image, augmentation=f"{image.augmentation}_n{k}"))
    return out


def split_train_test(images: Sequence[SpectrogramImage], train_per_class: int, test_per_class: int,
                     seed: int, augment: Optional[AugmentConfig] = None,
                     max_augmented_fraction: float = MAX_AUGMENTED_FRACTION) -> List[SplitEntry]:
    """
    Balanced split with exactly `train_per_class` / `test_per_class` images per
    class. Originals are divided between the sides first, then each side's
    shortfall is filled with augmentations of its own originals, so no
    original and its descendants straddle the split.

    A class whose augmented share on either side would exceed
    `max_augmented_fraction` raises DataError instead of being padded out.
    """
    if train_per_class < 1 or test_per_class < 1:
        raise ConfigError("per-class train and test counts must be >= 1")
    if not 0.0 <= max_augmented_fraction <= 1.0:
        raise ConfigError(f"max_augmented_fraction must lie in [0, 1], got {max_augmented_fraction}")
    augment = augment or AugmentConfig()
    by_class: Dict[str, List[SpectrogramImage]] = {}
    for image in images:
        by_class.setdefault(image.label, []).append(image)
    if not by_class:
        raise DataError("no images to split")

    rng = np.random.default_rng(seed)
    needed = train_per_class + test_per_class
    entries: List[SplitEntry] = []
    for label in sorted(by_class):
        originals = sorted((img for img in by_class[label] if img.original), key=lambda img: img.identifier)
        if not originals:
            raise DataError(f"class '{label}' has no original images")
        order = rng.permutation(len(originals))
        originals = [originals[i] for i in order]
        if len(originals) >= needed:
            train, test = originals[:train_per_class], originals[train_per_class:needed]
        else:
            if len(originals) < 2:
                raise DataError(f"class '{label}' needs at least two originals to fill both splits "
                                f"without sharing ancestors, has {len(originals)}")
            n_test = int(round(len(originals) * test_per_class / needed))
            n_test = min(max(n_test, 1), test_per_class, len(originals) - 1)
            n_train = min(len(originals) - n_test, train_per_class)
            share = max(1.0 - n_train / train_per_class, 1.0 - n_test / test_per_class)
            if share > max_augmented_fraction:
                raise DataError(f"class '{label}' would be {100 * share:.0f}% augmented with {len(originals)} "
                                f"original(s); the limit is {100 * max_augmented_fraction:.0f}%. Lower the "
                                f"train/test totals or raise max_augmented_fraction")
            test = originals[:n_test]
            train = originals[n_test:n_test + n_train]
            train = train + _augmented(train, train_per_class - len(train), rng, augment)
            test = test + _augmented(test, test_per_class - len(test), rng, augment)
            logger.info("class %s: %d original(s), augmented %d train and %d test image(s)",
                        label, len(originals), train_per_class - n_train, test_per_class - n_test)
        entries.extend(SplitEntry(img, "train") for img in train)
        entries.extend(SplitEntry(img, "test") for img in test)
    return entries


def write_manifest(entries: Sequence[SplitEntry], out_dir: str, split: Optional[str] = None) -> str:
    """
    Save every image as PNG under `out_dir/<split>/<class>/` and write the CSV
    manifest. Images without a split (plain generation) go under `out_dir/images/`.
    """
    rows = []
    for entry in entries:
        image = entry.image
        part = entry.split or split or ""
        folder = os.path.join(out_dir, part or "images", image.label)
        os.makedirs(folder, exist_ok=True)
        rel = os.path.join(part or "images", image.label, image.identifier + ".png")
        save_png(image.pixels, os.path.join(out_dir, rel))
        rows.append({
            "path": rel.replace(os.sep, "/"),
            "class": image.label,
            "kind": image.kind,
            "house": image.provenance.house,
            "channel": image.provenance.channel,
            "start": image.provenance.start,
            "original": int(image.original),
            "ancestor": image.root,
            "split": part,
        })
    path = os.path.join(out_dir, MANIFEST_FILE)
    frame = pd.DataFrame(rows, columns=MANIFEST_COLUMNS).sort_values(["split", "class", "path"], kind="stable")
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info("manifest written: %s (%d image(s))", path, len(frame))
    return path


def read_manifest(path: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype={"class": str, "house": str, "ancestor": str, "split": str},
                            keep_default_na=False)
    except FileNotFoundError:
        raise DataError(f"manifest not found: {path}")
    missing = [c for c in MANIFEST_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"manifest {path} lacks column(s): {', '.join(missing)}")
    return frame


def manifest_hash(path: str) -> str:
    """SHA-256 over the manifest and every image it lists."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        digest.update(f.read())
    root = os.path.dirname(path)
    for rel in read_manifest(path)["path"]:
        with open(os.path.join(root, rel), "rb") as f:
            digest.update(f.read())
    return digest.hexdigest()
