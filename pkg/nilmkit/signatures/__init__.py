"""Wavelet, STFT and fused appliance signature images."""

from nilmkit.signatures.dataset import (
    SlidingConfig,
    SplitEntry,
    manifest_hash,
    read_manifest,
    sliding_spectrogram_dataset,
    split_train_test,
    write_manifest,
)
from nilmkit.signatures.images import (
    AugmentConfig,
    Provenance,
    SpectrogramImage,
    augment_image,
    crop_resize_pixels,
    fuse_images,
    load_png,
    normalize_matrix,
    render_image,
    rotate_pixels,
    save_png,
    shear_pixels,
)
from nilmkit.signatures.transforms import (
    CwtConfig,
    StftConfig,
    mexican_hat,
    mexican_hat_cwt,
    stft_spectrogram,
    wavelet_kernel,
)
