import numpy as np
import pytest

from nilmkit.errors import ConfigError, DataError, ShapeError
from nilmkit.signatures import (
    AugmentConfig,
    CwtConfig,
    Provenance,
    SlidingConfig,
    SpectrogramImage,
    StftConfig,
    augment_image,
    crop_resize_pixels,
    fuse_images,
    load_png,
    manifest_hash,
    mexican_hat,
    mexican_hat_cwt,
    normalize_matrix,
    read_manifest,
    render_image,
    rotate_pixels,
    save_png,
    shear_pixels,
    sliding_spectrogram_dataset,
    split_train_test,
    stft_spectrogram,
    wavelet_kernel,
    write_manifest,
)
from nilmkit.signatures.dataset import slice_starts
from nilmkit.signatures.images import IMAGE_HEIGHT, IMAGE_WIDTH

SMALL_CWT = CwtConfig(1, 20)
PROV = Provenance("1", 5, 0)


def image(pixels, label="fridge", kind="wavelet", start=0):
    return SpectrogramImage(np.asarray(pixels, dtype=float), kind, label, Provenance("1", 5, start))


def random_image(rng, label="fridge", start=0):
    return image(rng.uniform(size=(IMAGE_HEIGHT, IMAGE_WIDTH)), label=label, start=start)


def step_signal(n=300):
    x = np.zeros(n)
    x[n // 3: 2 * n // 3] = 120.0
    return x + 2.0 * np.sin(np.arange(n) / 5.0)


# --- transforms ----------------------------------------------------------------

def test_mexican_hat_peak_and_zero_crossings():
    norm = 2.0 / (np.sqrt(3.0) * np.pi ** 0.25)
    assert mexican_hat(3, 1.0)[1] == pytest.approx(norm)
    np.testing.assert_allclose(mexican_hat(3, 1.0)[[0, 2]], 0.0, atol=1e-15)


def test_wavelet_kernel_sums_to_zero():
    for scale in (1, 3, 40):
        kernel = wavelet_kernel(scale)
        assert len(kernel) == 2 * int(5 * scale) + 1
        assert abs(kernel.sum()) < 1e-9


def test_wavelet_kernel_is_mean_shifted_mexican_hat():
    for scale in (2, 10, 40):
        kernel = wavelet_kernel(scale)
        samples = mexican_hat(len(kernel), float(scale))
        np.testing.assert_allclose(samples - kernel, samples.mean(), rtol=1e-9, atol=1e-15)
        assert abs(samples.mean()) < 1e-3 * samples.max()
        t = (np.arange(len(kernel)) - len(kernel) // 2) / scale
        interior = np.abs(t) <= 3.0
        np.testing.assert_allclose(kernel[interior] + samples.mean(), samples[interior], atol=1e-12)


def test_cwt_shape():
    assert mexican_hat_cwt(step_signal(120), SMALL_CWT).shape == (20, 120)


def test_cwt_of_constant_is_zero():
    coefficients = mexican_hat_cwt(np.full(80, 37.0), SMALL_CWT)
    np.testing.assert_allclose(coefficients, 0.0, atol=1e-8)


def test_cwt_is_linear(rng):
    x, y = rng.normal(size=64), rng.normal(size=64)
    lhs = mexican_hat_cwt(2.0 * x - 3.0 * y, SMALL_CWT)
    rhs = 2.0 * mexican_hat_cwt(x, SMALL_CWT) - 3.0 * mexican_hat_cwt(y, SMALL_CWT)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_cwt_impulse_matches_direct_convolution():
    x = np.zeros(64)
    x[32] = 1.0
    coefficients = mexican_hat_cwt(x, CwtConfig(1, 5))
    for row, scale in zip(coefficients, range(1, 6)):
        kernel = wavelet_kernel(scale)
        half = len(kernel) // 2
        expected = np.convolve(x, kernel, mode="full")[half:half + len(x)]
        np.testing.assert_allclose(row, expected, atol=1e-12)


def test_cwt_rejects_short_input():
    with pytest.raises(DataError):
        mexican_hat_cwt([1.0], SMALL_CWT)


@pytest.mark.parametrize("low,high", [(0, 10), (1, 501), (10, 5)])
def test_cwt_scale_range(low, high):
    with pytest.raises(ConfigError):
        CwtConfig(low, high)


def test_stft_shape():
    assert stft_spectrogram(np.ones(200), StftConfig(64, 32)).shape == (33, 5)


def test_stft_parseval_rectangular(rng):
    x = rng.normal(size=64)
    spectrum = stft_spectrogram(x, StftConfig(64, 64, "rectangular"))[:, 0]
    energy = (spectrum[0] ** 2 + 2.0 * np.sum(spectrum[1:-1] ** 2) + spectrum[-1] ** 2) / 64
    assert energy == pytest.approx(np.sum(x * x))


def test_stft_errors():
    with pytest.raises(DataError):
        stft_spectrogram(np.ones(10), StftConfig(64, 32))
    with pytest.raises(ConfigError):
        stft_spectrogram(np.ones(100), StftConfig(64, 32, "no-such-window"))
    with pytest.raises(ConfigError):
        StftConfig(64, 65)


# --- images --------------------------------------------------------------------

def test_normalize_matrix():
    np.testing.assert_allclose(normalize_matrix([[1.0, 3.0], [5.0, 2.0]]), [[0.0, 0.5], [1.0, 0.25]])
    np.testing.assert_array_equal(normalize_matrix(np.full((3, 4), 7.0)), 0.5)
    with pytest.raises(DataError):
        normalize_matrix([[np.nan, 1.0]])


def test_render_image_size_and_range():
    rendered = render_image(mexican_hat_cwt(step_signal(), SMALL_CWT), "wavelet", "fridge", PROV)
    assert rendered.shape == (34, 56)
    assert rendered.pixels.min() >= 0.0 and rendered.pixels.max() <= 1.0
    assert rendered.identifier == "fridge_h1_c5_s0_wavelet"


def test_render_preserves_corners():
    matrix = np.zeros((10, 20))
    matrix[0, 0], matrix[-1, -1] = 1.0, 0.5
    pixels = render_image(matrix, "stft", "x", PROV, 34, 56).pixels
    assert pixels[0, 0] == pytest.approx(1.0)
    assert pixels[-1, -1] == pytest.approx(0.5)


def test_fusion_with_zero_image_is_identity(rng):
    a = random_image(rng)
    zero = image(np.zeros(a.shape), kind="stft")
    fused = fuse_images(a, zero)
    assert fused.kind == "fused"
    np.testing.assert_array_equal(fused.pixels, a.pixels)


def test_fusion_is_commutative_and_clamped(rng):
    a, b = random_image(rng), image(rng.uniform(size=(34, 56)), kind="stft")
    np.testing.assert_array_equal(fuse_images(a, b).pixels, fuse_images(b, a).pixels)
    assert fuse_images(a, b).pixels.max() <= 1.0
    ones = image(np.ones((34, 56)), kind="stft")
    np.testing.assert_array_equal(fuse_images(a, ones).pixels, 1.0)


def test_fusion_mismatch():
    with pytest.raises(ShapeError):
        fuse_images(image(np.zeros((34, 56))), image(np.zeros((30, 56)), kind="stft"))
    with pytest.raises(DataError):
        fuse_images(image(np.zeros((34, 56))), image(np.zeros((34, 56)), label="kettle", kind="stft"))


def test_rotation_identities(rng):
    pixels = rng.uniform(size=(34, 56))
    np.testing.assert_array_equal(rotate_pixels(pixels, 0.0), pixels)
    np.testing.assert_array_equal(rotate_pixels(rotate_pixels(pixels, 180.0), 180.0), pixels)
    np.testing.assert_array_equal(rotate_pixels(pixels, 180.0), pixels[::-1, ::-1])


def test_shear_zero_and_full_frame_crop(rng):
    pixels = rng.uniform(size=(34, 56))
    np.testing.assert_array_equal(shear_pixels(pixels, 0.0), pixels)
    np.testing.assert_array_equal(crop_resize_pixels(pixels, (0, 0, 34, 56)), pixels)


def test_crop_rejects_degenerate_box(rng):
    with pytest.raises(DataError):
        crop_resize_pixels(rng.uniform(size=(34, 56)), (30, 0, 10, 56))


def test_augment_records_ancestry(rng):
    original = random_image(rng)
    rotated = augment_image(original, "rotate", seed=3)
    assert not rotated.original
    assert rotated.ancestor == original.identifier
    assert rotated.identifier.startswith(original.identifier + "_rot")
    sheared = augment_image(rotated, "shear", seed=4)
    assert sheared.root == original.identifier
    assert sheared.pixels.min() >= 0.0 and sheared.pixels.max() <= 1.0


def test_augment_is_seeded(rng):
    original = random_image(rng)
    a = augment_image(original, "crop", seed=11)
    b = augment_image(original, "crop", seed=11)
    np.testing.assert_array_equal(a.pixels, b.pixels)
    assert a.shape == original.shape


def test_augment_range_checks(rng):
    original = random_image(rng)
    with pytest.raises(ConfigError):
        augment_image(original, "rotate", seed=0, parameter=30.0)
    with pytest.raises(ConfigError):
        augment_image(original, "shear", seed=0, parameter=0.5)
    with pytest.raises(ConfigError):
        augment_image(original, "crop", seed=0, parameter=(0, 0, 20, 56))
    with pytest.raises(ConfigError):
        augment_image(original, "flip", seed=0)
    kept = augment_image(original, "crop", seed=0, parameter=(0, 0, 34, 56))
    np.testing.assert_array_equal(kept.pixels, original.pixels)


def test_png_round_trip(tmp_path, rng):
    pixels = rng.uniform(size=(34, 56))
    path = str(tmp_path / "img.png")
    save_png(pixels, path)
    np.testing.assert_allclose(load_png(path), pixels, atol=0.5 / 255.0 + 1e-12)


# --- datasets ------------------------------------------------------------------

def test_slice_starts_example():
    config = SlidingConfig(max_points=100, offset=50, max_iterations=10)
    assert slice_starts(250, config) == [0, 50, 100, 150]
    assert slice_starts(250, SlidingConfig(100, 50, 2)) == [0, 50]


def test_sliding_dataset_counts_and_provenance():
    config = SlidingConfig(max_points=100, offset=50, max_iterations=10)
    images = sliding_spectrogram_dataset(step_signal(250), "fridge", "1", 5, config, "fused", cwt=SMALL_CWT)
    assert len(images) == 4
    assert [img.provenance.start for img in images] == [0, 50, 100, 150]
    assert all(img.kind == "fused" and img.shape == (34, 56) for img in images)


def test_sliding_dataset_too_short():
    with pytest.raises(DataError):
        sliding_spectrogram_dataset(np.ones(50), "fridge", "1", 5, SlidingConfig(100, 50, 10), "stft")


def test_split_is_balanced_without_shared_ancestors(rng):
    images = [random_image(rng, "fridge", start=i) for i in range(4)]
    images += [random_image(rng, "kettle", start=i) for i in range(12)]
    entries = split_train_test(images, train_per_class=6, test_per_class=3, seed=0,
                               max_augmented_fraction=1.0)
    for label in ("fridge", "kettle"):
        train = [e.image for e in entries if e.split == "train" and e.image.label == label]
        test = [e.image for e in entries if e.split == "test" and e.image.label == label]
        assert len(train) == 6 and len(test) == 3
        assert not {img.root for img in train} & {img.root for img in test}
    ids = [e.image.identifier for e in entries]
    assert len(ids) == len(set(ids))
    kettles = [e.image for e in entries if e.image.label == "kettle"]
    assert all(img.original for img in kettles)


def test_split_is_deterministic(rng):
    images = [random_image(rng, "fridge", start=i) for i in range(3)]
    a = split_train_test(images, 4, 2, seed=5, max_augmented_fraction=1.0)
    b = split_train_test(images, 4, 2, seed=5, max_augmented_fraction=1.0)
    assert [(e.image.identifier, e.split) for e in a] == [(e.image.identifier, e.split) for e in b]
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.image.pixels, y.image.pixels)


def test_split_needs_two_originals(rng):
    with pytest.raises(DataError):
        split_train_test([random_image(rng)], 2, 1, seed=0)


def test_split_limits_augmented_share(rng):
    images = [random_image(rng, "fridge", start=i) for i in range(4)]
    with pytest.raises(DataError, match="augmented"):
        split_train_test(images, 6, 3, seed=0)
    with pytest.raises(ConfigError):
        split_train_test(images, 6, 3, seed=0, max_augmented_fraction=1.5)


def test_split_keeps_originals_in_the_majority(rng):
    images = [random_image(rng, "fridge", start=i) for i in range(7)]
    entries = split_train_test(images, 6, 2, seed=0)
    train = [e.image for e in entries if e.split == "train"]
    test = [e.image for e in entries if e.split == "test"]
    assert len(train) == 6 and len(test) == 2
    assert sum(not img.original for img in train) == 1
    assert all(img.original for img in test)


def test_manifest_round_trip(tmp_path, rng):
    images = [random_image(rng, "fridge", start=i) for i in range(3)]
    entries = split_train_test(images, 3, 1, seed=1, augment=AugmentConfig(),
                               max_augmented_fraction=0.5)
    path = write_manifest(entries, str(tmp_path))
    frame = read_manifest(path)
    assert list(frame.columns) == ["path", "class", "kind", "house", "channel", "start",
                                   "original", "ancestor", "split"]
    assert len(frame) == 4
    assert sorted(set(frame["split"])) == ["test", "train"]
    assert all(p.startswith(("train/fridge/", "test/fridge/")) for p in frame["path"])
    first = manifest_hash(path)
    assert manifest_hash(write_manifest(entries, str(tmp_path))) == first
