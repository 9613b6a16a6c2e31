import numpy as np
import pytest

from nilmkit.errors import ConfigError, DataError, ShapeError
from nilmkit.windowing import (
    WindowConfig,
    build_windows,
    cache_key,
    extract_targets,
    load_window_cache,
    mid_index,
    save_window_cache,
    shuffle_windows,
    window_count,
)


def test_three_windows_from_1070_samples():
    agg = np.arange(1070, dtype=float)
    batch = build_windows(agg, agg * 2, WindowConfig(length=1000, offset=35))
    assert len(batch) == 3
    np.testing.assert_array_equal(batch.starts, [0, 35, 70])
    np.testing.assert_array_equal(batch.inputs[1], agg[35:1035])
    np.testing.assert_array_equal(batch.targets[2], [140.0, 2 * (70 + 499), 2 * 1069])


def test_extract_targets_odd_window():
    assert extract_targets([1, 2, 3, 4, 5]) == (1.0, 3.0, 5.0)


def test_mid_index():
    assert mid_index(1000) == 499
    assert mid_index(5) == 2
    assert mid_index(1) == 0


def test_extract_targets_length_check():
    with pytest.raises(ShapeError):
        extract_targets([1, 2, 3], length=4)


def test_budget_caps_windows():
    config = WindowConfig(length=10, offset=1, budget=4)
    assert window_count(100, config) == 4
    assert len(build_windows(np.zeros(100), np.zeros(100), config)) == 4


def test_start_offset_respected():
    config = WindowConfig(length=5, offset=3, start=2)
    batch = build_windows(np.arange(20.0), np.arange(20.0), config)
    np.testing.assert_array_equal(batch.starts, [2, 5, 8, 11, 14])
    assert batch.starts[-1] + config.length <= 20


def test_series_shorter_than_window():
    with pytest.raises(DataError):
        build_windows(np.zeros(999), np.zeros(999), WindowConfig())


def test_length_mismatch():
    with pytest.raises(ShapeError):
        build_windows(np.zeros(20), np.zeros(19), WindowConfig(length=5))


def test_invalid_config():
    with pytest.raises(ConfigError):
        WindowConfig(offset=0)


def test_shuffle_keeps_rows_aligned():
    agg = np.arange(200.0)
    batch = build_windows(agg, agg, WindowConfig(length=10, offset=7))
    shuffled = shuffle_windows(batch, seed=3)
    assert sorted(shuffled.starts) == list(batch.starts)
    np.testing.assert_array_equal(shuffled.inputs[:, 0], shuffled.starts)
    np.testing.assert_array_equal(shuffled.targets[:, 0], shuffled.starts)


def test_window_cache(tmp_path):
    agg = np.sin(np.arange(300.0))
    app = np.abs(agg)
    config = WindowConfig(length=20, offset=9)
    batch = build_windows(agg, app, config)
    key = cache_key(config, agg, app)
    path = str(tmp_path / "w.cache")
    save_window_cache(batch, key, path)
    loaded = load_window_cache(path, key)
    np.testing.assert_array_equal(loaded.inputs, batch.inputs)
    np.testing.assert_array_equal(loaded.targets, batch.targets)
    np.testing.assert_array_equal(loaded.starts, batch.starts)

    other = cache_key(WindowConfig(length=20, offset=10), agg, app)
    assert other != key
    assert load_window_cache(path, other) is None
    assert load_window_cache(str(tmp_path / "missing"), key) is None
