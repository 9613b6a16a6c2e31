import numpy as np
import pandas as pd
import pytest

from nilmkit.behavior import (
    SECONDS_PER_DAY,
    compare_homes,
    period_for_days,
    power_summary,
    transient_histogram,
    write_histogram_csv,
)
from nilmkit.errors import DataError
from nilmkit.ingest import TimeSeries


def series(values, start=1000, step=10):
    values = np.asarray(values, dtype=float)
    return TimeSeries(start + step * np.arange(len(values)), values)


def test_transient_buckets():
    # differences 2, 5, -7, 20, -30, 0
    histogram = transient_histogram([10, 12, 17, 10, 30, 0, 0])
    assert histogram.counts == {
        "stable": 2,
        "minor_increase": 1,
        "minor_decrease": 1,
        "large_increase": 1,
        "large_decrease": 1,
    }
    assert histogram.out_of_range == 0
    assert histogram.total == 6


def test_transient_boundaries():
    histogram = transient_histogram([0, 3, 13, 63, 13])
    assert histogram.counts["minor_increase"] == 1
    assert histogram.counts["large_increase"] == 1
    assert histogram.out_of_range == 2


def test_transient_needs_two_readings():
    with pytest.raises(DataError):
        transient_histogram([5.0])


def test_power_summary_half_open_period():
    s = series([1.0, 5.0, 3.0, 100.0])
    summary = power_summary(s, (1000, 1030), "fridge", "1")
    assert summary.max_watts == 5.0
    assert summary.mean_watts == pytest.approx(3.0)
    assert summary.samples == 3


def test_power_summary_empty_period():
    with pytest.raises(DataError):
        power_summary(series([1.0, 2.0]), (5000, 6000))
    with pytest.raises(DataError):
        power_summary(series([1.0, 2.0]), (1000, 1000))


def test_period_for_days():
    assert period_for_days(series([1.0]), 2) == (1000, 1000 + 2 * SECONDS_PER_DAY)


def test_compare_homes():
    frame = compare_homes([("1", series([0, 5, 50, 50])), ("2", series([10, 10]))], "fridge", days=1)
    assert frame["house"].tolist() == ["1", "2"]
    assert frame["max_watts"].tolist() == [50.0, 10.0]
    assert frame.loc[0, "large_increase"] == 1
    assert frame.loc[0, "out_of_range"] == 0
    assert frame.loc[1, "stable"] == 1


def test_histogram_csv(tmp_path):
    path = str(tmp_path / "h.csv")
    write_histogram_csv(transient_histogram([0, 1, 60]), path)
    frame = pd.read_csv(path)
    assert frame["state"].tolist()[-1] == "out_of_range"
    assert frame["count"].sum() == 2
