import json
import logging

import pytest

from nilmkit.config import RunConfig, SafeValue, load_config, save_config
from nilmkit.errors import ConfigError
from nilmkit.log import LOG_LEVEL_ENV, resolve_level


def test_defaults_fill_missing_blocks():
    config = RunConfig.from_dict({"seed": 7, "windows": {"offset": 50}})
    assert config.seed == 7
    assert config.block("windows") == {"length": 1000, "offset": 50, "budget": 20000}
    assert config.block("nilm")["hidden_units"] == 1300
    assert config.output_root == "out"


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="unknown config sections"):
        RunConfig.from_dict({"windws": {}})


def test_block_must_be_object():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"nilm": [1, 2]})


def test_safe_value_int():
    assert SafeValue.get_int({"a": "12"}, "a") == 12
    assert SafeValue.get_int({"a": 3.0}, "a") == 3
    assert SafeValue.get_int({}, "a", 5) == 5
    with pytest.raises(ConfigError):
        SafeValue.get_int({"a": 2.5}, "a")
    with pytest.raises(ConfigError):
        SafeValue.get_int({"a": "x"}, "a")


def test_safe_value_float_and_str():
    assert SafeValue.get_float({"lr": "0.01"}, "lr") == 0.01
    assert SafeValue.get_str({"s": "  hann "}, "s") == "hann"
    with pytest.raises(ConfigError):
        SafeValue.get_str({"s": 3}, "s")


def test_save_load_round_trip(tmp_path):
    path = tmp_path / "run.json"
    original = RunConfig.from_dict({"seed": 3, "behavior": {"days": 4}})
    save_config(str(path), original.to_dict())
    loaded = RunConfig.load(str(path))
    assert loaded.to_dict() == original.to_dict()
    assert loaded.config_hash() == original.config_hash()


def test_load_config_errors(tmp_path):
    assert load_config(None) == {}
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(str(bad))
    listed = tmp_path / "list.json"
    listed.write_text(json.dumps([1, 2]))
    with pytest.raises(ConfigError):
        load_config(str(listed))


def test_hash_changes_with_parameters():
    a = RunConfig.from_dict({})
    b = RunConfig.from_dict({"windows": {"offset": 36}})
    assert a.config_hash() != b.config_hash()


def test_override_ignores_none():
    config = RunConfig()
    config.override("nilm", "epochs", None)
    assert config.block("nilm")["epochs"] == 50
    config.override("nilm", "epochs", 2)
    assert config.block("nilm")["epochs"] == 2


@pytest.mark.parametrize("data", [
    {"ingest": {"split_ratio": 1.0}},
    {"windows": {"offset": 0}},
    {"classify": {"learning_rate": 0}},
    {"signatures": {"max_augmented_fraction": 1.5}},
    {"seed": -1},
])
def test_validate_rejects(data):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(data).validate()


def test_validate_missing_data_root(tmp_path):
    config = RunConfig.from_dict({"paths": {"data_root": str(tmp_path / "nope")}})
    with pytest.raises(ConfigError, match="data_root"):
        config.validate()


def test_log_level_from_environment(monkeypatch):
    monkeypatch.setenv(LOG_LEVEL_ENV, "DEBUG")
    assert resolve_level(0) == logging.DEBUG
