"""
Run configuration: JSON file loading/saving, typed value access, and the
per-module parameter blocks shared by every CLI subcommand.
"""

import copy
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from nilmkit.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_SEED = 0

# Per-module parameter blocks. Keys missing from a config file fall back here.
DEFAULT_BLOCKS: Dict[str, Dict[str, Any]] = {
    "ingest": {
        "split_ratio": 0.8,
        "appliances": [],
    },
    "windows": {
        "length": 1000,
        "offset": 35,
        "budget": 20000,
    },
    "nilm": {
        "epochs": 50,
        "batch_size": 64,
        "learning_rate": 0.001,
        "hidden_units": 1300,
    },
    "site": {
        "epochs": 50,
        "batch_size": 64,
        "learning_rate": 0.001,
        "hidden_units": 1300,
    },
    "signatures": {
        "max_points": 300,
        "offset": 150,
        "max_iterations": 1000,
        "scale_min": 1,
        "scale_max": 500,
        "stft_segment": 64,
        "stft_hop": 32,
        "stft_window": "hann",
        "height": 34,
        "width": 56,
        "rotation_range": [-15.0, 15.0],
        "shear_range": [-0.2, 0.2],
        "min_crop_fraction": 0.8,
        "train_total": 600,
        "test_total": 200,
        "max_augmented_fraction": 0.25,
    },
    "classify": {
        "model": "simple-dnn",
        "head": "resnet",
        "learning_rate": 0.001,
        "epochs": 20,
        "batch_size": 32,
    },
    "behavior": {
        "days": 2,
    },
    "report": {},
}


class SafeValue:
    """Typed access to config entries with defaults."""

    @staticmethod
    def get_int(block: Dict[str, Any], key: str, default: int = 0) -> int:
        """Get an integer entry, rejecting values that are not whole numbers."""
        value = block.get(key, default)
        if value is None or value == "":
            return default
        try:
            as_float = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"'{key}' must be an integer, got {value!r}")
        if not as_float.is_integer():
            raise ConfigError(f"'{key}' must be an integer, got {value!r}")
        return int(as_float)

    @staticmethod
    def get_float(block: Dict[str, Any], key: str, default: float = 0.0) -> float:
        """Get a real-valued entry."""
        value = block.get(key, default)
        if value is None or value == "":
            return default
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"'{key}' must be a number, got {value!r}")

    @staticmethod
    def get_str(block: Dict[str, Any], key: str, default: str = "") -> str:
        """Get a string entry."""
        value = block.get(key, default)
        if value is None:
            return default
        if not isinstance(value, str):
            raise ConfigError(f"'{key}' must be a string, got {value!r}")
        return value.strip()


def load_config(path: Optional[str]) -> dict:
    """Load a JSON configuration file; no path means an empty config."""
    if not path:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def save_config(path: str, config: dict) -> None:
    """Save a configuration dict as canonical JSON."""
    with open(path, "w") as f:
        json.dump(config, f, indent=2, sort_keys=True)
        f.write("\n")


@dataclass
class RunConfig:
    """Global seed, paths, and module parameter blocks for one run."""

    seed: int = DEFAULT_SEED
    data_root: str = ""
    output_root: str = "out"
    blocks: Dict[str, Dict[str, Any]] = field(default_factory=lambda: copy.deepcopy(DEFAULT_BLOCKS))

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Build a config, merging file blocks over the defaults."""
        unknown = set(data) - {"seed", "paths"} - set(DEFAULT_BLOCKS)
        if unknown:
            raise ConfigError(f"unknown config sections: {', '.join(sorted(unknown))}")
        paths = data.get("paths", {})
        if not isinstance(paths, dict):
            raise ConfigError("'paths' must be an object")
        blocks = copy.deepcopy(DEFAULT_BLOCKS)
        for name in DEFAULT_BLOCKS:
            section = data.get(name, {})
            if not isinstance(section, dict):
                raise ConfigError(f"'{name}' must be an object")
            blocks[name].update(section)
        return cls(
            seed=SafeValue.get_int(data, "seed", DEFAULT_SEED),
            data_root=SafeValue.get_str(paths, "data_root", ""),
            output_root=SafeValue.get_str(paths, "output_root", "out") or "out",
            blocks=blocks,
        )

    @classmethod
    def load(cls, path: Optional[str]) -> "RunConfig":
        """Load and merge a config file."""
        return cls.from_dict(load_config(path))

    def block(self, name: str) -> Dict[str, Any]:
        """Return a module parameter block."""
        if name not in self.blocks:
            raise ConfigError(f"no config block named '{name}'")
        return self.blocks[name]

    def override(self, name: str, key: str, value: Any) -> None:
        """Apply a command-line override; None leaves the file value."""
        if value is not None:
            self.block(name)[key] = value

    def to_dict(self) -> dict:
        """Serialize back to the file layout."""
        data: Dict[str, Any] = {
            "seed": self.seed,
            "paths": {"data_root": self.data_root, "output_root": self.output_root},
        }
        data.update(copy.deepcopy(self.blocks))
        return data

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def validate(self) -> None:
        """Check referenced paths and basic parameter ranges."""
        if self.data_root and not os.path.isdir(self.data_root):
            raise ConfigError(f"data_root does not exist: {self.data_root}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        ratio = SafeValue.get_float(self.block("ingest"), "split_ratio", 0.8)
        if not 0.0 < ratio < 1.0:
            raise ConfigError(f"ingest.split_ratio must be in (0, 1), got {ratio}")
        windows = self.block("windows")
        if SafeValue.get_int(windows, "offset", 35) < 1:
            raise ConfigError("windows.offset must be >= 1")
        if SafeValue.get_int(windows, "budget", 20000) < 1:
            raise ConfigError("windows.budget must be >= 1")
        for name in ("nilm", "site", "classify"):
            if SafeValue.get_float(self.block(name), "learning_rate", 0.001) <= 0:
                raise ConfigError(f"{name}.learning_rate must be positive")
        fraction = SafeValue.get_float(self.block("signatures"), "max_augmented_fraction", 0.25)
        if not 0.0 <= fraction <= 1.0:
            raise ConfigError(f"signatures.max_augmented_fraction must be in [0, 1], got {fraction}")
        logger.debug("config validated (hash %s)", self.config_hash()[:12])
