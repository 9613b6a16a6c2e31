"""
Seeded synthetic houses for desk-scale experiments.

Each appliance is a duty-cycle machine that steps through its 2-4 states in
order, dwelling a geometrically distributed number of samples in each.
"""

import copy
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from nilmkit.config import SafeValue, load_config
from nilmkit.errors import ConfigError
from nilmkit.ingest.site import SiteFile, build_site_file
from nilmkit.ingest.sync import SyncedHouse

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthAppliance:
    """State wattages and mean dwell (in samples) per state."""

    name: str
    watts: List[float]
    mean_dwell: List[float]
    initial_state: int = 0

    def __post_init__(self):
        if not 2 <= len(self.watts) <= 4:
            raise ConfigError(f"appliance '{self.name}' needs 2-4 states, got {len(self.watts)}")
        if len(self.mean_dwell) != len(self.watts):
            raise ConfigError(f"appliance '{self.name}': one mean dwell per state required")
        if any(w < 0 for w in self.watts):
            raise ConfigError(f"appliance '{self.name}': state watts must be non-negative")
        if any(d < 1 for d in self.mean_dwell):
            raise ConfigError(f"appliance '{self.name}': mean dwell must be >= 1 sample")
        if not 0 <= self.initial_state < len(self.watts):
            raise ConfigError(f"appliance '{self.name}': initial state out of range")


@dataclass(frozen=True)
class SynthConfig:
    """
    Synthetic house settings. Noise is zero-mean Gaussian with standard
    deviation `noise_level` times the peak possible aggregate.
    """

    appliances: List[SynthAppliance] = field(default_factory=list)
    noise_level: float = 0.0
    length: int = 10000
    seed: int = 0
    sample_period: int = 1
    start_timestamp: int = 0

    def __post_init__(self):
        if self.length < 0 or self.sample_period < 1:
            raise ConfigError("length must be >= 0 and sample_period >= 1")
        if self.noise_level < 0:
            raise ConfigError("noise_level must be non-negative")


SYNTH_PRESETS: Dict[str, List[SynthAppliance]] = {
    "two-appliance": [
        SynthAppliance("fridge", [0.0, 120.0], [60.0, 40.0]),
        SynthAppliance("kettle", [0.0, 1500.0], [400.0, 20.0]),
    ],
    "computer-site": [
        SynthAppliance("monitor", [0.0, 8.0, 30.0], [120.0, 80.0, 200.0]),
        SynthAppliance("computer", [4.0, 70.0], [300.0, 250.0]),
    ],
}


def synth_config_from_dict(data: dict) -> SynthConfig:
    """Build a SynthConfig from a JSON object; `preset` names SYNTH_PRESETS."""
    preset = SafeValue.get_str(data, "preset", "")
    if preset:
        if preset not in SYNTH_PRESETS:
            raise ConfigError(f"unknown synthetic preset '{preset}'; known: {sorted(SYNTH_PRESETS)}")
        appliances = copy.deepcopy(SYNTH_PRESETS[preset])
    else:
        appliances = []
        for entry in data.get("appliances", []):
            try:
                appliances.append(SynthAppliance(
                    name=str(entry["name"]),
                    watts=[float(w) for w in entry["watts"]],
                    mean_dwell=[float(d) for d in entry["mean_dwell"]],
                    initial_state=int(entry.get("initial_state", 0)),
                ))
            except (KeyError, TypeError, ValueError) as e:
                raise ConfigError(f"bad synthetic appliance entry {entry!r}: {e}")
    return SynthConfig(
        appliances=appliances,
        noise_level=SafeValue.get_float(data, "noise_level", 0.0),
        length=SafeValue.get_int(data, "length", 10000),
        seed=SafeValue.get_int(data, "seed", 0),
        sample_period=SafeValue.get_int(data, "sample_period", 1),
        start_timestamp=SafeValue.get_int(data, "start_timestamp", 0),
    )


def load_synth_config(path: str, seed: Optional[int] = None) -> SynthConfig:
    data = load_config(path)
    if seed is not None:
        data["seed"] = seed
    return synth_config_from_dict(data)


def _state_sequence(appliance: SynthAppliance, length: int, rng: np.random.Generator) -> np.ndarray:
    states = np.empty(length, dtype=np.int64)
    state = appliance.initial_state
    pos = 0
    while pos < length:
        dwell = int(rng.geometric(1.0 / appliance.mean_dwell[state]))
        states[pos:pos + dwell] = state
        pos += dwell
        state = (state + 1) % len(appliance.watts)
    return states


def synth_generate(config: SynthConfig) -> SyncedHouse:
    """Generate a house whose aggregate (mains1) is the sum of appliances plus noise."""
    rng = np.random.default_rng(config.seed)
    names = [a.name for a in config.appliances]
    if len(set(names)) != len(names):
        raise ConfigError(f"synthetic appliance names must be unique: {names}")

    appliances: Dict[str, np.ndarray] = {}
    aggregate = np.zeros(config.length, dtype=np.float64)
    for appliance in config.appliances:
        states = _state_sequence(appliance, config.length, rng)
        column = np.asarray(appliance.watts, dtype=np.float64)[states]
        appliances[appliance.name] = column
        aggregate += column

    peak = float(sum(max(a.watts) for a in config.appliances))
    if config.noise_level > 0 and peak > 0:
        aggregate = np.maximum(aggregate + rng.normal(0.0, config.noise_level * peak, config.length), 0.0)

    timestamps = config.start_timestamp + config.sample_period * np.arange(config.length, dtype=np.int64)
    logger.info("synthetic house: %d samples, %d appliance(s), noise %.3f",
                config.length, len(appliances), config.noise_level)
    return SyncedHouse(
        timestamps=timestamps,
        mains1=aggregate,
        mains2=np.zeros(config.length, dtype=np.float64),
        appliances=appliances,
        labels={i + 3: name for i, name in enumerate(names)},
        gap_counts={"mains1": 0, "mains2": 0},
    )


def synth_site_generate(length: int, seed: int, noise_level: float = 0.0) -> SiteFile:
    """Computer-site data (monitor + computer) labeled by the site thresholds."""
    house = synth_generate(SynthConfig(
        appliances=copy.deepcopy(SYNTH_PRESETS["computer-site"]),
        noise_level=noise_level, length=length, seed=seed,
    ))
    return build_site_file(house.aggregate, house.appliances["monitor"])
