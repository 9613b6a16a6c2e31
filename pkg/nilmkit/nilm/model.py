"""
The seq2-[3]point disaggregator: five 1D convolutions, a flatten and a
two-layer dense head that regresses the first, mid and last appliance value
of each aggregate window.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from nilmkit.errors import CheckpointError, DataError, ShapeError
from nilmkit.nn.checkpoint import save_checkpoint
from nilmkit.nn.layers import ConvLayerSpec, DenseLayerSpec, FlattenSpec, conv_output_size
from nilmkit.nn.losses import LossKind
from nilmkit.nn.network import NetworkState, build_network
from nilmkit.nn.tensor import as_tensor
from nilmkit.nn.training import TrainingHistory, fit
from nilmkit.windowing import WindowBatch, WindowConfig, target_indices, window_starts

logger = logging.getLogger(__name__)

MODEL_NAME = "seq2-3point"
DEFAULT_WINDOW_LENGTH = 1000
DEFAULT_HIDDEN_UNITS = 1300
DEFAULT_LEARNING_RATE = 0.001
OUTPUT_POINTS = 3

# (name, in_c, out_c, k_s); every layer has S_t = 1, P = 0 and ReLU
CONV_TABLE: Tuple[Tuple[str, int, int, int], ...] = (
    ("conv1", 1, 30, 10),
    ("conv2", 30, 30, 8),
    ("conv3", 30, 40, 6),
    ("conv4", 40, 50, 5),
    ("conv5", 50, 50, 5),
)


@dataclass(frozen=True)
class Seq23PointSpec:
    """Layer layout for one window length and dense width."""

    window_length: int = DEFAULT_WINDOW_LENGTH
    hidden_units: int = DEFAULT_HIDDEN_UNITS
    learning_rate: float = DEFAULT_LEARNING_RATE
    conv: Tuple[Tuple[str, ConvLayerSpec], ...] = field(default_factory=lambda: tuple(
        (name, ConvLayerSpec(in_c, out_c, k)) for name, in_c, out_c, k in CONV_TABLE
    ))

    @property
    def min_window_length(self) -> int:
        return sum(spec.kernel_size - 1 for _, spec in self.conv) + 1

    @property
    def conv_width(self) -> int:
        width = self.window_length
        for _, spec in self.conv:
            width = conv_output_size(width, spec)
        return width

    @property
    def flatten_width(self) -> int:
        """Flattened conv feature count, 48,550 for L = 1000."""
        return self.conv_width * self.conv[-1][1].out_channels

    @property
    def input_shape(self) -> Tuple[int, int]:
        return (1, self.window_length)

    def layer_specs(self) -> List[Tuple[str, object]]:
        if self.window_length < self.min_window_length:
            raise ShapeError("window too short for the conv stack", "window_length",
                             f">= {self.min_window_length}", self.window_length)
        specs: List[Tuple[str, object]] = list(self.conv)
        specs.append(("flatten", FlattenSpec()))
        specs.append(("dense1", DenseLayerSpec(self.flatten_width, self.hidden_units, "relu")))
        specs.append(("dense2", DenseLayerSpec(self.hidden_units, OUTPUT_POINTS, "none")))
        return specs

    @property
    def head_parameter_count(self) -> int:
        """Weights and biases of the two dense layers."""
        return (self.flatten_width * self.hidden_units + self.hidden_units
                + self.hidden_units * OUTPUT_POINTS + OUTPUT_POINTS)


def build_seq23point(seed: int = 0, window_length: int = DEFAULT_WINDOW_LENGTH,
                     hidden_units: int = DEFAULT_HIDDEN_UNITS,
                     learning_rate: float = DEFAULT_LEARNING_RATE) -> NetworkState:
    """Fresh seq2-[3]point network: MSE loss, Adam, seeded initialization."""
    spec = Seq23PointSpec(window_length, hidden_units, learning_rate)
    state = build_network(
        spec.layer_specs(), seed=seed, loss=LossKind.MSE, optimizer="adam",
        learning_rate=learning_rate, input_shape=spec.input_shape,
        meta={"model": MODEL_NAME, "window_length": window_length, "hidden_units": hidden_units},
    )
    logger.debug("built %s: L=%d, flatten %d, %d parameters",
                 MODEL_NAME, window_length, spec.flatten_width, state.parameter_count())
    return state


def spec_of(state: NetworkState) -> Seq23PointSpec:
    """Recover the layout a network was built with, checking every layer against it."""
    if state.meta.get("model") != MODEL_NAME:
        raise CheckpointError(f"not a {MODEL_NAME} network (model: {state.meta.get('model')!r})")
    spec = Seq23PointSpec(int(state.meta["window_length"]), int(state.meta["hidden_units"]),
                          state.learning_rate)
    expected = spec.layer_specs()
    actual = [(layer.name, layer.spec) for layer in state.layers]
    if actual != expected:
        names = [name for name, _ in actual]
        raise CheckpointError(f"network layers {names} do not match the {MODEL_NAME} layout")
    return spec


def _as_model_input(inputs) -> np.ndarray:
    x = as_tensor(inputs, "window inputs")
    if x.ndim == 2:
        x = x[:, None, :]
    return x


def train_appliance(state: NetworkState, batch: WindowBatch, epochs: int, batch_size: int,
                    seed: int, checkpoint_path: Optional[str] = None) -> Tuple[NetworkState, TrainingHistory]:
    """Train on normalized windows; the state is updated in place and returned."""
    spec = spec_of(state)
    if batch.inputs.shape[1] != spec.window_length:
        raise ShapeError("window length does not match the network", "L",
                         spec.window_length, batch.inputs.shape[1])
    history = fit(state, _as_model_input(batch.inputs), batch.targets, epochs, batch_size, seed)
    if checkpoint_path:
        save_checkpoint(state, checkpoint_path)
    return state, history


def transfer_train(base: NetworkState, batch: WindowBatch, epochs: int, batch_size: int,
                   seed: int, checkpoint_path: Optional[str] = None) -> Tuple[NetworkState, TrainingHistory]:
    """
    Start from a trained base network, freeze the conv layers, draw a fresh
    dense head from `seed` and train it on another appliance's windows.
    The base state is left untouched.
    """
    spec_of(base)
    state = base.copy()
    state.set_trainable("conv", False)
    rng = np.random.default_rng(seed)
    for name in ("dense1", "dense2"):
        layer = state.layer(name)
        layer.initialize(rng)
        layer.trainable = True
    state.slots = {}
    state.step = 0
    logger.info("transfer: %d of %d parameters trainable",
                state.parameter_count(trainable_only=True), state.parameter_count())
    return train_appliance(state, batch, epochs, batch_size, seed, checkpoint_path)


@dataclass(frozen=True)
class StitchedSeries:
    """Per-position mean of covering predictions; NaN where nothing landed."""

    values: np.ndarray
    coverage: np.ndarray

    @property
    def covered(self) -> np.ndarray:
        return self.coverage > 0


def predict_windows(state: NetworkState, inputs, batch_size: int = 256) -> np.ndarray:
    """Read-only [n, 3] predictions for [n, L] windows."""
    return state.predict(_as_model_input(inputs), batch_size=batch_size)


def predict_series(state: NetworkState, aggregate, config: WindowConfig,
                   batch_size: int = 256) -> StitchedSeries:
    """Slide windows over a normalized aggregate and stitch the 3-point outputs back."""
    spec = spec_of(state)
    if config.length != spec.window_length:
        raise ShapeError("window length does not match the network", "L", spec.window_length, config.length)
    series = as_tensor(aggregate, "aggregate")
    if series.ndim != 1:
        raise ShapeError("aggregate must be 1D", "rank", 1, series.ndim)
    if len(series) < config.start + config.length:
        raise DataError(f"series of {len(series)} samples is shorter than one window")
    starts = window_starts(len(series), config)
    windows = np.stack([series[s:s + config.length] for s in starts])
    predictions = predict_windows(state, windows, batch_size)
    positions = starts[:, None] + np.asarray(target_indices(config.length))[None, :]
    total = np.zeros(len(series), dtype=np.float64)
    coverage = np.zeros(len(series), dtype=np.int64)
    np.add.at(total, positions.ravel(), predictions.ravel())
    np.add.at(coverage, positions.ravel(), 1)
    values = np.full(len(series), np.nan)
    values[coverage > 0] = total[coverage > 0] / coverage[coverage > 0]
    return StitchedSeries(values=values, coverage=coverage)
