"""
Appliance classifiers over 34 x 56 signature images: the simple deep NN and
a compact 2D-CNN backbone feeding one of the preset dense heads.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

from nilmkit.errors import ConfigError
from nilmkit.nn.layers import Conv2DLayerSpec, DenseLayerSpec, FlattenSpec, MaxPool2DSpec
from nilmkit.nn.losses import LossKind
from nilmkit.nn.network import NetworkState, build_network
from nilmkit.signatures.images import IMAGE_HEIGHT, IMAGE_WIDTH

logger = logging.getLogger(__name__)

CLASS_COUNT = 20
UNKNOWN_CLASS = "unknown"
MODEL_KINDS = ("simple-dnn", "compact-cnn")

# Dense widths, FC1 input first; consecutive entries form the (in, out) pairs.
HEAD_PRESETS: Dict[str, Tuple[int, ...]] = {
    "resnet": (2500, 2000, 1500, 500, 20),
    "alexnet": (4096, 1024, 20),
    "densenet": (1024, 512, 20),
}

LEARNING_RATE_PRESETS: Dict[str, float] = {
    "low": 0.001,
    "high": 0.01,
}

SIMPLE_DNN_HIDDEN = (500, 150)
BACKBONE_CHANNELS = (16, 32)


@dataclass(frozen=True)
class ClassifierSpec:
    """Model kind, the dense head as (in, out) pairs, and the class count."""

    kind: str
    head: Tuple[Tuple[int, int], ...]
    class_count: int = CLASS_COUNT

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown classifier '{self.kind}', expected one of {MODEL_KINDS}")
        if not self.head:
            raise ConfigError("classifier head is empty")
        for (_, out), (nxt, _) in zip(self.head, self.head[1:]):
            if out != nxt:
                raise ConfigError(f"head pairs do not chain: {self.head}")
        if self.head[-1][1] != self.class_count:
            raise ConfigError(f"head ends at {self.head[-1][1]} outputs, expected {self.class_count} classes")


def head_pairs(widths: Sequence[int]) -> Tuple[Tuple[int, int], ...]:
    return tuple(zip(widths[:-1], widths[1:]))


def resolve_head(head: Union[str, Sequence[int]]) -> Tuple[int, ...]:
    """Preset name or explicit width list."""
    if isinstance(head, str):
        key = head.lower().replace("-style", "")
        if key not in HEAD_PRESETS:
            raise ConfigError(f"unknown head preset '{head}', expected one of {sorted(HEAD_PRESETS)}")
        return HEAD_PRESETS[key]
    widths = tuple(int(w) for w in head)
    if len(widths) < 2:
        raise ConfigError("a head needs at least an input and an output width")
    return widths


def resolve_learning_rate(value: Union[str, float]) -> float:
    """Preset name ('low' / 'high') or a positive number."""
    if isinstance(value, str) and value in LEARNING_RATE_PRESETS:
        return LEARNING_RATE_PRESETS[value]
    try:
        rate = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"learning rate must be a number or one of {sorted(LEARNING_RATE_PRESETS)}")
    if rate <= 0:
        raise ConfigError("learning rate must be positive")
    return rate


def _dense_stack(pairs: Sequence[Tuple[int, int]], prefix: str = "fc") -> List[Tuple[str, DenseLayerSpec]]:
    layers = []
    for i, (n_in, n_out) in enumerate(pairs, start=1):
        activation = "softmax" if i == len(pairs) else "relu"
        layers.append((f"{prefix}{i}", DenseLayerSpec(n_in, n_out, activation)))
    return layers


def build_simple_dnn(seed: int = 0, learning_rate: float = 0.001,
                     image_shape: Tuple[int, int] = (IMAGE_HEIGHT, IMAGE_WIDTH),
                     class_count: int = CLASS_COUNT,
                     hidden: Sequence[int] = SIMPLE_DNN_HIDDEN) -> NetworkState:
    """Flatten, 1904 -> 500 relu, 500 -> 150 relu, 150 -> 20 softmax; cross-entropy, SGD."""
    flat = image_shape[0] * image_shape[1]
    spec = ClassifierSpec("simple-dnn", head_pairs((flat, *hidden, class_count)), class_count)
    layers = [("flatten", FlattenSpec())] + _dense_stack(spec.head)
    return build_network(
        layers, seed=seed, loss=LossKind.CROSS_ENTROPY, optimizer="sgd", learning_rate=learning_rate,
        input_shape=tuple(image_shape),
        meta={"model": "simple-dnn", "image_shape": list(image_shape), "class_count": class_count},
    )


def build_compact_cnn(head: Union[str, Sequence[int]] = "resnet", seed: int = 0,
                      learning_rate: float = 0.001,
                      image_shape: Tuple[int, int] = (IMAGE_HEIGHT, IMAGE_WIDTH),
                      channels: Tuple[int, int] = BACKBONE_CHANNELS) -> NetworkState:
    """
    conv(1 -> 16, 3x3, pad 1) relu, 2x2 pool, conv(16 -> 32, 3x3) relu,
    2x2 pool, flatten, a projection to the head's FC1 input width (relu),
    then the head's dense pairs with softmax on the last.
    """
    widths = resolve_head(head)
    c1, c2 = channels
    height, width = image_shape
    pooled = (((height // 2) - 2) // 2, ((width // 2) - 2) // 2)
    if min(pooled) < 1:
        raise ConfigError(f"image {image_shape} is too small for the compact backbone")
    flat = c2 * pooled[0] * pooled[1]
    spec = ClassifierSpec("compact-cnn", head_pairs(widths), widths[-1])
    layers = [
        ("conv1", Conv2DLayerSpec(1, c1, 3, padding=1)),
        ("pool1", MaxPool2DSpec()),
        ("conv2", Conv2DLayerSpec(c1, c2, 3)),
        ("pool2", MaxPool2DSpec()),
        ("flatten", FlattenSpec()),
        ("project", DenseLayerSpec(flat, widths[0], "relu")),
    ] + _dense_stack(spec.head)
    head_name = head if isinstance(head, str) else "custom"
    return build_network(
        layers, seed=seed, loss=LossKind.CROSS_ENTROPY, optimizer="sgd", learning_rate=learning_rate,
        input_shape=(1, height, width),
        meta={"model": "compact-cnn", "head": head_name, "image_shape": list(image_shape),
              "class_count": widths[-1]},
    )


def build_classifier(kind: str, head: Union[str, Sequence[int]] = "resnet", seed: int = 0,
                     learning_rate: float = 0.001,
                     image_shape: Tuple[int, int] = (IMAGE_HEIGHT, IMAGE_WIDTH)) -> NetworkState:
    if kind == "simple-dnn":
        return build_simple_dnn(seed, learning_rate, image_shape)
    if kind == "compact-cnn":
        return build_compact_cnn(head, seed, learning_rate, image_shape)
    raise ConfigError(f"unknown classifier '{kind}', expected one of {MODEL_KINDS}")
