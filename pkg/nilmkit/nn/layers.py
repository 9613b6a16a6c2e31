"""
Layer specifications and the layer kernels of the engine.

Every layer is a small object holding its spec, its parameter arrays and a
trainable flag. `forward` never mutates the layer, so a finalized network can
serve many threads; the values needed by `backward` travel in the returned cache.
"""

import dataclasses
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from nilmkit.errors import ConfigError, ShapeError
from nilmkit.nn.tensor import DTYPE, as_tensor, require_ndim

ACTIVATIONS = ("relu", "softmax", "none")


def _check_activation(activation: str) -> None:
    if activation not in ACTIVATIONS:
        raise ConfigError(f"unknown activation '{activation}', expected one of {ACTIVATIONS}")


@dataclass(frozen=True)
class ConvLayerSpec:
    """1D convolution: in_c, out_c, k_s, S_t, P as in the conv attribute table."""

    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    padding: int = 0
    activation: str = "relu"

    kind = "conv1d"

    def __post_init__(self):
        if min(self.in_channels, self.out_channels, self.kernel_size) < 1:
            raise ConfigError(f"conv channels and kernel size must be >= 1: {self}")
        if self.stride < 1 or self.padding < 0:
            raise ConfigError(f"conv stride must be >= 1 and padding >= 0: {self}")
        _check_activation(self.activation)


@dataclass(frozen=True)
class Conv2DLayerSpec:
    """2D convolution with a square kernel."""

    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    padding: int = 0
    activation: str = "relu"

    kind = "conv2d"

    def __post_init__(self):
        if min(self.in_channels, self.out_channels, self.kernel_size) < 1:
            raise ConfigError(f"conv channels and kernel size must be >= 1: {self}")
        if self.stride < 1 or self.padding < 0:
            raise ConfigError(f"conv stride must be >= 1 and padding >= 0: {self}")
        _check_activation(self.activation)


@dataclass(frozen=True)
class DenseLayerSpec:
    """Fully connected layer y = xW + b followed by an activation."""

    in_features: int
    out_features: int
    activation: str = "none"

    kind = "dense"

    def __post_init__(self):
        if self.in_features < 1 or self.out_features < 1:
            raise ConfigError(f"dense features must be >= 1: {self}")
        _check_activation(self.activation)


@dataclass(frozen=True)
class MaxPool2DSpec:
    """Non-overlapping max pooling."""

    size: int = 2

    kind = "maxpool2d"

    def __post_init__(self):
        if self.size != 2:
            raise ConfigError("only 2x2 max pooling is supported")


@dataclass(frozen=True)
class FlattenSpec:
    """Collapse every non-batch axis."""

    kind = "flatten"


SPEC_TYPES = {
    spec.kind: spec
    for spec in (ConvLayerSpec, Conv2DLayerSpec, DenseLayerSpec, MaxPool2DSpec, FlattenSpec)
}


def spec_to_dict(spec) -> Dict[str, Any]:
    """Serialize a spec with its kind tag."""
    data = dataclasses.asdict(spec)
    data["kind"] = spec.kind
    return data


def spec_from_dict(data: Dict[str, Any]):
    """Rebuild a spec from `spec_to_dict` output."""
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in SPEC_TYPES:
        raise ConfigError(f"unknown layer kind '{kind}'")
    return SPEC_TYPES[kind](**data)


def conv_output_size(width: int, spec) -> int:
    """Output width of a convolution: floor((W - k_s + 2P) / S_t) + 1."""
    if width + 2 * spec.padding < spec.kernel_size:
        raise ShapeError(
            "input is smaller than the kernel", "width + 2*padding",
            f">= {spec.kernel_size}", width + 2 * spec.padding,
        )
    return (width - spec.kernel_size + 2 * spec.padding) // spec.stride + 1


# --- activations -----------------------------------------------------------

def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax over the last axis."""
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def apply_activation(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "softmax":
        return softmax(z)
    return z


def activation_backward(grad_y: np.ndarray, y: np.ndarray, activation: str) -> np.ndarray:
    """Map the gradient w.r.t. the activation output back to the pre-activation."""
    if activation == "relu":
        return grad_y * (y > 0.0)
    if activation == "softmax":
        return y * (grad_y - np.sum(grad_y * y, axis=-1, keepdims=True))
    return grad_y


# --- initialization ---------------------------------------------------------

def init_weight(shape: Tuple[int, ...], fan_in: int, fan_out: int, activation: str,
                rng: np.random.Generator) -> np.ndarray:
    """He-uniform for ReLU-fed layers, Xavier-uniform otherwise."""
    if activation == "relu":
        limit = np.sqrt(6.0 / fan_in)
    else:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(DTYPE)


# --- layers ----------------------------------------------------------------

class Layer:
    """Base layer: named, optionally parameterized, freezable."""

    def __init__(self, name: str, spec, params: Optional[Dict[str, np.ndarray]] = None,
                 trainable: bool = True):
        self.name = name
        self.spec = spec
        self.params: Dict[str, np.ndarray] = params or {}
        self.trainable = trainable
        self.check_params()

    @property
    def kind(self) -> str:
        return self.spec.kind

    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {}

    def check_params(self) -> None:
        """Verify parameter shapes against the spec."""
        expected = self.param_shapes()
        if set(expected) != set(self.params):
            raise ShapeError(
                f"layer '{self.name}' has the wrong parameter set", "parameters",
                sorted(expected), sorted(self.params),
            )
        for key, shape in expected.items():
            actual = tuple(self.params[key].shape)
            if actual != tuple(shape):
                raise ShapeError(f"layer '{self.name}' parameter '{key}'", key, tuple(shape), actual)

    def initialize(self, rng: np.random.Generator) -> None:
        """Draw fresh parameters (biases zero)."""

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        raise NotImplementedError

    def backward(self, grad_y: np.ndarray, cache: Any, need_input_grad: bool = True,
                 logit_grad: bool = False) -> Tuple[Optional[np.ndarray], Dict[str, np.ndarray]]:
        """`logit_grad` means `grad_y` is already taken with respect to the pre-activation."""
        raise NotImplementedError

    def output_shape(self, input_shape: Tuple[int, ...]) -> Tuple[int, ...]:
        """Per-sample output shape for a per-sample input shape."""
        raise NotImplementedError

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))


class Conv1DLayer(Layer):
    """Cross-correlation over the last axis of [batch, channels, width]."""

    def param_shapes(self):
        s = self.spec
        return {"weight": (s.out_channels, s.in_channels, s.kernel_size), "bias": (s.out_channels,)}

    def initialize(self, rng):
        s = self.spec
        self.params = {
            "weight": init_weight(
                (s.out_channels, s.in_channels, s.kernel_size),
                s.in_channels * s.kernel_size, s.out_channels * s.kernel_size,
                s.activation, rng,
            ),
            "bias": np.zeros(s.out_channels, dtype=DTYPE),
        }

    def output_shape(self, input_shape):
        channels, width = input_shape
        if channels != self.spec.in_channels:
            raise ShapeError(f"layer '{self.name}' input", "channels", self.spec.in_channels, channels)
        return (self.spec.out_channels, conv_output_size(width, self.spec))

    def forward(self, x):
        s = self.spec
        require_ndim(x, 3, f"layer '{self.name}' input")
        if x.shape[1] != s.in_channels:
            raise ShapeError(f"layer '{self.name}' input", "channels", s.in_channels, x.shape[1])
        conv_output_size(x.shape[2], s)
        if s.padding:
            x = np.pad(x, ((0, 0), (0, 0), (s.padding, s.padding)))
        windows = sliding_window_view(x, s.kernel_size, axis=2)[:, :, ::s.stride, :]
        z = np.tensordot(windows, self.params["weight"], axes=([1, 3], [1, 2]))
        z = z.transpose(0, 2, 1) + self.params["bias"][None, :, None]
        y = apply_activation(z, s.activation)
        return y, (x.shape, windows, y)

    def backward(self, grad_y, cache, need_input_grad=True, logit_grad=False):
        s = self.spec
        padded_shape, windows, y = cache
        gz = grad_y if logit_grad else activation_backward(grad_y, y, s.activation)
        grads = {}
        if self.trainable:
            grads["weight"] = np.tensordot(gz, windows, axes=([0, 2], [0, 2]))
            grads["bias"] = gz.sum(axis=(0, 2))
        if not need_input_grad:
            return None, grads
        out_width = gz.shape[2]
        grad_x = np.zeros(padded_shape, dtype=DTYPE)
        span = s.stride * (out_width - 1) + 1
        weight = self.params["weight"]
        for j in range(s.kernel_size):
            contrib = np.tensordot(gz, weight[:, :, j], axes=([1], [0]))
            grad_x[:, :, j:j + span:s.stride] += contrib.transpose(0, 2, 1)
        if s.padding:
            grad_x = grad_x[:, :, s.padding:-s.padding]
        return grad_x, grads


class Conv2DLayer(Layer):
    """Cross-correlation over the last two axes of [batch, channels, height, width]."""

    def param_shapes(self):
        s = self.spec
        return {
            "weight": (s.out_channels, s.in_channels, s.kernel_size, s.kernel_size),
            "bias": (s.out_channels,),
        }

    def initialize(self, rng):
        s = self.spec
        area = s.kernel_size * s.kernel_size
        self.params = {
            "weight": init_weight(
                (s.out_channels, s.in_channels, s.kernel_size, s.kernel_size),
                s.in_channels * area, s.out_channels * area, s.activation, rng,
            ),
            "bias": np.zeros(s.out_channels, dtype=DTYPE),
        }

    def output_shape(self, input_shape):
        channels, height, width = input_shape
        if channels != self.spec.in_channels:
            raise ShapeError(f"layer '{self.name}' input", "channels", self.spec.in_channels, channels)
        return (self.spec.out_channels, conv_output_size(height, self.spec), conv_output_size(width, self.spec))

    def forward(self, x):
        s = self.spec
        require_ndim(x, 4, f"layer '{self.name}' input")
        if x.shape[1] != s.in_channels:
            raise ShapeError(f"layer '{self.name}' input", "channels", s.in_channels, x.shape[1])
        conv_output_size(x.shape[2], s)
        conv_output_size(x.shape[3], s)
        if s.padding:
            p = s.padding
            x = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        k = s.kernel_size
        windows = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::s.stride, ::s.stride]
        z = np.tensordot(windows, self.params["weight"], axes=([1, 4, 5], [1, 2, 3]))
        z = z.transpose(0, 3, 1, 2) + self.params["bias"][None, :, None, None]
        y = apply_activation(z, s.activation)
        return y, (x.shape, windows, y)

    def backward(self, grad_y, cache, need_input_grad=True, logit_grad=False):
        s = self.spec
        padded_shape, windows, y = cache
        gz = grad_y if logit_grad else activation_backward(grad_y, y, s.activation)
        grads = {}
        if self.trainable:
            grads["weight"] = np.tensordot(gz, windows, axes=([0, 2, 3], [0, 2, 3]))
            grads["bias"] = gz.sum(axis=(0, 2, 3))
        if not need_input_grad:
            return None, grads
        out_h, out_w = gz.shape[2], gz.shape[3]
        grad_x = np.zeros(padded_shape, dtype=DTYPE)
        span_h = s.stride * (out_h - 1) + 1
        span_w = s.stride * (out_w - 1) + 1
        weight = self.params["weight"]
        for i in range(s.kernel_size):
            for j in range(s.kernel_size):
                contrib = np.tensordot(gz, weight[:, :, i, j], axes=([1], [0]))
                grad_x[:, :, i:i + span_h:s.stride, j:j + span_w:s.stride] += contrib.transpose(0, 3, 1, 2)
        if s.padding:
            p = s.padding
            grad_x = grad_x[:, :, p:-p, p:-p]
        return grad_x, grads


class MaxPool2DLayer(Layer):
    """2x2 max pooling; trailing odd rows/columns are dropped."""

    def output_shape(self, input_shape):
        channels, height, width = input_shape
        size = self.spec.size
        if height < size or width < size:
            raise ShapeError(f"layer '{self.name}' input smaller than the pool", "height/width",
                             f">= {size}", (height, width))
        return (channels, height // size, width // size)

    def forward(self, x):
        require_ndim(x, 4, f"layer '{self.name}' input")
        p = self.spec.size
        batch, channels, height, width = x.shape
        self.output_shape((channels, height, width))
        out_h, out_w = height // p, width // p
        cropped = x[:, :, :out_h * p, :out_w * p]
        blocks = cropped.reshape(batch, channels, out_h, p, out_w, p).transpose(0, 1, 2, 4, 3, 5)
        blocks = blocks.reshape(batch, channels, out_h, out_w, p * p)
        index = np.argmax(blocks, axis=-1)
        y = np.take_along_axis(blocks, index[..., None], axis=-1)[..., 0]
        return y, (x.shape, index)

    def backward(self, grad_y, cache, need_input_grad=True, logit_grad=False):
        if not need_input_grad:
            return None, {}
        shape, index = cache
        p = self.spec.size
        batch, channels, height, width = shape
        out_h, out_w = index.shape[2], index.shape[3]
        blocks = np.zeros((batch, channels, out_h, out_w, p * p), dtype=DTYPE)
        np.put_along_axis(blocks, index[..., None], grad_y[..., None], axis=-1)
        blocks = blocks.reshape(batch, channels, out_h, out_w, p, p).transpose(0, 1, 2, 4, 3, 5)
        grad_x = np.zeros(shape, dtype=DTYPE)
        grad_x[:, :, :out_h * p, :out_w * p] = blocks.reshape(batch, channels, out_h * p, out_w * p)
        return grad_x, {}


class FlattenLayer(Layer):

    def output_shape(self, input_shape):
        return (int(np.prod(input_shape)),)

    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, grad_y, cache, need_input_grad=True, logit_grad=False):
        if not need_input_grad:
            return None, {}
        return grad_y.reshape(cache), {}


class DenseLayer(Layer):
    """Affine map with weight shaped [in_features, out_features]."""

    def param_shapes(self):
        s = self.spec
        return {"weight": (s.in_features, s.out_features), "bias": (s.out_features,)}

    def initialize(self, rng):
        s = self.spec
        self.params = {
            "weight": init_weight((s.in_features, s.out_features), s.in_features, s.out_features,
                                  s.activation, rng),
            "bias": np.zeros(s.out_features, dtype=DTYPE),
        }

    def output_shape(self, input_shape):
        if input_shape != (self.spec.in_features,):
            raise ShapeError(f"layer '{self.name}' input", "in_features",
                             self.spec.in_features, input_shape)
        return (self.spec.out_features,)

    def forward(self, x):
        require_ndim(x, 2, f"layer '{self.name}' input")
        if x.shape[1] != self.spec.in_features:
            raise ShapeError(f"layer '{self.name}' input", "in_features",
                             self.spec.in_features, x.shape[1])
        z = x @ self.params["weight"] + self.params["bias"]
        y = apply_activation(z, self.spec.activation)
        return y, (x, y)

    def backward(self, grad_y, cache, need_input_grad=True, logit_grad=False):
        x, y = cache
        gz = grad_y if logit_grad else activation_backward(grad_y, y, self.spec.activation)
        grads = {}
        if self.trainable:
            grads["weight"] = x.T @ gz
            grads["bias"] = gz.sum(axis=0)
        grad_x = gz @ self.params["weight"].T if need_input_grad else None
        return grad_x, grads


LAYER_TYPES = {
    "conv1d": Conv1DLayer,
    "conv2d": Conv2DLayer,
    "dense": DenseLayer,
    "maxpool2d": MaxPool2DLayer,
    "flatten": FlattenLayer,
}


def make_layer(name: str, spec, rng: Optional[np.random.Generator] = None,
               params: Optional[Dict[str, np.ndarray]] = None, trainable: bool = True) -> Layer:
    """Create a layer, either initialized from `rng` or from given parameters."""
    cls = LAYER_TYPES[spec.kind]
    if params is None:
        if rng is None:
            rng = np.random.default_rng(0)
        layer = cls.__new__(cls)
        layer.name, layer.spec, layer.params, layer.trainable = name, spec, {}, trainable
        layer.initialize(rng)
        layer.check_params()
        return layer
    return cls(name, spec, params={k: as_tensor(v, f"{name}.{k}") for k, v in params.items()},
               trainable=trainable)


def conv1d_apply(x, layer: Layer) -> np.ndarray:
    """Forward a [batch, in_c, width] tensor through a 1D conv layer."""
    if layer.kind != "conv1d":
        raise ShapeError("conv1d_apply needs a conv1d layer", "layer kind", "conv1d", layer.kind)
    return layer.forward(as_tensor(x, "conv1d input"))[0]


def dense_apply(x, layer: Layer) -> np.ndarray:
    """Forward a [batch, in_features] tensor through a dense layer."""
    if layer.kind != "dense":
        raise ShapeError("dense_apply needs a dense layer", "layer kind", "dense", layer.kind)
    return layer.forward(as_tensor(x, "dense input"))[0]
