"""
NetworkState: an ordered stack of layers with trainable flags, optimizer
slots and the seed the network was built from.
"""

import copy
import fnmatch
import logging
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from nilmkit.errors import ConfigError, ShapeError
from nilmkit.nn.layers import Layer, make_layer
from nilmkit.nn.losses import LossKind, loss_eval, softmax_cross_entropy_grad
from nilmkit.nn.tensor import as_tensor

logger = logging.getLogger(__name__)

Selector = Union[str, int, Sequence[Union[str, int]], Callable[[Layer], bool]]


class NetworkState:
    """Layers, trainable flags, optimizer slots and training hyperparameters."""

    def __init__(self, layers: List[Layer], loss: Union[str, LossKind] = LossKind.MSE,
                 optimizer: str = "adam", learning_rate: float = 0.001, seed: int = 0,
                 input_shape: Optional[Tuple[int, ...]] = None, meta: Optional[Dict[str, Any]] = None):
        names = [layer.name for layer in layers]
        if len(set(names)) != len(names):
            raise ConfigError(f"layer names must be unique: {names}")
        if optimizer not in ("sgd", "adam"):
            raise ConfigError(f"unknown optimizer '{optimizer}'")
        self.layers = layers
        self.loss = LossKind(loss)
        self.optimizer = optimizer
        self.learning_rate = float(learning_rate)
        self.seed = int(seed)
        self.input_shape = tuple(input_shape) if input_shape is not None else None
        self.meta: Dict[str, Any] = dict(meta or {})
        # slots["<layer>.<param>"] = {"m": ..., "v": ...}
        self.slots: Dict[str, Dict[str, np.ndarray]] = {}
        self.step = 0
        if self.input_shape is not None:
            self.output_shapes()

    # --- structure -----------------------------------------------------------

    def output_shapes(self) -> List[Tuple[int, ...]]:
        """Per-sample output shape after every layer."""
        if self.input_shape is None:
            raise ShapeError("network has no declared input shape")
        shapes = []
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.output_shape(shape)
            shapes.append(shape)
        return shapes

    def layer(self, name: str) -> Layer:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise ConfigError(f"no layer named '{name}'")

    def select(self, selector: Selector) -> List[int]:
        """Indices of layers matched by a name pattern, index, list, or predicate."""
        if callable(selector):
            return [i for i, layer in enumerate(self.layers) if selector(layer)]
        if isinstance(selector, (str, int)):
            selector = [selector]
        matched = []
        for i, layer in enumerate(self.layers):
            for item in selector:
                if isinstance(item, int):
                    hit = item == i
                elif any(ch in item for ch in "*?["):
                    hit = fnmatch.fnmatchcase(layer.name, item)
                else:
                    hit = layer.name == item or layer.name.startswith(item)
                if hit:
                    matched.append(i)
                    break
        return matched

    def set_trainable(self, selector: Selector, flag: bool) -> "NetworkState":
        """Freeze (flag=False) or unfreeze the matched layers."""
        indices = self.select(selector)
        if not indices:
            raise ConfigError(f"selector {selector!r} matched no layers")
        for i in indices:
            self.layers[i].trainable = bool(flag)
        logger.debug("set trainable=%s on %s", flag, [self.layers[i].name for i in indices])
        return self

    def parameters(self, trainable_only: bool = False) -> Iterator[Tuple[Layer, str, np.ndarray]]:
        """Iterate (layer, parameter name, array) in a stable order."""
        for layer in self.layers:
            if trainable_only and not layer.trainable:
                continue
            for key in sorted(layer.params):
                yield layer, key, layer.params[key]

    def parameter_count(self, trainable_only: bool = False) -> int:
        return int(sum(arr.size for _, _, arr in self.parameters(trainable_only)))

    def parameter_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(arr * arr)) for _, _, arr in self.parameters())))

    # --- passes --------------------------------------------------------------

    def forward(self, x) -> np.ndarray:
        """Read-only inference pass."""
        out = as_tensor(x, "network input")
        for layer in self.layers:
            out, _ = layer.forward(out)
        return out

    def predict(self, x, batch_size: int = 256) -> np.ndarray:
        """Inference in chunks to bound memory."""
        x = as_tensor(x, "network input")
        if len(x) == 0:
            raise ShapeError("cannot predict on an empty batch", "batch", ">= 1", 0)
        chunks = [self.forward(x[i:i + batch_size]) for i in range(0, len(x), batch_size)]
        return np.concatenate(chunks, axis=0)

    def forward_train(self, x) -> Tuple[np.ndarray, List[Any]]:
        """Forward pass keeping per-layer caches for `backward`."""
        out = as_tensor(x, "network input")
        caches = []
        for layer in self.layers:
            out, cache = layer.forward(out)
            caches.append(cache)
        return out, caches

    def backward(self, grad_out: np.ndarray, caches: List[Any],
                 logit_grad: bool = False) -> List[Optional[Dict[str, np.ndarray]]]:
        """
        Backpropagate the loss gradient. Returns one gradient dict per layer,
        None for frozen or parameter-free layers. Input gradients are not
        computed below the first trainable layer. With `logit_grad`, `grad_out`
        is taken with respect to the last layer's pre-activation.
        """
        first = next((i for i, layer in enumerate(self.layers)
                      if layer.trainable and layer.params), len(self.layers))
        grads: List[Optional[Dict[str, np.ndarray]]] = [None] * len(self.layers)
        grad = grad_out
        for i in range(len(self.layers) - 1, first - 1, -1):
            layer = self.layers[i]
            grad, layer_grads = layer.backward(grad, caches[i], need_input_grad=i > first,
                                               logit_grad=logit_grad and i == len(self.layers) - 1)
            if layer.trainable and layer_grads:
                grads[i] = layer_grads
        return grads

    def loss_backward(self, out: np.ndarray, caches: List[Any],
                      targets) -> Tuple[float, List[Optional[Dict[str, np.ndarray]]]]:
        """
        Loss of a `forward_train` output and the parameter gradients. A softmax
        head under cross-entropy backpropagates p - onehot straight from the logits.
        """
        loss, grad = loss_eval(self.loss, out, targets)
        if self.loss is LossKind.CROSS_ENTROPY and getattr(self.layers[-1].spec, "activation", None) == "softmax":
            return loss, self.backward(softmax_cross_entropy_grad(out, targets), caches, logit_grad=True)
        return loss, self.backward(grad, caches)

    def copy(self) -> "NetworkState":
        return copy.deepcopy(self)


def build_network(specs: Sequence[Tuple[str, Any]], seed: int, loss: Union[str, LossKind],
                  optimizer: str, learning_rate: float,
                  input_shape: Optional[Tuple[int, ...]] = None,
                  meta: Optional[Dict[str, Any]] = None) -> NetworkState:
    """Initialize a network from (name, spec) pairs with a seeded generator."""
    rng = np.random.default_rng(seed)
    layers = [make_layer(name, spec, rng=rng) for name, spec in specs]
    return NetworkState(layers, loss=loss, optimizer=optimizer, learning_rate=learning_rate,
                        seed=seed, input_shape=input_shape, meta=meta)


def set_trainable(state: NetworkState, selector: Selector, flag: bool) -> NetworkState:
    """Functional form of `NetworkState.set_trainable`."""
    return state.set_trainable(selector, flag)
