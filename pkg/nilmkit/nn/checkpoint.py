"""
Versioned binary checkpoint container.

Layout: magic (8 bytes), format version (uint32 LE), header length (uint64 LE),
canonical JSON header, then every array as little-endian float64 in header order.
Identical states serialize to identical bytes.
"""

import json
import logging
import struct
from typing import Any, Dict, List

import numpy as np

from nilmkit.errors import CheckpointError
from nilmkit.nn.layers import make_layer, spec_from_dict, spec_to_dict
from nilmkit.nn.network import NetworkState

logger = logging.getLogger(__name__)

MAGIC = b"NILMKIT\x00"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


def _header(state: NetworkState) -> Dict[str, Any]:
    layers: List[Dict[str, Any]] = []
    for layer in state.layers:
        params = [{"name": key, "shape": list(layer.params[key].shape)} for key in sorted(layer.params)]
        slots = []
        for key in sorted(layer.params):
            for slot_name, arr in sorted(state.slots.get(f"{layer.name}.{key}", {}).items()):
                slots.append({"param": key, "slot": slot_name, "shape": list(arr.shape)})
        layers.append({
            "name": layer.name,
            "spec": spec_to_dict(layer.spec),
            "trainable": layer.trainable,
            "params": params,
            "slots": slots,
        })
    return {
        "format": FORMAT_VERSION,
        "seed": state.seed,
        "loss": state.loss.value,
        "optimizer": state.optimizer,
        "learning_rate": state.learning_rate,
        "step": state.step,
        "input_shape": list(state.input_shape) if state.input_shape is not None else None,
        "meta": state.meta,
        "layers": layers,
    }


def checkpoint_bytes(state: NetworkState) -> bytes:
    """Serialize a network state."""
    header = json.dumps(_header(state), sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header)), header]
    for layer in state.layers:
        for key in sorted(layer.params):
            parts.append(np.ascontiguousarray(layer.params[key], dtype="<f8").tobytes())
        for key in sorted(layer.params):
            for _, arr in sorted(state.slots.get(f"{layer.name}.{key}", {}).items()):
                parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(parts)


def save_checkpoint(state: NetworkState, path: str) -> None:
    """Write a checkpoint file."""
    data = checkpoint_bytes(state)
    with open(path, "wb") as f:
        f.write(data)
    logger.info("checkpoint written: %s (%d bytes)", path, len(data))


def checkpoint_from_bytes(data: bytes) -> NetworkState:
    """Rebuild a network state from `checkpoint_bytes` output."""
    if len(data) < _PREFIX.size:
        raise CheckpointError("checkpoint is truncated")
    magic, version, header_len = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointError("not a nilmkit checkpoint")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format {version}, expected {FORMAT_VERSION}")
    offset = _PREFIX.size
    try:
        header = json.loads(data[offset:offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"corrupt checkpoint header: {e}")
    offset += header_len

    def read_array(shape: List[int]) -> np.ndarray:
        nonlocal offset
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(data):
            raise CheckpointError("checkpoint is truncated")
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset).astype(np.float64).reshape(shape)
        offset = end
        return arr

    layers = []
    slots: Dict[str, Dict[str, np.ndarray]] = {}
    for entry in header["layers"]:
        params = {p["name"]: read_array(p["shape"]) for p in entry["params"]}
        for s in entry["slots"]:
            slots.setdefault(f"{entry['name']}.{s['param']}", {})[s["slot"]] = read_array(s["shape"])
        layers.append(make_layer(entry["name"], spec_from_dict(entry["spec"]), params=params,
                                 trainable=entry["trainable"]))
    if offset != len(data):
        raise CheckpointError(f"checkpoint has {len(data) - offset} trailing bytes")

    input_shape = header.get("input_shape")
    state = NetworkState(
        layers, loss=header["loss"], optimizer=header["optimizer"],
        learning_rate=header["learning_rate"], seed=header["seed"],
        input_shape=tuple(input_shape) if input_shape is not None else None,
        meta=header.get("meta") or {},
    )
    state.slots = slots
    state.step = int(header["step"])
    return state


def load_checkpoint(path: str) -> NetworkState:
    """Read a checkpoint file."""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint not found: {path}")
    return checkpoint_from_bytes(data)
