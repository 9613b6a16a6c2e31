"""Numpy neural-network engine with manual backpropagation."""

from nilmkit.nn.checkpoint import load_checkpoint, save_checkpoint, checkpoint_bytes
from nilmkit.nn.gradcheck import finite_difference_check
from nilmkit.nn.layers import (
    Conv2DLayerSpec,
    ConvLayerSpec,
    DenseLayerSpec,
    FlattenSpec,
    MaxPool2DSpec,
    conv1d_apply,
    conv_output_size,
    dense_apply,
)
from nilmkit.nn.losses import LossKind, loss_eval, softmax_cross_entropy_grad
from nilmkit.nn.network import NetworkState, build_network, set_trainable
from nilmkit.nn.optim import optimizer_step
from nilmkit.nn.tensor import as_tensor
from nilmkit.nn.training import TrainingHistory, fit

__all__ = [
    "Conv2DLayerSpec",
    "ConvLayerSpec",
    "DenseLayerSpec",
    "FlattenSpec",
    "LossKind",
    "MaxPool2DSpec",
    "NetworkState",
    "TrainingHistory",
    "as_tensor",
    "build_network",
    "checkpoint_bytes",
    "conv1d_apply",
    "conv_output_size",
    "dense_apply",
    "finite_difference_check",
    "fit",
    "load_checkpoint",
    "loss_eval",
    "optimizer_step",
    "save_checkpoint",
    "set_trainable",
    "softmax_cross_entropy_grad",
]
