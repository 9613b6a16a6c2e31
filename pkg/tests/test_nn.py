import numpy as np
import pytest

from nilmkit.errors import CheckpointError, ConfigError, DataError, ShapeError, TrainingDivergedError
from nilmkit.nn import (
    Conv2DLayerSpec,
    ConvLayerSpec,
    DenseLayerSpec,
    FlattenSpec,
    LossKind,
    MaxPool2DSpec,
    build_network,
    checkpoint_bytes,
    conv1d_apply,
    conv_output_size,
    dense_apply,
    finite_difference_check,
    fit,
    load_checkpoint,
    loss_eval,
    optimizer_step,
    save_checkpoint,
    softmax_cross_entropy_grad,
)
from nilmkit.nn.checkpoint import checkpoint_from_bytes
from nilmkit.nn.layers import activation_backward, make_layer


def small_regressor(seed=0, optimizer="adam"):
    return build_network(
        [
            ("conv1", ConvLayerSpec(1, 3, 4)),
            ("conv2", ConvLayerSpec(3, 2, 3, stride=2, padding=1)),
            ("flatten", FlattenSpec()),
            ("dense1", DenseLayerSpec(2 * 5, 6, "relu")),
            ("dense2", DenseLayerSpec(6, 3, "none")),
        ],
        seed=seed, loss=LossKind.MSE, optimizer=optimizer, learning_rate=0.01, input_shape=(1, 12),
    )


def small_classifier(seed=0):
    return build_network(
        [
            ("conv1", Conv2DLayerSpec(1, 2, 3, padding=1)),
            ("pool1", MaxPool2DSpec()),
            ("flatten", FlattenSpec()),
            ("fc1", DenseLayerSpec(18, 3, "softmax")),
        ],
        seed=seed, loss=LossKind.CROSS_ENTROPY, optimizer="sgd", learning_rate=0.1, input_shape=(1, 6, 6),
    )


@pytest.mark.parametrize("width,spec,expected", [
    (1000, ConvLayerSpec(1, 30, 10), 991),
    (991, ConvLayerSpec(30, 30, 8), 984),
    (10, ConvLayerSpec(1, 1, 3, stride=2, padding=1), 5),
    (5, ConvLayerSpec(1, 1, 5), 1),
])
def test_conv_output_size(width, spec, expected):
    assert conv_output_size(width, spec) == expected


def test_conv_output_size_rejects_small_input():
    with pytest.raises(ShapeError):
        conv_output_size(4, ConvLayerSpec(1, 1, 5))


def test_conv1d_is_cross_correlation():
    layer = make_layer("c", ConvLayerSpec(1, 1, 3, activation="none"),
                       params={"weight": [[[1.0, 2.0, 3.0]]], "bias": [0.5]})
    x = np.array([[[1.0, 0.0, 0.0, 2.0, 1.0]]])
    out = conv1d_apply(x, layer)
    expected = np.correlate(x[0, 0], [1.0, 2.0, 3.0], mode="valid") + 0.5
    np.testing.assert_allclose(out[0, 0], expected)


def test_conv1d_channel_mismatch():
    layer = make_layer("c", ConvLayerSpec(2, 1, 3))
    with pytest.raises(ShapeError):
        conv1d_apply(np.zeros((1, 1, 8)), layer)


def test_dense_shapes():
    layer = make_layer("d", DenseLayerSpec(7, 4, "relu"), rng=np.random.default_rng(0))
    assert dense_apply(np.ones((5, 7)), layer).shape == (5, 4)
    with pytest.raises(ShapeError):
        dense_apply(np.ones((5, 6)), layer)


def test_dense_rejects_nan():
    layer = make_layer("d", DenseLayerSpec(2, 2))
    with pytest.raises(DataError):
        dense_apply([[np.nan, 1.0]], layer)


def test_unknown_activation():
    with pytest.raises(ConfigError):
        DenseLayerSpec(2, 2, "tanhh")


def test_network_output_shapes():
    state = small_regressor()
    assert state.output_shapes() == [(3, 9), (2, 5), (10,), (6,), (3,)]


def test_mse_loss_and_gradient():
    loss, grad = loss_eval("mse", [[1.0, 2.0]], [[0.0, 0.0]])
    assert loss == pytest.approx(2.5)
    np.testing.assert_allclose(grad, [[1.0, 2.0]])


def test_cross_entropy_requires_softmax_rows():
    with pytest.raises(DataError):
        loss_eval("cross_entropy", [[0.5, 0.6]], [0])
    loss, _ = loss_eval("cross_entropy", [[0.25, 0.75]], [1])
    assert loss == pytest.approx(-np.log(0.75))


def test_cross_entropy_index_out_of_range():
    with pytest.raises(DataError):
        loss_eval("cross_entropy", [[0.5, 0.5]], [2])


def test_gradcheck_conv_dense(rng):
    state = small_regressor(seed=3)
    x = rng.normal(size=(4, 1, 12))
    assert finite_difference_check(state, x, epsilon=1e-5) < 1e-4


def test_gradcheck_conv2d_pool_softmax(rng):
    state = small_classifier(seed=5)
    x = rng.normal(size=(3, 1, 6, 6))
    assert finite_difference_check(state, x, epsilon=1e-5) < 1e-4


def test_gradcheck_skips_frozen_layers(rng):
    state = small_regressor(seed=1)
    state.set_trainable("conv", False)
    x = rng.normal(size=(2, 1, 12))
    assert finite_difference_check(state, x, epsilon=1e-5) < 1e-4


def test_gradcheck_epsilon_range():
    with pytest.raises(ConfigError):
        finite_difference_check(small_regressor(), np.zeros((1, 1, 12)), epsilon=0.1)


def test_sgd_step_matches_rule():
    state = build_network([("d", DenseLayerSpec(2, 1))], seed=0, loss="mse", optimizer="sgd",
                          learning_rate=0.5, input_shape=(2,))
    before = state.layer("d").params["weight"].copy()
    grad = {"weight": np.ones((2, 1)), "bias": np.zeros(1)}
    optimizer_step(state, [grad])
    np.testing.assert_allclose(state.layer("d").params["weight"], before - 0.5)


def test_adam_first_step_moves_by_learning_rate():
    state = build_network([("d", DenseLayerSpec(2, 1))], seed=0, loss="mse", optimizer="adam",
                          learning_rate=0.01, input_shape=(2,))
    before = state.layer("d").params["weight"].copy()
    grad = {"weight": np.array([[3.0], [-0.2]]), "bias": np.zeros(1)}
    optimizer_step(state, [grad])
    np.testing.assert_allclose(state.layer("d").params["weight"] - before, [[-0.01], [0.01]], rtol=1e-6)
    assert state.step == 1
    assert "d.weight" in state.slots


def test_frozen_layers_untouched_by_optimizer(rng):
    state = small_regressor()
    state.set_trainable("conv", False)
    frozen = {name: state.layer(name).params["weight"].copy() for name in ("conv1", "conv2")}
    x = rng.normal(size=(8, 1, 12))
    y = rng.normal(size=(8, 3))
    fit(state, x, y, epochs=3, batch_size=4, seed=0)
    for name, weight in frozen.items():
        assert np.array_equal(state.layer(name).params["weight"], weight)
        assert f"{name}.weight" not in state.slots
    assert state.parameter_count(trainable_only=True) == (10 * 6 + 6) + (6 * 3 + 3)


def test_set_trainable_no_match():
    with pytest.raises(ConfigError):
        small_regressor().set_trainable("lstm", False)


def test_fit_reduces_loss(rng):
    state = small_regressor(seed=2)
    x = rng.normal(size=(32, 1, 12))
    y = np.stack([x[:, 0, 0], x[:, 0, 5], x[:, 0, 11]], axis=1)
    history = fit(state, x, y, epochs=30, batch_size=8, seed=0)
    assert history.losses[-1] < history.losses[0]


def test_fit_is_deterministic(rng):
    x = rng.normal(size=(16, 1, 12))
    y = rng.normal(size=(16, 3))
    a, b = small_regressor(seed=4), small_regressor(seed=4)
    fit(a, x, y, epochs=2, batch_size=5, seed=9)
    fit(b, x, y, epochs=2, batch_size=5, seed=9)
    assert checkpoint_bytes(a) == checkpoint_bytes(b)


def test_fit_row_mismatch():
    with pytest.raises(ShapeError):
        fit(small_regressor(), np.zeros((4, 1, 12)), np.zeros((3, 3)), 1, 2, 0)


def test_fit_divergence_reported():
    state = build_network([("d", DenseLayerSpec(1, 1))], seed=0, loss="mse", optimizer="sgd",
                          learning_rate=1e6, input_shape=(1,))
    x = np.full((4, 1), 1e3)
    y = np.zeros((4, 1))
    with pytest.raises(TrainingDivergedError) as info:
        fit(state, x, y, epochs=50, batch_size=4, seed=0)
    assert info.value.epoch >= 1


def test_checkpoint_round_trip(tmp_path, rng):
    state = small_regressor(seed=6)
    fit(state, rng.normal(size=(6, 1, 12)), rng.normal(size=(6, 3)), epochs=1, batch_size=3, seed=0)
    state.set_trainable("conv1", False)
    state.meta["appliance"] = "fridge"
    path = str(tmp_path / "m.ckpt")
    save_checkpoint(state, path)
    loaded = load_checkpoint(path)
    assert checkpoint_bytes(loaded) == checkpoint_bytes(state)
    assert loaded.layer("conv1").trainable is False
    assert loaded.step == state.step
    assert loaded.meta["appliance"] == "fridge"
    x = rng.normal(size=(2, 1, 12))
    np.testing.assert_array_equal(loaded.forward(x), state.forward(x))


def test_checkpoint_is_deterministic():
    assert checkpoint_bytes(small_classifier(seed=8)) == checkpoint_bytes(small_classifier(seed=8))
    assert checkpoint_bytes(small_classifier(seed=8)) != checkpoint_bytes(small_classifier(seed=9))


def test_checkpoint_corruption():
    data = checkpoint_bytes(small_regressor())
    with pytest.raises(CheckpointError):
        checkpoint_from_bytes(b"NOTNILM!" + data[8:])
    with pytest.raises(CheckpointError):
        checkpoint_from_bytes(data[:-8])
    with pytest.raises(CheckpointError):
        checkpoint_from_bytes(data + b"\x00" * 8)


def test_softmax_cross_entropy_gradient_when_saturated():
    state = build_network([("fc", DenseLayerSpec(2, 3, "softmax"))], seed=0, loss="cross_entropy",
                          optimizer="sgd", learning_rate=0.1, input_shape=(2,))
    state.layer("fc").params["weight"][...] = [[0.0, 500.0, -500.0], [0.0, 0.0, 0.0]]
    x = np.array([[2.0, 1.0]])
    out, caches = state.forward_train(x)
    assert out[0, 2] == 0.0
    loss, grads = state.loss_backward(out, caches, np.array([2]))
    assert np.isfinite(loss)
    expected = out - np.array([[0.0, 0.0, 1.0]])
    np.testing.assert_allclose(grads[0]["weight"], x.T @ expected)
    np.testing.assert_allclose(grads[0]["bias"], expected[0])
    np.testing.assert_allclose(grads[0]["bias"], [0.0, 1.0, -1.0])


def test_softmax_cross_entropy_gradient_matches_chain_rule(rng):
    z = rng.normal(size=(5, 4))
    p = np.exp(z - z.max(axis=1, keepdims=True))
    p /= p.sum(axis=1, keepdims=True)
    targets = rng.integers(0, 4, size=5)
    chained = activation_backward(loss_eval("cross_entropy", p, targets)[1], p, "softmax")
    np.testing.assert_allclose(softmax_cross_entropy_grad(p, targets), chained, atol=1e-12)


GRADIENT_SEEDS = range(20)


@pytest.mark.parametrize("seed", GRADIENT_SEEDS)
def test_gradcheck_dense_stack(seed):
    state = build_network(
        [("d1", DenseLayerSpec(4, 5, "relu")), ("d2", DenseLayerSpec(5, 2))],
        seed=seed, loss="mse", optimizer="sgd", learning_rate=0.1, input_shape=(4,),
    )
    x = np.random.default_rng(seed).normal(size=(3, 4))
    assert finite_difference_check(state, x, epsilon=1e-6, seed=seed) < 1e-4


@pytest.mark.parametrize("seed", GRADIENT_SEEDS)
def test_gradcheck_conv1d_stack(seed):
    state = build_network(
        [
            ("c1", ConvLayerSpec(2, 3, 3, activation="none")),
            ("c2", ConvLayerSpec(3, 2, 2, stride=2, padding=1)),
            ("flatten", FlattenSpec()),
            ("d", DenseLayerSpec(8, 2)),
        ],
        seed=seed, loss="mse", optimizer="sgd", learning_rate=0.1, input_shape=(2, 8),
    )
    x = np.random.default_rng(seed).normal(size=(3, 2, 8))
    assert finite_difference_check(state, x, epsilon=1e-6, seed=seed) < 1e-4


@pytest.mark.parametrize("seed", GRADIENT_SEEDS)
def test_gradcheck_conv2d_pool_stack(seed):
    state = build_network(
        [
            ("c", Conv2DLayerSpec(2, 3, 3, padding=1, activation="none")),
            ("pool", MaxPool2DSpec()),
            ("flatten", FlattenSpec()),
            ("d", DenseLayerSpec(27, 2)),
        ],
        seed=seed, loss="mse", optimizer="sgd", learning_rate=0.1, input_shape=(2, 6, 6),
    )
    x = np.random.default_rng(seed).normal(size=(2, 2, 6, 6))
    assert finite_difference_check(state, x, epsilon=1e-6, seed=seed) < 1e-4


@pytest.mark.parametrize("seed", GRADIENT_SEEDS)
def test_gradcheck_softmax_cross_entropy(seed):
    state = build_network(
        [("d1", DenseLayerSpec(6, 5, "relu")), ("d2", DenseLayerSpec(5, 4, "softmax"))],
        seed=seed, loss="cross_entropy", optimizer="sgd", learning_rate=0.1, input_shape=(6,),
    )
    x = np.random.default_rng(seed).normal(size=(4, 6))
    assert finite_difference_check(state, x, epsilon=1e-6, seed=seed) < 1e-4
