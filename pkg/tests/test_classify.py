import numpy as np
import pytest

from nilmkit.classify import (
    CLASS_COUNT,
    HEAD_PRESETS,
    ClassifierSpec,
    ImageSet,
    build_classifier,
    build_compact_cnn,
    build_simple_dnn,
    class_index,
    evaluate_classifier,
    load_manifest_images,
    predict_classes,
    resolve_head,
    resolve_learning_rate,
    train_classifier,
)
from nilmkit.errors import ConfigError, DataError, ShapeError
from nilmkit.nn import finite_difference_check
from nilmkit.signatures import Provenance, SpectrogramImage, SplitEntry, write_manifest


def toy_images(rng, per_class, names=("fridge", "kettle")):
    """Class 0 lights the top half, class 1 the bottom half."""
    class_names = class_index(names)
    pixels, labels = [], []
    for label, name in enumerate(sorted(names)):
        for _ in range(per_class):
            img = rng.uniform(0.0, 0.2, size=(34, 56))
            if label == 0:
                img[:17] += 0.7
            else:
                img[17:] += 0.7
            pixels.append(img)
            labels.append(class_names.index(name))
    return ImageSet(np.stack(pixels), np.array(labels), class_names)


def test_simple_dnn_parameter_count():
    state = build_simple_dnn()
    expected = 1904 * 500 + 500 + 500 * 150 + 150 + 150 * 20 + 20
    assert state.parameter_count() == expected == 1030670
    assert state.optimizer == "sgd"
    assert state.layers[-1].spec.activation == "softmax"


def test_compact_cnn_heads():
    for name, widths in (("alexnet", HEAD_PRESETS["alexnet"]), ("densenet", HEAD_PRESETS["densenet"])):
        state = build_compact_cnn(name)
        assert state.output_shapes()[-1] == (CLASS_COUNT,)
        assert state.layer("project").spec.out_features == widths[0]
    assert resolve_head("ResNet-style") == (2500, 2000, 1500, 500, 20)


def test_head_validation():
    with pytest.raises(ConfigError):
        resolve_head("vgg")
    with pytest.raises(ConfigError):
        ClassifierSpec("simple-dnn", ((10, 5), (6, 20)))
    with pytest.raises(ConfigError):
        ClassifierSpec("simple-dnn", ((10, 19),))
    with pytest.raises(ConfigError):
        build_classifier("svm")


def test_learning_rate_presets():
    assert resolve_learning_rate("low") == 0.001
    assert resolve_learning_rate("high") == 0.01
    assert resolve_learning_rate("0.005") == 0.005
    with pytest.raises(ConfigError):
        resolve_learning_rate(-1)


def test_class_index_layout():
    names = class_index(["kettle", "fridge", "kettle"])
    assert len(names) == CLASS_COUNT
    assert names[:2] == ("fridge", "kettle")
    assert names[-1] == "unknown"
    with pytest.raises(DataError):
        class_index([f"app{i}" for i in range(20)])


def test_compact_cnn_gradients(rng):
    state = build_compact_cnn((64, 20), seed=1, image_shape=(10, 10))
    x = rng.uniform(size=(2, 1, 10, 10))
    assert finite_difference_check(state, x, epsilon=1e-5, sample=8) < 1e-4


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_simple_dnn_learns_separable_images(rng, seed):
    train, test = toy_images(rng, 20), toy_images(rng, 5)
    state = build_simple_dnn(seed=seed, learning_rate=0.01)
    state, history = train_classifier(state, train, test, epochs=20, batch_size=8, seed=seed)
    assert len(history.metrics) == 20
    assert history.metrics[-1] == 100.0
    report = evaluate_classifier(state, test)
    assert report.metrics.accuracy == 100.0
    assert report.populated == ["fridge", "kettle"]
    assert report.confusion.counts.shape == (CLASS_COUNT, CLASS_COUNT)
    assert report.metrics.macro_f1 == pytest.approx(1.0)
    assert state.meta["classes"][:2] == ["fridge", "kettle"]


def test_train_rejects_class_missing_from_train(rng):
    train = toy_images(rng, 3, names=("fridge",))
    test = ImageSet(np.zeros((1, 34, 56)), np.array([1]), train.class_names)
    with pytest.raises(DataError):
        train_classifier(build_simple_dnn(), train, test, epochs=1, batch_size=2, seed=0)


def test_predict_rejects_wrong_image_size(rng):
    with pytest.raises(ShapeError):
        predict_classes(build_simple_dnn(), rng.uniform(size=(2, 30, 56)))


def test_load_manifest_images(tmp_path, rng):
    entries = []
    for i, label in enumerate(["fridge", "kettle", "fridge"]):
        pixels = rng.uniform(size=(34, 56))
        img = SpectrogramImage(pixels, "fused", label, Provenance("2", 3, i * 100))
        entries.append(SplitEntry(img, "train" if i < 2 else "test"))
    path = write_manifest(entries, str(tmp_path))
    train = load_manifest_images(path, "train")
    assert len(train) == 2
    assert train.pixels.shape == (2, 34, 56)
    assert sorted(train.class_names[i] for i in train.labels) == ["fridge", "kettle"]
    test = load_manifest_images(path, "test", train.class_names)
    assert test.class_names == train.class_names
    with pytest.raises(DataError):
        load_manifest_images(path, "validation")
