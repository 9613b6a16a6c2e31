"""Appliance identification from signature images."""

from nilmkit.classify.model import (
    CLASS_COUNT,
    HEAD_PRESETS,
    LEARNING_RATE_PRESETS,
    ClassifierSpec,
    build_classifier,
    build_compact_cnn,
    build_simple_dnn,
    resolve_head,
    resolve_learning_rate,
)
from nilmkit.classify.train import (
    ClassifierReport,
    ImageSet,
    class_index,
    evaluate_classifier,
    load_manifest_images,
    predict_classes,
    train_classifier,
)
