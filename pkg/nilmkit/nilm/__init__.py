"""Seq2-[3]point disaggregation, transfer learning and evaluation."""

from nilmkit.nilm.evaluate import (
    APPLIANCE_THRESHOLDS,
    EvalReport,
    SiteEvalReport,
    evaluate_appliance,
    site_evaluate,
    site_windows,
    threshold_accuracy,
    threshold_for,
    write_eval_csv,
)
from nilmkit.nilm.model import (
    CONV_TABLE,
    Seq23PointSpec,
    StitchedSeries,
    build_seq23point,
    predict_series,
    predict_windows,
    spec_of,
    train_appliance,
    transfer_train,
)
