"""
Command-line entry point: one subcommand per pipeline stage.

    python -m nilmkit ingest synth --preset two-appliance --out out/
    python -m nilmkit nilm train --pairs out/kettle_train.csv --out out/
    python -m nilmkit nilm eval --ckpt out/kettle.ckpt --pairs out/kettle_test.csv --tau 0.1

Every run writes `run_manifest.json` into its output directory.
"""

import argparse
import json
import logging
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

import nilmkit
from nilmkit import behavior, metrics
from nilmkit.classify import (
    build_classifier,
    evaluate_classifier,
    load_manifest_images,
    resolve_learning_rate,
    train_classifier,
)
from nilmkit.config import RunConfig, SafeValue
from nilmkit.errors import DataError, NilmError
from nilmkit.ingest import (
    NormStats,
    SyncedHouse,
    build_appliance_pair_file,
    build_site_file,
    compute_norm_stats,
    denormalize,
    load_synth_config,
    normalize,
    parse_redd_house,
    parse_refit_house,
    read_norm_stats,
    read_pair_csv,
    read_site_csv,
    synchronize_house,
    synth_config_from_dict,
    synth_generate,
    synth_site_generate,
    write_norm_stats,
    write_pair_csv,
    write_site_csv,
    write_synced_csv,
)
from nilmkit.log import configure_logging
from nilmkit.nilm import (
    build_seq23point,
    evaluate_appliance,
    predict_series,
    site_evaluate,
    site_windows,
    spec_of,
    threshold_for,
    train_appliance,
    transfer_train,
    write_eval_csv,
)
from nilmkit.nn import load_checkpoint
from nilmkit.signatures import (
    AugmentConfig,
    CwtConfig,
    Provenance,
    SlidingConfig,
    SpectrogramImage,
    StftConfig,
    load_png,
    read_manifest,
    sliding_spectrogram_dataset,
    split_train_test,
    write_manifest,
)
from nilmkit.signatures.dataset import MAX_AUGMENTED_FRACTION, SplitEntry
from nilmkit.windowing import (
    WindowConfig,
    build_windows,
    cache_key,
    load_window_cache,
    save_window_cache,
)

logger = logging.getLogger(__name__)

RUN_MANIFEST = "run_manifest.json"


class Run:
    """Resolved config, seed and output directory for one invocation; collects outputs."""

    def __init__(self, args: argparse.Namespace, config: RunConfig):
        self.args = args
        self.config = config
        self.seed = config.seed
        self.out = args.out or config.output_root
        self.outputs: List[str] = []
        os.makedirs(self.out, exist_ok=True)

    def path(self, name: str) -> str:
        """Path under the output directory, recorded in the manifest."""
        full = os.path.join(self.out, name)
        self.outputs.append(full)
        return full

    def block(self, name: str) -> Dict:
        return self.config.block(name)


# --- shared helpers ------------------------------------------------------------

def _window_config(run: Run, length: Optional[int] = None) -> WindowConfig:
    block = run.block("windows")
    args = run.args
    return WindowConfig(
        length=length or getattr(args, "length", None) or SafeValue.get_int(block, "length", 1000),
        offset=getattr(args, "offset", None) or SafeValue.get_int(block, "offset", 35),
        budget=getattr(args, "budget", None) or SafeValue.get_int(block, "budget", 20000),
    )


def _train_params(run: Run, block_name: str) -> Dict:
    block = run.block(block_name)
    args = run.args
    return {
        "epochs": args.epochs or SafeValue.get_int(block, "epochs", 50),
        "batch_size": args.batch_size or SafeValue.get_int(block, "batch_size", 64),
        "learning_rate": args.lr or SafeValue.get_float(block, "learning_rate", 0.001),
        "hidden_units": args.hidden_units or SafeValue.get_int(block, "hidden_units", 1300),
    }


def _appliance_name(path: str, explicit: Optional[str]) -> str:
    if explicit:
        return explicit
    stem = os.path.splitext(os.path.basename(path))[0]
    for suffix in ("_train", "_test"):
        if stem.endswith(suffix):
            return stem[: -len(suffix)]
    return stem


def _stats_pair(meta: Dict, key: str) -> NormStats:
    if key not in meta:
        raise DataError(f"checkpoint lacks '{key}' normalization statistics")
    mu, sigma = meta[key]
    return NormStats(float(mu), float(sigma))


def _write_curve(path: str, losses: Sequence[float], extra: Optional[Sequence[float]] = None,
                 extra_name: str = "test_accuracy") -> None:
    data = {"epoch": np.arange(1, len(losses) + 1), "loss": losses}
    if extra:
        data[extra_name] = extra
    pd.DataFrame(data).to_csv(path, index=False, float_format="%.6f", lineterminator="\n")


def _write_text(path: str, text: str) -> None:
    with open(path, "w") as f:
        f.write(text)


def _pairs_from_house(run: Run, synced: SyncedHouse, appliances: Sequence[str]) -> None:
    ratio = SafeValue.get_float(run.block("ingest"), "split_ratio", 0.8)
    write_synced_csv(synced, run.path("synced.csv"))
    for name in appliances or sorted(synced.appliances):
        train, test = build_appliance_pair_file(synced, name, ratio)
        write_pair_csv(train, run.path(f"{name}_train.csv"))
        write_pair_csv(test, run.path(f"{name}_test.csv"))
        logger.info("%s: %d train / %d test rows", name, len(train), len(test))


# --- ingest --------------------------------------------------------------------

def cmd_ingest(run: Run) -> None:
    args = run.args
    appliances = args.appliance or run.block("ingest").get("appliances", [])
    if args.source == "redd":
        house = parse_redd_house(args.house_dir)
        synced = synchronize_house(house.channels, house.labels)
        logger.info("gap counts: %s", synced.gap_counts)
    elif args.source == "refit":
        house = parse_refit_house(args.csv)
        t = house.aggregate.timestamps
        synced = SyncedHouse(
            timestamps=t, mains1=house.aggregate.values.copy(), mains2=np.zeros(len(t)),
            appliances={name: s.values.copy() for name, s in house.appliances.items()},
            gap_counts={"mains1": 0, "mains2": len(t)},
        )
    else:
        if args.synth_config:
            synth = load_synth_config(args.synth_config, run.seed)
        else:
            synth = synth_config_from_dict({
                "preset": args.preset, "length": args.length, "noise_level": args.noise, "seed": run.seed,
            })
        synced = synth_generate(synth)
    _pairs_from_house(run, synced, appliances)


# --- windows -------------------------------------------------------------------

def cmd_windows(run: Run) -> None:
    args = run.args
    pair = read_pair_csv(args.pairs)
    stem = os.path.splitext(os.path.basename(args.pairs))[0]
    if args.stats_from:
        reference = read_pair_csv(args.stats_from)
    else:
        reference = pair
    agg_stats = compute_norm_stats(reference.aggregate)
    app_stats = compute_norm_stats(reference.values)
    config = _window_config(run)
    aggregate = normalize(pair.aggregate, agg_stats)
    appliance = normalize(pair.values, app_stats)
    key = cache_key(config, aggregate, appliance)
    cache_path = run.path(f"{stem}.windows")
    batch = load_window_cache(cache_path, key)
    if batch is None:
        batch = build_windows(aggregate, appliance, config)
        save_window_cache(batch, key, cache_path)
    write_norm_stats(agg_stats, run.path(f"{stem}_aggregate_stats.csv"))
    write_norm_stats(app_stats, run.path(f"{stem}_appliance_stats.csv"))
    print(f"windows: {len(batch)} x {config.length} (offset {config.offset}, budget {config.budget})")


# --- nilm ----------------------------------------------------------------------

def _nilm_batch(run: Run, pair, agg_stats: NormStats, app_stats: NormStats, length: int):
    config = _window_config(run, length)
    return build_windows(normalize(pair.aggregate, agg_stats), normalize(pair.values, app_stats), config)


def cmd_nilm(run: Run) -> None:
    args = run.args
    action = args.action
    if action in ("train", "transfer"):
        appliance = _appliance_name(args.pairs, args.appliance)
        pair = read_pair_csv(args.pairs, appliance)
        params = _train_params(run, "nilm")
        agg_stats = compute_norm_stats(pair.aggregate)
        app_stats = compute_norm_stats(pair.values)
        if action == "train":
            length = _window_config(run).length
            state = build_seq23point(run.seed, length, params["hidden_units"], params["learning_rate"])
        else:
            base = load_checkpoint(args.base)
            length = spec_of(base).window_length
            state = base
        batch = _nilm_batch(run, pair, agg_stats, app_stats, length)
        meta = {"appliance": appliance, "aggregate_stats": [agg_stats.mu, agg_stats.sigma],
                "appliance_stats": [app_stats.mu, app_stats.sigma]}
        ckpt = run.path(f"{appliance}.ckpt")
        if action == "train":
            state.meta.update(meta)
            state, history = train_appliance(state, batch, params["epochs"], params["batch_size"],
                                             run.seed, ckpt)
        else:
            base_meta = dict(state.meta)
            state.meta.update(meta)
            state.meta["base_appliance"] = base_meta.get("appliance", "")
            state, history = transfer_train(state, batch, params["epochs"], params["batch_size"],
                                            run.seed, ckpt)
        _write_curve(run.path(f"{appliance}_loss.csv"), history.losses)
        print(f"{appliance}: final loss {history.losses[-1]:.6f} after {len(history.losses)} epoch(s)")
        return

    state = load_checkpoint(args.ckpt)
    spec = spec_of(state)
    appliance = args.appliance or state.meta.get("appliance") or _appliance_name(args.pairs, None)
    pair = read_pair_csv(args.pairs, appliance)
    agg_stats = _stats_pair(state.meta, "aggregate_stats")
    app_stats = _stats_pair(state.meta, "appliance_stats")
    if action == "eval":
        tau = args.tau if args.tau is not None else threshold_for(appliance)
        batch = _nilm_batch(run, pair, agg_stats, app_stats, spec.window_length)
        report = evaluate_appliance(state, batch, tau, appliance)
        write_eval_csv(report, run.path(f"{appliance}_eval.csv"))
        summary = report.summary()
        _write_text(run.path(f"{appliance}_eval.txt"), summary)
        print(summary, end="")
    else:
        stitched = predict_series(state, normalize(pair.aggregate, agg_stats),
                                  _window_config(run, spec.window_length))
        frame = pd.DataFrame({
            "index": np.arange(len(pair)),
            "estimate": denormalize(stitched.values, app_stats),
            "appliance": pair.values,
            "coverage": stitched.coverage,
        })
        frame.to_csv(run.path(f"{appliance}_series.csv"), index=False, float_format="%.6f",
                     lineterminator="\n")
        print(f"{appliance}: {int(stitched.covered.sum())} of {len(pair)} positions covered")


# --- site ----------------------------------------------------------------------

def cmd_site(run: Run) -> None:
    args = run.args
    ratio = SafeValue.get_float(run.block("ingest"), "split_ratio", 0.8)
    if args.action == "build":
        if args.pairs:
            pair = read_pair_csv(args.pairs)
            site = build_site_file(pair.aggregate, pair.values)
        else:
            site = synth_site_generate(args.length, run.seed, args.noise)
        train, test = site.split(ratio)
        write_site_csv(train, run.path("site_train.csv"))
        write_site_csv(test, run.path("site_test.csv"))
        print(f"site: {len(train)} train / {len(test)} test rows")
    elif args.action == "train":
        site = read_site_csv(args.site)
        params = _train_params(run, "site")
        stats = compute_norm_stats(site.aggregate)
        config = _window_config(run)
        state = build_seq23point(run.seed, config.length, params["hidden_units"], params["learning_rate"])
        state.meta.update({"appliance": "site", "aggregate_stats": [stats.mu, stats.sigma]})
        batch = site_windows(site, stats, config)
        state, history = train_appliance(state, batch, params["epochs"], params["batch_size"],
                                         run.seed, run.path("site.ckpt"))
        write_norm_stats(stats, run.path("site_stats.csv"))
        _write_curve(run.path("site_loss.csv"), history.losses)
        print(f"site: final loss {history.losses[-1]:.6f}")
    else:
        state = load_checkpoint(args.ckpt)
        spec = spec_of(state)
        stats = read_norm_stats(args.stats) if args.stats else _stats_pair(state.meta, "aggregate_stats")
        report = site_evaluate(state, read_site_csv(args.site), stats, _window_config(run, spec.window_length))
        metrics.write_confusion_csv(report.confusion, run.path("site_confusion.csv"))
        summary = report.summary()
        _write_text(run.path("site_eval.txt"), summary)
        print(summary, end="")


# --- signatures ----------------------------------------------------------------

def _signature_configs(run: Run):
    block = run.block("signatures")
    sliding = SlidingConfig(
        max_points=SafeValue.get_int(block, "max_points", 300),
        offset=SafeValue.get_int(block, "offset", 150),
        max_iterations=SafeValue.get_int(block, "max_iterations", 1000),
    )
    cwt = CwtConfig(SafeValue.get_int(block, "scale_min", 1), SafeValue.get_int(block, "scale_max", 500))
    stft = StftConfig(SafeValue.get_int(block, "stft_segment", 64), SafeValue.get_int(block, "stft_hop", 32),
                      SafeValue.get_str(block, "stft_window", "hann"))
    augment = AugmentConfig(
        rotation_range=tuple(float(v) for v in block.get("rotation_range", (-15.0, 15.0))),
        shear_range=tuple(float(v) for v in block.get("shear_range", (-0.2, 0.2))),
        min_crop_fraction=SafeValue.get_float(block, "min_crop_fraction", 0.8),
    )
    size = (SafeValue.get_int(block, "height", 34), SafeValue.get_int(block, "width", 56))
    return sliding, cwt, stft, augment, size


def _originals_from_manifest(path: str) -> List[SpectrogramImage]:
    """Original images listed in a manifest; augmented rows are regenerated by the split."""
    frame = read_manifest(path)
    root = os.path.dirname(path)
    images = []
    for row in frame.to_dict("records"):
        if not int(row["original"]):
            continue
        images.append(SpectrogramImage(
            pixels=load_png(os.path.join(root, row["path"])),
            kind=row["kind"],
            label=row["class"],
            provenance=Provenance(str(row["house"]), int(row["channel"]), int(row["start"])),
        ))
    if not images:
        raise DataError(f"manifest {path} lists no original images")
    return images


def cmd_signatures(run: Run) -> None:
    args = run.args
    sliding, cwt, stft, augment, (height, width) = _signature_configs(run)
    if args.action == "generate":
        house = parse_redd_house(args.house_dir)
        house_id = args.house_id or os.path.basename(os.path.normpath(args.house_dir))
        channels = args.channel or sorted(ch for ch in house.channels if house.labels.get(ch) != "mains")
        entries = []
        for channel in channels:
            if channel not in house.channels:
                raise DataError(f"house {house_id} has no channel {channel}")
            label = house.labels.get(channel, f"channel_{channel}")
            images = sliding_spectrogram_dataset(house.channels[channel].values, label, house_id, channel,
                                                 sliding, args.transform, cwt, stft, height, width)
            entries.extend(SplitEntry(img, "") for img in images)
        manifest = write_manifest(entries, run.out)
    else:
        images = _originals_from_manifest(args.manifest)
        classes = sorted({img.label for img in images})
        block = run.block("signatures")
        train_total = args.train or SafeValue.get_int(block, "train_total", 600)
        test_total = args.test or SafeValue.get_int(block, "test_total", 200)
        if train_total % len(classes) or test_total % len(classes):
            logger.warning("totals %d/%d are not multiples of %d classes; rounding down per class",
                           train_total, test_total, len(classes))
        limit = args.max_augmented_fraction
        if limit is None:
            limit = SafeValue.get_float(block, "max_augmented_fraction", MAX_AUGMENTED_FRACTION)
        entries = split_train_test(images, train_total // len(classes), test_total // len(classes),
                                   run.seed, augment, limit)
        manifest = write_manifest(entries, run.out)
    run.outputs.append(manifest)
    for rel in read_manifest(manifest)["path"]:
        run.outputs.append(os.path.join(run.out, rel))
    print(f"manifest: {manifest}")


# --- classify ------------------------------------------------------------------

def cmd_classify(run: Run) -> None:
    args = run.args
    block = run.block("classify")
    if args.action == "train":
        model = args.model or SafeValue.get_str(block, "model", "simple-dnn")
        head = args.head or SafeValue.get_str(block, "head", "resnet")
        rate = resolve_learning_rate(args.lr if args.lr is not None else block.get("learning_rate", 0.001))
        train = load_manifest_images(args.manifest, "train")
        test = load_manifest_images(args.manifest, "test", train.class_names)
        state = build_classifier(model, head, run.seed, rate, tuple(train.pixels.shape[1:]))
        state, history = train_classifier(
            state, train, test,
            args.epochs or SafeValue.get_int(block, "epochs", 20),
            args.batch_size or SafeValue.get_int(block, "batch_size", 32),
            run.seed, checkpoint_path=run.path("classifier.ckpt"),
        )
        _write_curve(run.path("classifier_curve.csv"), history.losses, history.metrics)
        print(f"{model}: final loss {history.losses[-1]:.6f}, test accuracy {history.metrics[-1]:.2f}%")
    else:
        state = load_checkpoint(args.ckpt)
        classes = state.meta.get("classes")
        if not classes:
            raise DataError("checkpoint has no class list; was it trained by 'classify train'?")
        test = load_manifest_images(args.manifest, args.split or "test", classes)
        report = evaluate_classifier(state, test)
        metrics.write_confusion_csv(report.confusion, run.path("confusion.csv"))
        summary = metrics.format_summary(report.metrics, title=f"{state.meta.get('model', 'classifier')}")
        _write_text(run.path("classifier_eval.txt"), summary)
        print(summary, end="")


# --- behavior ------------------------------------------------------------------

def _behavior_series(house_dir: str, appliance: str):
    house = parse_redd_house(house_dir)
    matches = [ch for ch, name in sorted(house.labels.items()) if name == appliance and ch in house.channels]
    if not matches:
        raise DataError(f"no '{appliance}' channel in {house_dir}")
    return house.channels[matches[0]]


def cmd_behavior(run: Run) -> None:
    args = run.args
    days = args.days or SafeValue.get_float(run.block("behavior"), "days", 2)
    entries = []
    for i, house_dir in enumerate(args.house_dir):
        house_id = args.house[i] if args.house and i < len(args.house) else os.path.basename(
            os.path.normpath(house_dir))
        entries.append((house_id, _behavior_series(house_dir, args.appliance)))
    house_id, series = entries[0]
    period = behavior.period_for_days(series, days)
    summary = behavior.power_summary(series, period, args.appliance, house_id)
    histogram = behavior.transient_histogram(series.between(*period))
    stem = f"{args.appliance}_h{house_id}"
    behavior.write_summary_csv(summary, run.path(f"{stem}_summary.csv"))
    behavior.write_histogram_csv(histogram, run.path(f"{stem}_transients.csv"))
    if len(entries) > 1:
        frame = behavior.compare_homes(entries, args.appliance, days)
        behavior.write_comparison_csv(frame, run.path(f"{args.appliance}_homes.csv"))
    print(f"{args.appliance} house {house_id}: max {summary.max_watts:.1f} W, mean {summary.mean_watts:.1f} W")


# --- report --------------------------------------------------------------------

def cmd_report(run: Run) -> None:
    args = run.args
    kind = args.kind
    if kind == "overlay":
        frame = pd.read_csv(args.input)
        gt, pd_ = ("gt", "pd") if "gt" in frame.columns else ("appliance", "estimate")
        payload = {"gt": frame[gt].to_numpy(), "pd": frame[pd_].to_numpy(), "title": args.title or ""}
    elif kind == "histogram":
        frame = pd.read_csv(args.input)
        payload = {"counts": dict(zip(frame["state"], frame["count"])), "title": args.title or ""}
    elif kind == "confusion":
        frame = pd.read_csv(args.input, dtype={"truth": str})
        payload = {"counts": frame.drop(columns=["truth"]).to_numpy(), "class_names": list(frame["truth"])}
    else:
        manifest = read_manifest(args.input)
        root = os.path.dirname(args.input)
        head = manifest.head(args.limit)
        payload = {"images": [load_png(os.path.join(root, p)) for p in head["path"]],
                   "titles": list(head["class"])}
    name = args.name or os.path.splitext(os.path.basename(args.input))[0] + f"_{kind}"
    paths = metrics.emit_plot_data(kind, payload, run.out, name)
    run.outputs.extend(paths.values())
    print(f"report: {paths['svg']}")


# --- parser ----------------------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON run configuration")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="global seed")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
    common.add_argument("-q", "--quiet", action="count", default=argparse.SUPPRESS)
    return common


def _training_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--hidden-units", type=int)


def _window_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--length", type=int, help="window length L")
    parser.add_argument("--offset", type=int, help="window stride")
    parser.add_argument("--budget", type=int, help="maximum windows B")


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="nilmkit", parents=[common],
                                     description="NILM disaggregation and appliance signature toolkit.")
    parser.add_argument("--version", action="version", version=f"nilmkit {nilmkit.__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    ingest = sub.add_parser("ingest", help="parse a dataset into pair files", parents=[common])
    ingest_sub = ingest.add_subparsers(dest="source", required=True)
    redd = ingest_sub.add_parser("redd", parents=[common])
    redd.add_argument("--house-dir", required=True)
    refit = ingest_sub.add_parser("refit", parents=[common])
    refit.add_argument("--csv", required=True)
    synth = ingest_sub.add_parser("synth", parents=[common])
    synth.add_argument("--preset", default="two-appliance")
    synth.add_argument("--synth-config", help="JSON file describing the appliances")
    synth.add_argument("--length", type=int, default=50000)
    synth.add_argument("--noise", type=float, default=0.05)
    for p in (redd, refit, synth):
        p.add_argument("--appliance", action="append", help="appliance column (repeatable)")
    ingest.set_defaults(handler=cmd_ingest)

    windows = sub.add_parser("windows", help="build sliding windows", parents=[common])
    windows_sub = windows.add_subparsers(dest="action", required=True)
    wbuild = windows_sub.add_parser("build", parents=[common])
    wbuild.add_argument("--pairs", required=True)
    wbuild.add_argument("--stats-from", help="pair file supplying normalization stats")
    _window_flags(wbuild)
    windows.set_defaults(handler=cmd_windows)

    nilm = sub.add_parser("nilm", help="train and evaluate the disaggregator", parents=[common])
    nilm_sub = nilm.add_subparsers(dest="action", required=True)
    ntrain = nilm_sub.add_parser("train", parents=[common])
    ntransfer = nilm_sub.add_parser("transfer", parents=[common])
    ntransfer.add_argument("--base", required=True, help="checkpoint of the base appliance")
    for p in (ntrain, ntransfer):
        p.add_argument("--pairs", required=True)
        p.add_argument("--appliance")
        _training_flags(p)
        _window_flags(p)
    neval = nilm_sub.add_parser("eval", parents=[common])
    neval.add_argument("--tau", type=float, help="threshold in normalized units")
    npredict = nilm_sub.add_parser("predict", parents=[common])
    for p in (neval, npredict):
        p.add_argument("--ckpt", required=True)
        p.add_argument("--pairs", required=True)
        p.add_argument("--appliance")
        _window_flags(p)
    nilm.set_defaults(handler=cmd_nilm)

    site = sub.add_parser("site", help="site-NILM four-class pipeline", parents=[common])
    site_sub = site.add_subparsers(dest="action", required=True)
    sbuild = site_sub.add_parser("build", parents=[common])
    sbuild.add_argument("--pairs", help="pair file to label; synthetic computer-site data otherwise")
    sbuild.add_argument("--length", type=int, default=20000)
    sbuild.add_argument("--noise", type=float, default=0.0)
    site_note = "the model regresses the aggregate column; the appliance column is not used for learning"
    strain = site_sub.add_parser("train", parents=[common], help=f"train the site model ({site_note})",
                                 description=f"Train on site windows; {site_note}.")
    strain.add_argument("--site", required=True)
    _training_flags(strain)
    _window_flags(strain)
    seval = site_sub.add_parser("eval", parents=[common], help="classify denormalized mid-point predictions",
                                description=f"Score A-D classes of predicted aggregate watts; {site_note}.")
    seval.add_argument("--ckpt", required=True)
    seval.add_argument("--site", required=True)
    seval.add_argument("--stats", help="normalization stats of the training split")
    _window_flags(seval)
    site.set_defaults(handler=cmd_site)

    sig = sub.add_parser("signatures", help="generate and split signature images", parents=[common])
    sig_sub = sig.add_subparsers(dest="action", required=True)
    generate = sig_sub.add_parser("generate", parents=[common])
    generate.add_argument("--house-dir", required=True)
    generate.add_argument("--house-id")
    generate.add_argument("--channel", type=int, action="append")
    generate.add_argument("--transform", choices=("wavelet", "stft", "fused"), default="wavelet")
    split = sig_sub.add_parser("split", parents=[common])
    split.add_argument("--manifest", required=True)
    split.add_argument("--train", type=int, help="total train images")
    split.add_argument("--test", type=int, help="total test images")
    split.add_argument("--max-augmented-fraction", type=float,
                       help="largest share of augmented images per class and side (default 0.25)")
    sig.set_defaults(handler=cmd_signatures)

    classify = sub.add_parser("classify", help="train and evaluate appliance classifiers", parents=[common])
    classify_sub = classify.add_subparsers(dest="action", required=True)
    ctrain = classify_sub.add_parser("train", parents=[common])
    ctrain.add_argument("--manifest", required=True)
    ctrain.add_argument("--model", choices=("simple-dnn", "compact-cnn"))
    ctrain.add_argument("--head", choices=("resnet", "alexnet", "densenet"))
    ctrain.add_argument("--lr", help="learning rate or preset (low, high)")
    ctrain.add_argument("--epochs", type=int)
    ctrain.add_argument("--batch-size", type=int)
    ceval = classify_sub.add_parser("eval", parents=[common])
    ceval.add_argument("--ckpt", required=True)
    ceval.add_argument("--manifest", required=True)
    ceval.add_argument("--split", help="manifest split to score (default: test)")
    classify.set_defaults(handler=cmd_classify)

    beh = sub.add_parser("behavior", help="power summary and transient histogram", parents=[common])
    beh.add_argument("--house-dir", action="append", required=True, help="REDD house directory (repeatable)")
    beh.add_argument("--house", action="append", help="house id per --house-dir")
    beh.add_argument("--appliance", required=True)
    beh.add_argument("--days", type=float)
    beh.set_defaults(handler=cmd_behavior)

    report = sub.add_parser("report", help="plot data and SVG charts", parents=[common])
    report.add_argument("--kind", choices=metrics.PLOT_KINDS, required=True)
    report.add_argument("--input", required=True, help="eval, histogram or confusion CSV, or a manifest")
    report.add_argument("--name")
    report.add_argument("--title")
    report.add_argument("--limit", type=int, default=8, help="spectrogram panels to draw")
    report.set_defaults(handler=cmd_report)
    return parser


def _load_run_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.load(getattr(args, "config", None))
    seed = getattr(args, "seed", None)
    if seed is not None:
        config.seed = seed
    config.validate()
    return config


def write_run_manifest(run: Run, command: str) -> str:
    """Subcommand, config hash, seed, versions and sorted outputs; no timestamps."""
    manifest = {
        "command": command,
        "config_hash": run.config.config_hash(),
        "seed": run.seed,
        "versions": {"nilmkit": nilmkit.__version__, "numpy": np.__version__},
        "outputs": sorted({os.path.relpath(p, run.out).replace(os.sep, "/") for p in run.outputs}),
    }
    path = os.path.join(run.out, RUN_MANIFEST)
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, dispatch, and map errors to exit codes."""
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 2
    configure_logging(getattr(args, "verbose", 0) - getattr(args, "quiet", 0))
    handler: Callable[[Run], None] = args.handler
    try:
        config = _load_run_config(args)
        current = Run(argparse.Namespace(**{"out": None, **vars(args)}), config)
        handler(current)
        command = " ".join(filter(None, [args.command, getattr(args, "source", None),
                                         getattr(args, "action", None)]))
        write_run_manifest(current, command)
    except NilmError as e:
        print(f"error: {e.kind}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: IOError: {e}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    """Console entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
