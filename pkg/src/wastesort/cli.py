"""Operator command line.

Subcommands: fetch-data, train, evaluate, export, predict, serve. Flags
mirror RunConfig fields in kebab-case; a JSON config file may set any of
them, with explicit flags taking precedence. Every subcommand writes the
fully resolved configuration next to its outputs so a run can be
reproduced from its artifacts alone.

Machine-readable results go to stdout as JSON; logs go to stderr; exit
status is 0 on success and nonzero on any error.
"""

from __future__ import annotations

import functools
import json
import logging
import socket
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import click
import numpy as np

from .backbones import BENCHMARK_BACKBONES, UnknownBackbone, WeightsUnavailable
from .classifier import (
    EmptyTrainSplit,
    HeadConfig,
    NonFiniteLoss,
    SerializationFailure,
    TrainConfig,
    build_classifier,
    export_portable,
    load_checkpoint,
    save_checkpoint,
    save_history_csv,
    train as train_model,
)
from .dataset import (
    DecodeFailure,
    EmptyCorpus,
    InvalidRatios,
    MissingClassDirectory,
    UnknownDirectory,
    load_corpus,
    load_split_manifest,
    preprocess_file,
    save_split_manifest,
    split_corpus,
)
from .fetch import DEFAULT_DATASET_URL, ChecksumMismatch, ExtractFailure, NetworkFailure, fetch_corpus
from .labels import CLASS_NAMES, UnknownLabel, label_from_index
from .metrics import confusion, confusion_to_csv, report, report_to_csv
from .portable import CorruptArtifact, MissingSidecar, ShapeMismatch, load_portable, predict_images
from .rewards import CarbonFactorTable, InvalidFactorTable, StorageFailure, carbon_for
from .service import create_app, load_service_config, load_suggestions

logger = logging.getLogger(__name__)


class MissingManifest(FileNotFoundError):
    """Evaluation needs the split manifest written at training time."""


_DOMAIN_ERRORS = (
    MissingClassDirectory, UnknownDirectory, EmptyCorpus, InvalidRatios, DecodeFailure,
    UnknownBackbone, WeightsUnavailable, EmptyTrainSplit, NonFiniteLoss, SerializationFailure,
    CorruptArtifact, MissingSidecar, ShapeMismatch, MissingManifest,
    NetworkFailure, ChecksumMismatch, ExtractFailure,
    InvalidFactorTable, StorageFailure, UnknownLabel,
    ValueError, KeyError, OSError,
)


def _guarded(fn):
    """Map domain errors to a message on stderr and a nonzero exit."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except _DOMAIN_ERRORS as exc:
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc

    return wrapper


@dataclass
class RunConfig:
    """Merged view of config file + flags, resolved before any work runs."""

    data_root: str = "data/corpus"
    out_dir: str = "runs/latest"
    ratios: tuple[float, float, float] = (0.60, 0.13, 0.17)
    seed: int = 42
    stratify: bool = False
    backbone: str = "mobilenet_v2"
    pretrained: bool = True
    dense_widths: tuple[int, int, int] = (512, 128, 6)
    dropout_rate: float = 0.5
    hidden_activation: str = "relu"
    learning_rate: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 20
    early_stop_patience: int = 5
    fine_tune_backbone: bool = True
    augment_hflip: bool = False
    dataset_url: str = DEFAULT_DATASET_URL
    dataset_sha256: str | None = None


def resolve_run_config(ctx: click.Context, config_file: str | None) -> RunConfig:
    """defaults < config file < explicit flags (by parameter source)."""
    cfg = RunConfig()
    valid = {f.name for f in fields(RunConfig)}

    if config_file:
        data = json.loads(Path(config_file).read_text())
        unknown = sorted(set(data) - valid)
        if unknown:
            raise click.ClickException(f"unknown config keys in {config_file}: {unknown}")
        for key, value in data.items():
            setattr(cfg, key, value)

    source = click.core.ParameterSource
    for name, value in ctx.params.items():
        if name in valid and ctx.get_parameter_source(name) in (
            source.COMMANDLINE, source.ENVIRONMENT,
        ):
            setattr(cfg, name, value)

    cfg.ratios = tuple(float(v) for v in cfg.ratios)
    cfg.dense_widths = tuple(int(v) for v in cfg.dense_widths)
    return cfg


def _write_resolved(cfg, out_dir: Path, command: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{command}_config.json"
    payload = {"command": command, **(asdict(cfg) if hasattr(cfg, "__dataclass_fields__") else cfg)}
    path.write_text(json.dumps(payload, indent=2, default=str))
    return path


@click.group()
@click.option("-v", "--verbose", count=True, help="Increase log detail (stderr).")
def main(verbose: int):
    """Train, evaluate, export and serve the waste classifier."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,  # rebind handlers when invoked repeatedly in one process
    )


# ---------------------------------------------------------------------------
# fetch-data


@main.command("fetch-data")
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--dest", "data_root", type=str, help="Corpus destination directory.")
@click.option("--url", "dataset_url", type=str, help="Archive URL, file:// URL or local path.")
@click.option("--sha256", "dataset_sha256", type=str, help="Expected archive sha256.")
@click.pass_context
@_guarded
def fetch_data(ctx, config_file, **_kwargs):
    """Download and arrange the six-class image corpus."""
    cfg = resolve_run_config(ctx, config_file)
    counts = fetch_corpus(cfg.data_root, cfg.dataset_url, cfg.dataset_sha256)
    _write_resolved(cfg, Path(cfg.data_root), "fetch")
    click.echo(json.dumps({
        "dest": cfg.data_root,
        "counts": counts,
        "total": sum(counts.values()),
    }, indent=2))


# ---------------------------------------------------------------------------
# train


def _train_options(fn):
    options = [
        click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False)),
        click.option("--data-root", type=str),
        click.option("--out-dir", type=str),
        click.option("--ratios", nargs=3, type=float),
        click.option("--seed", type=int),
        click.option("--stratify/--no-stratify", default=False),
        click.option("--backbone", type=str),
        click.option("--pretrained/--no-pretrained", default=True),
        click.option("--dense-widths", nargs=3, type=int),
        click.option("--dropout-rate", type=float),
        click.option("--hidden-activation", type=str),
        click.option("--learning-rate", type=float),
        click.option("--batch-size", type=int),
        click.option("--max-epochs", type=int),
        click.option("--early-stop-patience", type=int),
        click.option("--fine-tune-backbone/--no-fine-tune-backbone", default=True),
        click.option("--augment-hflip/--no-augment-hflip", default=False),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _score_split(model, images):
    """Predict over labeled images and report metrics: (report, confusion)."""
    probs = predict_images(model, images)
    predictions = np.argmax(probs, axis=1)
    truth = [img.label.index for img in images]
    cm = confusion(truth, predictions.tolist())
    return report(cm), cm


def _report_as_dict(data) -> dict:
    return {
        "accuracy": data.accuracy,
        "macro_f1": data.macro_f1,
        "per_class": {
            m.name: {"precision": m.precision, "recall": m.recall, "f1": m.f1}
            for m in data.per_class
        },
    }


def _write_benchmark_csv(path: Path, rows: list[dict]) -> None:
    """Comparison table: accuracy plus per-class F1, one row per backbone.

    Each row needs keys backbone, accuracy, macro_f1 and per_class.
    """
    header = ["backbone", "accuracy", "macro_f1"] + [f"f1_{name}" for name in CLASS_NAMES]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            [row["backbone"], repr(row["accuracy"]), repr(row["macro_f1"])]
            + [repr(row["per_class"][name]["f1"]) for name in CLASS_NAMES]
        ))
    path.write_text("\n".join(lines) + "\n")


def _train_one(cfg: RunConfig, backbone_id: str, splits, run_dir: Path) -> dict:
    run_dir.mkdir(parents=True, exist_ok=True)
    head = HeadConfig(
        dense_widths=cfg.dense_widths,
        dropout_rate=cfg.dropout_rate,
        hidden_activation=cfg.hidden_activation,
    )
    train_cfg = TrainConfig(
        learning_rate=cfg.learning_rate,
        batch_size=cfg.batch_size,
        max_epochs=cfg.max_epochs,
        early_stop_patience=cfg.early_stop_patience,
        fine_tune_backbone=cfg.fine_tune_backbone,
        seed=cfg.seed,
        augment_hflip=cfg.augment_hflip,
    )
    model = build_classifier(backbone_id, head, pretrained=cfg.pretrained, seed=cfg.seed)
    model = train_model(model, splits, train_cfg)

    save_split_manifest(splits, run_dir / "split_manifest.json")
    save_history_csv(model.history, run_dir / "history.csv")
    save_checkpoint(model, run_dir / "model.pt")
    artifact = export_portable(model, run_dir / "model.onnx")

    test_report = None
    if splits.test:
        data, _ = _score_split(model, splits.test)
        (run_dir / "report.csv").write_text(report_to_csv(data))
        test_report = {"n": len(splits.test), **_report_as_dict(data)}

    last = model.history.epochs[-1] if model.history.epochs else None
    return {
        "backbone": backbone_id,
        "out_dir": str(run_dir),
        "epochs": len(model.history.epochs),
        "best_epoch": model.history.best_epoch,
        "final_train_acc": last.train_acc if last else None,
        "final_val_acc": last.val_acc if last else None,
        "test": test_report,
        "checkpoint": str(run_dir / "model.pt"),
        "artifact": str(artifact.model_path),
        "split_manifest": str(run_dir / "split_manifest.json"),
        "history_csv": str(run_dir / "history.csv"),
    }


@main.command()
@_train_options
@click.option("--all-backbones", is_flag=True, default=False,
              help="Train every benchmark backbone and write a comparison CSV.")
@click.pass_context
@_guarded
def train(ctx, config_file, all_backbones, **_kwargs):
    """Split the corpus, fit the classifier, export artifacts."""
    cfg = resolve_run_config(ctx, config_file)
    corpus = load_corpus(cfg.data_root)
    splits = split_corpus(corpus, cfg.ratios, cfg.seed, stratify=cfg.stratify)

    out_root = Path(cfg.out_dir)
    backbone_ids = list(BENCHMARK_BACKBONES) if all_backbones else [cfg.backbone]
    results = []
    for backbone_id in backbone_ids:
        run_dir = out_root / backbone_id if all_backbones else out_root
        results.append(_train_one(cfg, backbone_id, splits, run_dir))

    _write_resolved(cfg, out_root, "train")
    if all_backbones:
        scored = [
            {"backbone": r["backbone"], **r["test"]} for r in results if r["test"] is not None
        ]
        if scored:
            _write_benchmark_csv(out_root / "benchmark.csv", scored)
        click.echo(json.dumps(results, indent=2))
    else:
        click.echo(json.dumps(results[0], indent=2))


# ---------------------------------------------------------------------------
# evaluate


@main.command()
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--data-root", type=str)
@click.option("--out-dir", type=str, help="Run directory holding model.onnx (and reports).")
@click.option("--artifact", type=str, help="Explicit artifact path (default <out-dir>/model.onnx).")
@click.option("--manifest", type=str, help="Split manifest path (default next to the artifact).")
@click.option("--split", type=click.Choice(["train", "test", "validation"]), default="test")
@click.option("--all-backbones", is_flag=True, default=False,
              help="Evaluate <out-dir>/<backbone>/model.onnx for every benchmark backbone.")
@click.pass_context
@_guarded
def evaluate(ctx, config_file, artifact, manifest, split, all_backbones, **_kwargs):
    """Score an exported model on one split; write report + confusion CSVs."""
    cfg = resolve_run_config(ctx, config_file)
    corpus = load_corpus(cfg.data_root)
    out_root = Path(cfg.out_dir)

    def evaluate_artifact(artifact_path: Path, manifest_path: Path, report_dir: Path) -> dict:
        if not manifest_path.is_file():
            raise MissingManifest(f"split manifest not found: {manifest_path}")
        splits = load_split_manifest(manifest_path, corpus)
        images = getattr(splits, split)
        if not images:
            raise EmptyCorpus(f"split {split!r} is empty in {manifest_path}")
        model = load_portable(artifact_path)
        data, cm = _score_split(model, images)
        report_dir.mkdir(parents=True, exist_ok=True)
        (report_dir / "report.csv").write_text(report_to_csv(data))
        (report_dir / "confusion.csv").write_text(confusion_to_csv(cm))
        return {
            "artifact": str(artifact_path),
            "split": split,
            "n": len(images),
            **_report_as_dict(data),
            "report_csv": str(report_dir / "report.csv"),
            "confusion_csv": str(report_dir / "confusion.csv"),
        }

    if all_backbones:
        results = []
        for backbone_id in BENCHMARK_BACKBONES:
            run_dir = out_root / backbone_id
            result = evaluate_artifact(run_dir / "model.onnx",
                                       run_dir / "split_manifest.json", run_dir)
            result["backbone"] = backbone_id
            results.append(result)
        _write_benchmark_csv(out_root / "benchmark.csv", results)
        _write_resolved(cfg, out_root, "evaluate")
        click.echo(json.dumps(results, indent=2))
    else:
        artifact_path = Path(artifact) if artifact else out_root / "model.onnx"
        manifest_path = Path(manifest) if manifest else artifact_path.parent / "split_manifest.json"
        result = evaluate_artifact(artifact_path, manifest_path, out_root)
        _write_resolved(cfg, out_root, "evaluate")
        click.echo(json.dumps(result, indent=2))


# ---------------------------------------------------------------------------
# export


@main.command()
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=str, help="Output .onnx path.")
@_guarded
def export(checkpoint, out_path):
    """Convert a training checkpoint to the portable inference artifact."""
    model = load_checkpoint(checkpoint)
    artifact = export_portable(model, out_path)
    click.echo(json.dumps({
        "model": str(artifact.model_path),
        "sidecar": str(artifact.sidecar_path),
        "backbone": artifact.metadata["backbone_id"],
    }, indent=2))


# ---------------------------------------------------------------------------
# predict


@main.command()
@click.argument("image", type=str)
@click.option("--artifact", required=True, type=str)
@click.option("--factors", "factors_path", type=str, default=None,
              help="Carbon factor table JSON (default: packaged placeholders).")
@click.option("--suggestions", "suggestions_path", type=str, default=None)
@_guarded
def predict(image, artifact, factors_path, suggestions_path):
    """Classify one image offline, without the HTTP service."""
    model = load_portable(artifact)
    factors = (CarbonFactorTable.default() if factors_path is None
               else CarbonFactorTable.from_json(factors_path))
    suggestions = load_suggestions(suggestions_path)

    tensor = preprocess_file(image, model.input_size, model.normalization)
    probs = model.predict(tensor)
    index = int(np.argmax(probs))
    label = label_from_index(index)
    click.echo(json.dumps({
        "label": label.name,
        "confidence": float(probs[index]),
        "probabilities": {name: float(p) for name, p in zip(CLASS_NAMES, probs)},
        "suggestion": suggestions[label.name],
        "carbon_saved_g": carbon_for(label, factors),
        "factor_table_version": factors.version,
    }, indent=2))


# ---------------------------------------------------------------------------
# serve


def _check_port_free(host: str, port: int) -> None:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe:
        try:
            probe.bind((host, port))
        except OSError as exc:
            raise click.ClickException(f"cannot bind {host}:{port}: {exc}") from exc


@main.command()
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--artifact", type=str, default=None)
@click.option("--host", type=str, default=None)
@click.option("--port", type=int, default=None)
@click.option("--journal", type=str, default=None, help="Ledger journal path (ndjson).")
@click.option("--feedback-dir", type=str, default=None)
@click.option("--factors", type=str, default=None, help="Carbon factor table JSON.")
@click.option("--suggestions", type=str, default=None, help="Suggestion map JSON.")
@click.option("--static-dir", type=str, default=None, help="Serve a built web client from here.")
@click.option("--max-upload-bytes", type=int, default=None)
@_guarded
def serve(config_file, artifact, host, port, journal, feedback_dir, factors,
          suggestions, static_dir, max_upload_bytes):
    """Run the HTTP service (fails fast without a loadable artifact)."""
    svc = load_service_config(
        config_file,
        artifact_path=artifact,
        host=host,
        port=port,
        journal_path=journal,
        feedback_dir=feedback_dir,
        carbon_factors_path=factors,
        suggestions_path=suggestions,
        static_dir=static_dir,
        max_upload_bytes=max_upload_bytes,
    )
    if svc.artifact_path is None or not Path(svc.artifact_path).is_file():
        raise click.ClickException(f"model artifact not found: {svc.artifact_path}")
    _check_port_free(svc.host, svc.port)

    app = create_app(svc)
    _write_resolved(svc, Path(svc.feedback_dir), "serve")
    logger.info("serving on http://%s:%d", svc.host, svc.port)

    import uvicorn

    uvicorn.run(app, host=svc.host, port=svc.port, log_level="warning")


if __name__ == "__main__":
    main()
