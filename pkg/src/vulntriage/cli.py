"""Command-line entry points: sync, build, train, serve, eval.

Exit codes: 0 success, 1 operational failure (a feed refused, metrics
impossible), 2 configuration or usage problems.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from typing import Optional

import click

from .classifier.model import load_model, save_model
from .classifier.train import TrainError, train as train_model
from .config import ConfigError, PipelineConfig, load_config
from .dataset import (
    DatasetError,
    IntegrityError,
    LoadError,
    build_snapshot,
    latest_snapshot_dir,
    load_split,
    snapshot_stats,
)
from .evalkit import EvalError, agreement_study, evaluate, render_report
from .gateway import create_app, serve as run_server
from .ingest import SyncError, sync as sync_feed
from .kvstore import FileKvStore, StoreError


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(config_path: str) -> PipelineConfig:
    try:
        return load_config(config_path)
    except ConfigError as e:
        _fail(str(e), 2)


@click.group()
@click.option(
    "--config",
    "config_path",
    default="vulntriage.json",
    show_default=True,
    help="Path to the pipeline config file.",
)
@click.pass_context
def main(ctx: click.Context, config_path: str) -> None:
    """Advisory ingestion, severity dataset builds, training and serving."""
    ctx.obj = config_path


@main.command()
@click.option("--feed", "only", multiple=True, help="Sync just these feed names.")
@click.pass_obj
def sync(config_path: str, only: tuple[str, ...]) -> None:
    """Pull every enabled feed into the record store."""
    cfg = _load(config_path)
    feeds = [f for f in cfg.feeds if f.enabled]
    if only:
        known = {f.name for f in feeds}
        missing = [name for name in only if name not in known]
        if missing:
            _fail(f"unknown feed(s) {missing}; configured: {sorted(known)}", 2)
        feeds = [f for f in feeds if f.name in only]
    if not feeds:
        _fail("no enabled feeds configured", 2)
    os.makedirs(os.path.dirname(cfg.store_path) or ".", exist_ok=True)
    failures = 0
    try:
        with FileKvStore(cfg.store_path) as store:
            for feed in feeds:
                try:
                    result = sync_feed(feed, store)
                except SyncError as e:
                    failures += 1
                    click.echo(f"{feed.name}: failed: {e}", err=True)
                    continue
                click.echo(result.summary())
    except StoreError as e:
        _fail(str(e), 1)
    if failures:
        _fail(f"{failures} of {len(feeds)} feed(s) failed", 1)


@main.command()
@click.option("--json", "as_json", is_flag=True, help="Print the manifest as JSON.")
@click.pass_obj
def build(config_path: str, as_json: bool) -> None:
    """Export the store into a dated snapshot directory."""
    cfg = _load(config_path)
    try:
        with FileKvStore(cfg.store_path, writable=False) as store:
            manifest, snapshot_dir = build_snapshot(
                store,
                cfg.policy,
                cfg.snapshot_dir,
                split_ratio=cfg.split_ratio,
                min_description_chars=cfg.min_description_chars,
            )
    except (StoreError, DatasetError) as e:
        _fail(str(e), 1)
    if as_json:
        payload = dict(manifest.to_dict(), path=snapshot_dir)
        click.echo(json.dumps(payload, indent=2))
    else:
        click.echo(snapshot_stats(manifest))
        click.echo(f"written to {snapshot_dir}")


@main.command(name="train")
@click.option("--epochs", type=int, default=None, help="Override the configured epoch count.")
@click.option("--json", "as_json", is_flag=True, help="Print the training log and metrics as JSON.")
@click.pass_obj
def train_cmd(config_path: str, epochs: Optional[int], as_json: bool) -> None:
    """Train on the latest snapshot's train split, report on its test split."""
    cfg = _load(config_path)
    snapshot_dir = latest_snapshot_dir(cfg.snapshot_dir)
    if snapshot_dir is None:
        _fail(f"no snapshot under {cfg.snapshot_dir}; run build first", 1)
    train_cfg = cfg.train
    if epochs is not None:
        try:
            train_cfg = dataclasses.replace(train_cfg, epochs=epochs)
        except ValueError as e:
            _fail(str(e), 2)
    try:
        rows = load_split(snapshot_dir, "train")
        test_rows = load_split(snapshot_dir, "test")
    except (IntegrityError, LoadError) as e:
        _fail(str(e), 1)
    try:
        model, log = train_model(rows, train_cfg, eval_rows=test_rows or None)
    except TrainError as e:
        _fail(str(e), 1)

    os.makedirs(os.path.dirname(cfg.model_path) or ".", exist_ok=True)
    save_model(model, cfg.model_path)
    log_path = cfg.train_log_path or cfg.model_path + ".train-log.jsonl"
    with open(log_path, "w", encoding="utf-8") as fh:
        for entry in log:
            fh.write(json.dumps(entry) + "\n")

    report = None
    if test_rows:
        pairs = [(row.label, model.predict_text(row.description).label) for row in test_rows]
        report = evaluate(pairs)
    if as_json:
        payload = {
            "snapshot": snapshot_dir,
            "model_path": cfg.model_path,
            "log_path": log_path,
            "epochs": log,
            "test_report": report.to_dict() if report else None,
        }
        click.echo(json.dumps(payload, indent=2))
    else:
        for entry in log:
            eval_part = (
                f"  eval acc {entry['eval_accuracy']:.4f}"
                if entry["eval_accuracy"] is not None
                else ""
            )
            click.echo(
                f"epoch {entry['epoch']}: loss {entry['loss']:.4f}  "
                f"train acc {entry['train_accuracy']:.4f}{eval_part}"
            )
        if report:
            click.echo(render_report(report))
        click.echo(f"model written to {cfg.model_path}")
        click.echo(f"epoch log written to {log_path}")


@main.command()
@click.pass_obj
def serve(config_path: str) -> None:
    """Run the prediction gateway until interrupted."""
    cfg = _load(config_path)
    try:
        app = create_app(cfg.backends)
    except Exception as e:
        _fail(f"gateway startup failed: {e}", 2)
    click.echo(f"serving {len(cfg.backends)} model(s) on {cfg.bind}")
    try:
        run_server(app, cfg.bind)
    except KeyboardInterrupt:
        pass
    sys.exit(0)


@main.command(name="eval")
@click.option(
    "--predictions",
    "predictions_path",
    default=None,
    help="Prediction log (JSONL of id, label, timestamp). Defaults to the configured path.",
)
@click.option(
    "--snapshot",
    "snapshot_dir",
    default=None,
    help="Snapshot holding official labels. Defaults to the latest one.",
)
@click.option("--json", "as_json", is_flag=True, help="Print the study as JSON.")
@click.pass_obj
def eval_cmd(
    config_path: str,
    predictions_path: Optional[str],
    snapshot_dir: Optional[str],
    as_json: bool,
) -> None:
    """Score logged predictions against a later snapshot's official labels."""
    cfg = _load(config_path)
    predictions_path = predictions_path or cfg.predictions_log_path
    if predictions_path is None:
        _fail("no prediction log: pass --predictions or set predictions_log in the config", 2)
    snapshot_dir = snapshot_dir or latest_snapshot_dir(cfg.snapshot_dir)
    if snapshot_dir is None:
        _fail(f"no snapshot under {cfg.snapshot_dir}; run build first", 1)
    try:
        result = agreement_study(predictions_path, snapshot_dir, cfg.policy)
    except (EvalError, IntegrityError, LoadError, OSError) as e:
        _fail(str(e), 1)
    if as_json:
        payload = {
            "snapshot": snapshot_dir,
            "total_predictions": result.total_predictions,
            "matched": result.matched,
            "skipped_unknown_id": result.skipped_unknown_id,
            "skipped_no_official_label": result.skipped_no_official_label,
            "skipped_not_prior": result.skipped_not_prior,
            "report": result.report.to_dict(),
        }
        click.echo(json.dumps(payload, indent=2))
    else:
        click.echo(
            f"matched {result.matched} of {result.total_predictions} logged predictions "
            f"(unknown id: {result.skipped_unknown_id}, "
            f"no official label: {result.skipped_no_official_label}, "
            f"not prior: {result.skipped_not_prior})"
        )
        click.echo(render_report(result.report))


@main.command()
@click.argument("text")
@click.pass_obj
def predict(config_path: str, text: str) -> None:
    """Classify one advisory text with the trained baseline model."""
    cfg = _load(config_path)
    try:
        model = load_model(cfg.model_path)
    except Exception as e:
        _fail(str(e), 1)
    prediction = model.predict_text(text)
    click.echo(
        json.dumps(
            {
                "label": prediction.label.value,
                "scores": {k.value: v for k, v in prediction.probabilities.items()},
            }
        )
    )


if __name__ == "__main__":
    main()
