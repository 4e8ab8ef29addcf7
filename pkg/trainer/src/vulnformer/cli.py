"""Command line for the transformer trainer."""

from __future__ import annotations

import dataclasses
import sys
from typing import Optional

import click

from vulntriage.dataset import latest_snapshot_dir

from .data import load_dataset
from .finetune import (
    FinetuneConfig,
    FinetuneError,
    accuracy_of,
    export_worker,
    run_finetune,
)
from .modeling import load_pretrained
from .serve import serve_stdio


def _fail(message: str, code: int) -> None:
    click.echo(message, err=True)
    sys.exit(code)


@click.group()
def main() -> None:
    """Fine-tune and serve a transformer severity classifier."""


@main.command()
@click.option("--snapshot", "snapshot_dir", required=True, help="Snapshot directory to train on.")
@click.option("--out", "out_dir", required=True, help="Where to write the worker bundle.")
@click.option("--base-model", default=None, help="Local checkpoint directory; omit to train from scratch.")
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--max-length", type=int, default=None)
@click.option("--subsample", type=int, default=None, help="Stratified row cap for the train split.")
@click.option("--seed", type=int, default=None)
def finetune(
    snapshot_dir: str,
    out_dir: str,
    base_model: Optional[str],
    **overrides,
) -> None:
    """Train on a snapshot and export a gateway-servable worker bundle."""
    fields = {k: v for k, v in overrides.items() if v is not None}
    if base_model is not None:
        fields["base_model"] = base_model
    try:
        config = dataclasses.replace(FinetuneConfig(), **fields)
    except ValueError as e:
        _fail(str(e), 2)
    try:
        result = run_finetune(snapshot_dir, config, progress=True)
    except (FinetuneError, ValueError, OSError) as e:
        _fail(str(e), 1)
    spec_path = export_worker(result, out_dir)
    if result.test_accuracy is not None:
        click.echo(
            f"test accuracy {result.test_accuracy:.4f} "
            f"(majority baseline {result.majority_accuracy:.4f})"
        )
    click.echo(f"worker bundle written; launch spec: {spec_path}")


@main.command(name="eval")
@click.argument("model_dir")
@click.option("--snapshot", "snapshot_dir", required=True, help="Snapshot with the test split.")
def eval_cmd(model_dir: str, snapshot_dir: str) -> None:
    """Score a saved model on a snapshot's test split."""
    try:
        tokenizer, model = load_pretrained(model_dir)
        test_ds = load_dataset(snapshot_dir, "test")
    except (OSError, ValueError, Exception) as e:  # noqa: B014 - hub loaders raise broadly
        _fail(str(e), 1)
    if not len(test_ds):
        _fail("test split is empty", 1)
    accuracy = accuracy_of(model, tokenizer, test_ds, int(tokenizer.model_max_length))
    click.echo(f"test accuracy {accuracy:.4f} over {len(test_ds)} rows")


@main.command()
@click.argument("model_dir")
def serve(model_dir: str) -> None:
    """Run the stdio worker for MODEL_DIR (used via the gateway launch spec)."""
    sys.exit(serve_stdio(model_dir))


@main.command(name="latest-snapshot")
@click.argument("snapshot_root")
def latest_snapshot(snapshot_root: str) -> None:
    """Print the newest snapshot directory under SNAPSHOT_ROOT."""
    found = latest_snapshot_dir(snapshot_root)
    if found is None:
        _fail(f"no snapshot under {snapshot_root}", 1)
    click.echo(found)


if __name__ == "__main__":
    main()
