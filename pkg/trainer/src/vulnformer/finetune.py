"""Fine-tuning loop: AdamW with linear warmup over snapshot text.

Mirrors the production recipe at desk scale. The schedule warms up
linearly to the peak rate and decays linearly to zero; warm-up length
and weight decay are configurable since the production values are not
published.
"""

from __future__ import annotations

import json
import math
import os
import random
import sys
from dataclasses import dataclass, field
from typing import Optional

import torch
from transformers import get_linear_schedule_with_warmup

from .data import (
    TextDataset,
    load_dataset,
    majority_baseline_accuracy,
    stratified_subsample,
)
from .modeling import build_model, load_pretrained, train_tokenizer


class FinetuneError(Exception):
    """Training cannot proceed with the given snapshot or settings."""


@dataclass(frozen=True)
class FinetuneConfig:
    """Optimizer, schedule and model-shape settings.

    base_model of None trains a compact encoder from scratch, which is
    the path used when no checkpoint is available locally.
    """

    base_model: Optional[str] = None
    max_length: int = 512
    learning_rate: float = 3e-5
    batch_size: int = 16
    epochs: int = 5
    warmup_fraction: float = 0.06
    weight_decay: float = 0.01
    subsample: int = 5000
    seed: int = 2024
    vocab_size: int = 8000
    hidden_size: int = 128
    num_layers: int = 2
    num_heads: int = 4

    def __post_init__(self):
        if self.max_length < 8:
            raise ValueError(f"max_length must be >= 8, got {self.max_length}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError(f"warmup_fraction {self.warmup_fraction} outside [0, 1)")
        if self.subsample < 1:
            raise ValueError(f"subsample must be >= 1, got {self.subsample}")


@dataclass
class FinetuneResult:
    model: torch.nn.Module
    tokenizer: object
    log: list[dict] = field(default_factory=list)
    test_accuracy: Optional[float] = None
    majority_accuracy: Optional[float] = None


def encode_batch(tokenizer, texts: list[str], max_length: int) -> dict:
    return tokenizer(
        list(texts),
        truncation=True,
        max_length=max_length,
        padding=True,
        return_tensors="pt",
    )


@torch.no_grad()
def predict_logits(
    model, tokenizer, texts: list[str], max_length: int, batch_size: int = 32
) -> torch.Tensor:
    """(n, 4) logits for the given texts, in dataset label order."""
    model.eval()
    chunks = []
    for start in range(0, len(texts), batch_size):
        enc = encode_batch(tokenizer, texts[start : start + batch_size], max_length)
        chunks.append(model(**enc).logits)
    return torch.cat(chunks, dim=0)


def accuracy_of(model, tokenizer, dataset: TextDataset, max_length: int) -> float:
    logits = predict_logits(model, tokenizer, list(dataset.texts), max_length)
    predicted = logits.argmax(dim=1).tolist()
    return sum(1 for p, y in zip(predicted, dataset.labels) if p == y) / len(dataset)


def run_finetune(
    snapshot_dir: str, config: FinetuneConfig, progress: bool = False
) -> FinetuneResult:
    """Train on the snapshot's train split, score on its test split."""
    torch.manual_seed(config.seed)

    train_ds = load_dataset(snapshot_dir, "train")
    if not len(train_ds):
        raise FinetuneError(f"{snapshot_dir}: train split is empty")
    train_ds = stratified_subsample(train_ds, config.subsample, config.seed)
    test_ds = load_dataset(snapshot_dir, "test")

    if config.base_model is not None:
        tokenizer, model = load_pretrained(config.base_model, config.max_length)
    else:
        tokenizer = train_tokenizer(
            train_ds.texts, config.vocab_size, config.max_length
        )
        model = build_model(
            tokenizer,
            config.max_length,
            hidden_size=config.hidden_size,
            num_layers=config.num_layers,
            num_heads=config.num_heads,
        )

    steps_per_epoch = math.ceil(len(train_ds) / config.batch_size)
    total_steps = steps_per_epoch * config.epochs
    warmup_steps = int(total_steps * config.warmup_fraction)
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay
    )
    scheduler = get_linear_schedule_with_warmup(optimizer, warmup_steps, total_steps)

    order_rng = random.Random(config.seed)
    indices = list(range(len(train_ds)))
    log = []
    for epoch in range(1, config.epochs + 1):
        model.train()
        order_rng.shuffle(indices)
        loss_sum = 0.0
        for start in range(0, len(indices), config.batch_size):
            batch = indices[start : start + config.batch_size]
            enc = encode_batch(
                tokenizer, [train_ds.texts[i] for i in batch], config.max_length
            )
            labels = torch.tensor([train_ds.labels[i] for i in batch])
            out = model(**enc, labels=labels)
            out.loss.backward()
            optimizer.step()
            scheduler.step()
            optimizer.zero_grad()
            loss_sum += float(out.loss) * len(batch)
        entry = {
            "epoch": epoch,
            "loss": loss_sum / len(indices),
            "eval_accuracy": (
                accuracy_of(model, tokenizer, test_ds, config.max_length)
                if len(test_ds)
                else None
            ),
        }
        log.append(entry)
        if progress:
            print(f"epoch {entry['epoch']}: loss {entry['loss']:.4f}"
                  + (f"  eval acc {entry['eval_accuracy']:.4f}"
                     if entry["eval_accuracy"] is not None else ""),
                  file=sys.stderr)

    result = FinetuneResult(model=model, tokenizer=tokenizer, log=log)
    if len(test_ds):
        result.test_accuracy = log[-1]["eval_accuracy"]
        result.majority_accuracy = majority_baseline_accuracy(train_ds, test_ds)
    return result


def export_worker(result: FinetuneResult, out_dir: str) -> str:
    """Write the model bundle plus a gateway launch spec.

    The layout is out_dir/model (tokenizer and weights) and
    out_dir/worker.json, whose argv starts the stdio worker. The spec
    references the bundle relative to its own directory, so the export
    can be moved as a unit.
    """
    model_dir = os.path.join(out_dir, "model")
    os.makedirs(model_dir, exist_ok=True)
    result.tokenizer.save_pretrained(model_dir)
    result.model.save_pretrained(model_dir)
    spec_path = os.path.join(out_dir, "worker.json")
    with open(spec_path, "w", encoding="utf-8") as fh:
        json.dump(
            {"argv": [sys.executable, "-m", "vulnformer.serve", "model"]},
            fh,
            indent=2,
        )
        fh.write("\n")
    return spec_path
