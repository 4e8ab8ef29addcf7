"""Mini-batch trainer: AdamW with linear warmup then linear decay.

Shuffling runs on a self-contained splitmix64 generator rather than
`random`, so the visit order (and therefore the trained weights, within
one kernel backend) is reproducible from the seed alone, independent of
interpreter version or global RNG state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import ModuleType
from typing import Optional, Sequence

import numpy as np

from ..dataset import DatasetRow
from ..severity import LABEL_ORDER
from . import kernels as default_kernels
from .features import FeatureSpace, TokenizerConfig, featurize
from .model import ClassifierModel

_MASK64 = (1 << 64) - 1


class TrainError(Exception):
    """Training cannot start or diverged."""


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and schedule settings."""

    learning_rate: float = 1e-2
    batch_size: int = 16
    epochs: int = 5
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    warmup_fraction: float = 0.06
    rng_seed: int = 2024

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError(f"warmup_fraction {self.warmup_fraction} outside [0, 1)")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        for name, beta in (("beta1", self.beta1), ("beta2", self.beta2)):
            if not 0.0 <= beta < 1.0:
                raise ValueError(f"{name} {beta} outside [0, 1)")
        if self.eps <= 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "weight_decay": self.weight_decay,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "warmup_fraction": self.warmup_fraction,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


class _SplitMix64:
    """Deterministic 64-bit generator (splitmix64) for shuffling."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            items[i], items[j] = items[j], items[i]


def schedule_lr(step: int, total_steps: int, warmup_steps: int, peak_lr: float) -> float:
    """Learning rate at a 1-based step: linear ramp to peak over the warmup
    window, then linear decay to zero at the final step."""
    if warmup_steps > 0 and step <= warmup_steps:
        return peak_lr * step / warmup_steps
    if total_steps == warmup_steps:
        return peak_lr
    return peak_lr * (total_steps - step) / (total_steps - warmup_steps)


def _batch_csr(
    features: list[tuple[np.ndarray, np.ndarray]], order: Sequence[int]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lengths = [len(features[i][0]) for i in order]
    indptr = np.zeros(len(order) + 1, dtype=np.int64)
    np.cumsum(lengths, out=indptr[1:])
    if indptr[-1] == 0:
        return indptr, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    indices = np.concatenate([features[i][0] for i in order])
    values = np.concatenate([features[i][1] for i in order])
    return indptr, indices.astype(np.int64, copy=False), values


def _accuracy(
    model: ClassifierModel,
    features: list[tuple[np.ndarray, np.ndarray]],
    labels: np.ndarray,
    kernels: ModuleType,
) -> float:
    correct = 0
    n = len(labels)
    for start in range(0, n, 256):
        order = range(start, min(start + 256, n))
        indptr, indices, values = _batch_csr(features, order)
        logits = kernels.forward_csr(model.weights, model.bias, indptr, indices, values)
        correct += int(np.sum(np.argmax(logits, axis=1) == labels[start : start + 256]))
    return correct / n


def _prepare(
    rows: Sequence[DatasetRow],
    feature_space: FeatureSpace,
    tokenizer: TokenizerConfig,
    what: str,
) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    rank = {label: i for i, label in enumerate(LABEL_ORDER)}
    features = []
    labels = np.empty(len(rows), dtype=np.int64)
    for i, row in enumerate(rows):
        if row.label is None:
            raise TrainError(f"{what} row {row.id!r} has no label")
        features.append(featurize(row.description, feature_space, tokenizer))
        labels[i] = rank[row.label]
    return features, labels


def train(
    rows: Sequence[DatasetRow],
    config: TrainConfig,
    feature_space: Optional[FeatureSpace] = None,
    tokenizer: Optional[TokenizerConfig] = None,
    eval_rows: Optional[Sequence[DatasetRow]] = None,
    kernels: Optional[ModuleType] = None,
) -> tuple[ClassifierModel, list[dict]]:
    """Train a classifier from labeled rows; returns (model, epoch log).

    The epoch log holds one dict per epoch: epoch number, mean training
    loss, training accuracy, and eval accuracy (None without eval_rows).
    """
    if not rows:
        raise TrainError("no training rows")
    feature_space = feature_space or FeatureSpace()
    tokenizer = tokenizer or TokenizerConfig()
    km = kernels if kernels is not None else default_kernels

    features, labels = _prepare(rows, feature_space, tokenizer, "train")
    eval_features = eval_labels = None
    if eval_rows:
        eval_features, eval_labels = _prepare(eval_rows, feature_space, tokenizer, "eval")

    model = ClassifierModel.zeros(tokenizer, feature_space)
    n = len(rows)
    n_classes = len(model.labels)
    steps_per_epoch = math.ceil(n / config.batch_size)
    total_steps = steps_per_epoch * config.epochs
    warmup_steps = int(total_steps * config.warmup_fraction)

    gW = np.zeros_like(model.weights)
    gb = np.zeros_like(model.bias)
    mW = np.zeros_like(model.weights)
    vW = np.zeros_like(model.weights)
    mb = np.zeros_like(model.bias)
    vb = np.zeros_like(model.bias)

    rng = _SplitMix64(config.rng_seed)
    order = list(range(n))
    log: list[dict] = []
    step = 0
    for epoch in range(1, config.epochs + 1):
        rng.shuffle(order)
        loss_weighted = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            indptr, indices, values = _batch_csr(features, batch)
            batch_labels = labels[batch]
            gW.fill(0.0)
            gb.fill(0.0)
            loss = km.grad_csr(
                model.weights, model.bias, indptr, indices, values, batch_labels, gW, gb
            )
            if not math.isfinite(loss):
                raise TrainError(
                    f"loss became non-finite at epoch {epoch} step {step + 1}; "
                    f"lower the learning rate (current peak {config.learning_rate})"
                )
            step += 1
            lr = schedule_lr(step, total_steps, warmup_steps, config.learning_rate)
            km.adamw_apply(
                model.weights, model.bias, gW, gb, mW, vW, mb, vb,
                step, lr, config.beta1, config.beta2, config.eps, config.weight_decay,
            )
            loss_weighted += loss * len(batch)
        entry = {
            "epoch": epoch,
            "loss": loss_weighted / n,
            "train_accuracy": _accuracy(model, features, labels, km),
            "eval_accuracy": (
                _accuracy(model, eval_features, eval_labels, km) if eval_rows else None
            ),
        }
        log.append(entry)
    assert step == total_steps, f"step accounting drifted: {step} != {total_steps}"
    return model, log


def batch_loss(
    weights: np.ndarray,
    bias: np.ndarray,
    indptr: np.ndarray,
    indices: np.ndarray,
    values: np.ndarray,
    labels: np.ndarray,
    kernels: Optional[ModuleType] = None,
) -> float:
    """Mean cross-entropy via the forward kernel plus a numpy logsumexp.

    Deliberately avoids grad_csr so it can serve as the independent loss
    for finite-difference checks.
    """
    km = kernels if kernels is not None else default_kernels
    logits = km.forward_csr(weights, bias, indptr, indices, values)
    m = np.max(logits, axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.sum(np.exp(logits - m), axis=1))
    picked = logits[np.arange(len(labels)), labels]
    return float(np.mean(lse - picked))


def gradient_check(
    weights: np.ndarray,
    bias: np.ndarray,
    indptr: np.ndarray,
    indices: np.ndarray,
    values: np.ndarray,
    labels: np.ndarray,
    kernels: Optional[ModuleType] = None,
    h: float = 1e-5,
) -> float:
    """Max relative error between grad_csr and central differences.

    Perturbs every weight the batch touches plus all bias entries. The
    relative error is |analytic - numeric| / max(|analytic|, |numeric|,
    1e-8), taken as zero when both are vanishingly small.
    """
    km = kernels if kernels is not None else default_kernels
    gW = np.zeros_like(weights)
    gb = np.zeros_like(bias)
    km.grad_csr(weights, bias, indptr, indices, values, labels, gW, gb)

    def rel_err(analytic: float, numeric: float) -> float:
        if max(abs(analytic), abs(numeric)) < 1e-10:
            return 0.0
        return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)

    worst = 0.0
    touched = np.unique(indices)
    for c in range(weights.shape[0]):
        for j in touched:
            original = weights[c, j]
            weights[c, j] = original + h
            up = batch_loss(weights, bias, indptr, indices, values, labels, km)
            weights[c, j] = original - h
            down = batch_loss(weights, bias, indptr, indices, values, labels, km)
            weights[c, j] = original
            worst = max(worst, rel_err(float(gW[c, j]), (up - down) / (2 * h)))
    for c in range(len(bias)):
        original = bias[c]
        bias[c] = original + h
        up = batch_loss(weights, bias, indptr, indices, values, labels, km)
        bias[c] = original - h
        down = batch_loss(weights, bias, indptr, indices, values, labels, km)
        bias[c] = original
        worst = max(worst, rel_err(float(gb[c]), (up - down) / (2 * h)))
    return worst
