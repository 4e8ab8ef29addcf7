"""Snapshot rows as text/label arrays for the trainer.

Everything enters through the snapshot loader of the base pipeline, so a
dataset here is exactly what the baseline classifier would see.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from vulntriage.dataset import load_split
from vulntriage.severity import LABEL_ORDER

LABELS = tuple(label.value for label in LABEL_ORDER)
LABEL_TO_ID = {name: i for i, name in enumerate(LABELS)}
ID_TO_LABEL = {i: name for i, name in enumerate(LABELS)}


@dataclass(frozen=True)
class TextDataset:
    """Parallel lists of advisory texts and integer labels (0=low .. 3=critical)."""

    texts: tuple[str, ...]
    labels: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.texts)

    def label_counts(self) -> dict[int, int]:
        counts = {i: 0 for i in range(len(LABELS))}
        for y in self.labels:
            counts[y] += 1
        return counts


def load_dataset(snapshot_dir: str, which: str) -> TextDataset:
    """Read one split of a snapshot; every row must carry a label."""
    texts = []
    labels = []
    for row in load_split(snapshot_dir, which):
        if row.label is None:
            raise ValueError(f"{which} row {row.id!r} has no label")
        texts.append(row.description)
        labels.append(LABEL_TO_ID[row.label.value])
    return TextDataset(texts=tuple(texts), labels=tuple(labels))


def stratified_subsample(dataset: TextDataset, n: int, seed: int) -> TextDataset:
    """At most n rows, class proportions preserved, order shuffled.

    Per-class quotas are proportional with largest-remainder rounding, so
    the sizes always sum to min(n, len(dataset)).
    """
    if n <= 0:
        raise ValueError(f"subsample size must be positive, got {n}")
    if n >= len(dataset):
        return dataset
    rng = random.Random(seed)
    by_class: dict[int, list[int]] = {}
    for i, y in enumerate(dataset.labels):
        by_class.setdefault(y, []).append(i)

    total = len(dataset)
    quotas = {}
    remainders = []
    assigned = 0
    for y, members in sorted(by_class.items()):
        exact = n * len(members) / total
        quotas[y] = min(int(exact), len(members))
        assigned += quotas[y]
        remainders.append((exact - int(exact), y))
    for _, y in sorted(remainders, reverse=True):
        if assigned >= n:
            break
        if quotas[y] < len(by_class[y]):
            quotas[y] += 1
            assigned += 1

    chosen = []
    for y, members in sorted(by_class.items()):
        chosen.extend(rng.sample(members, quotas[y]))
    rng.shuffle(chosen)
    return TextDataset(
        texts=tuple(dataset.texts[i] for i in chosen),
        labels=tuple(dataset.labels[i] for i in chosen),
    )


def majority_baseline_accuracy(train: TextDataset, test: TextDataset) -> float:
    """Accuracy of always answering the most common training label."""
    counts = train.label_counts()
    majority = max(counts, key=lambda y: (counts[y], -y))
    return sum(1 for y in test.labels if y == majority) / len(test)
