"""Evaluation metrics and the prediction-vs-official agreement study.

Everything here is computed from (truth, predicted) label pairs with
plain integer arithmetic; reports render deterministically so they can
be diffed across runs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Optional, Sequence

from .dataset import SnapshotManifest, load_split, read_manifest
from .records import AdvisoryRecord, CvssEntry, CvssVersion, SourceKind
from .severity import LABEL_ORDER, LabelingPolicy, SeverityLabel, label_record

N_CLASSES = len(LABEL_ORDER)


class EvalError(Exception):
    """Metrics cannot be computed from the given input."""


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    """Metrics over a set of (truth, predicted) label pairs."""

    n: int
    accuracy: float
    per_class: dict[SeverityLabel, ClassMetrics]
    macro_f1: float
    confusion: tuple[tuple[int, ...], ...]  # rows = truth, cols = predicted
    ordinal_histogram: dict[int, int]  # |rank difference| -> pair count

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_class": {
                label.value: {
                    "precision": m.precision, "recall": m.recall, "f1": m.f1,
                }
                for label, m in self.per_class.items()
            },
            "confusion": [list(row) for row in self.confusion],
            "ordinal_histogram": {str(k): v for k, v in self.ordinal_histogram.items()},
        }


def evaluate(pairs: Sequence[tuple[SeverityLabel, SeverityLabel]]) -> EvalReport:
    """Build an EvalReport from (truth, predicted) pairs."""
    if not pairs:
        raise EvalError("no (truth, predicted) pairs to evaluate")
    confusion = [[0] * N_CLASSES for _ in range(N_CLASSES)]
    histogram = {d: 0 for d in range(N_CLASSES)}
    for truth, predicted in pairs:
        confusion[truth.rank][predicted.rank] += 1
        histogram[abs(truth.rank - predicted.rank)] += 1
    n = len(pairs)
    correct = sum(confusion[i][i] for i in range(N_CLASSES))
    per_class = {}
    f1_sum = 0.0
    for i, label in enumerate(LABEL_ORDER):
        row_total = sum(confusion[i])
        col_total = sum(confusion[r][i] for r in range(N_CLASSES))
        precision = confusion[i][i] / col_total if col_total else 0.0
        recall = confusion[i][i] / row_total if row_total else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = ClassMetrics(precision=precision, recall=recall, f1=f1)
        f1_sum += f1
    return EvalReport(
        n=n,
        accuracy=correct / n,
        per_class=per_class,
        macro_f1=f1_sum / N_CLASSES,
        confusion=tuple(tuple(row) for row in confusion),
        ordinal_histogram=histogram,
    )


def off_by_one_rate(report: EvalReport) -> float:
    """Among disagreements, the share that miss by exactly one band."""
    wrong = sum(count for d, count in report.ordinal_histogram.items() if d >= 1)
    return report.ordinal_histogram[1] / wrong if wrong else 0.0


def render_report(report: EvalReport) -> str:
    """Fixed-width text rendering, labels in ordinal order."""
    names = [label.value for label in LABEL_ORDER]
    width = max(len(n) for n in names) + 2
    lines = [
        f"pairs: {report.n}  accuracy: {report.accuracy:.4f}  macro f1: {report.macro_f1:.4f}",
        "confusion (rows = truth, cols = predicted):",
        " " * width + "".join(f"{n:>{width}}" for n in names),
    ]
    for i, name in enumerate(names):
        cells = "".join(f"{c:>{width}}" for c in report.confusion[i])
        lines.append(f"{name:<{width}}" + cells)
    lines.append("per class:")
    for label in LABEL_ORDER:
        m = report.per_class[label]
        lines.append(
            f"  {label.value:<{width}}precision {m.precision:.4f}  "
            f"recall {m.recall:.4f}  f1 {m.f1:.4f}"
        )
    hist = "  ".join(f"|d|={d}: {report.ordinal_histogram[d]}" for d in range(N_CLASSES))
    lines.append(f"ordinal error: {hist}")
    lines.append(f"off-by-one rate among errors: {off_by_one_rate(report):.4f}")
    return "\n".join(lines)


@dataclass(frozen=True)
class AgreementResult:
    """Outcome of replaying logged predictions against a later snapshot."""

    report: EvalReport
    total_predictions: int
    matched: int
    skipped_unknown_id: int
    skipped_no_official_label: int
    skipped_not_prior: int


def _official_label(
    row, policy: LabelingPolicy
) -> Optional[SeverityLabel]:
    scores = tuple(
        CvssEntry(version=v, base_score=row.score_for(v))
        for v in CvssVersion
        if row.score_for(v) is not None
    )
    if not scores:
        return None
    shim = AdvisoryRecord(
        id=row.id, description=row.description or "-", source=SourceKind.CVE, scores=scores
    )
    labeled = label_record(shim, policy)
    return labeled[0] if labeled else None


def _read_predictions(path: str) -> list[dict]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                entry = {
                    "id": d["id"],
                    "label": SeverityLabel(d["label"]),
                    "timestamp": datetime.fromisoformat(d["timestamp"]),
                }
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise EvalError(f"{path}:{lineno}: bad prediction entry: {e}") from None
            if entry["timestamp"].tzinfo is None:
                entry["timestamp"] = entry["timestamp"].replace(tzinfo=timezone.utc)
            entries.append(entry)
    return entries


def official_cutoff(manifest: SnapshotManifest) -> datetime:
    """Labels in a snapshot count as known by the end of its creation day."""
    day = datetime.strptime(manifest.created_at, "%Y-%m-%d").replace(tzinfo=timezone.utc)
    return day + timedelta(days=1)


def agreement_study(
    predictions_log: str,
    snapshot_dir: str,
    policy: Optional[LabelingPolicy] = None,
) -> AgreementResult:
    """Compare logged predictions with labels a later snapshot assigns.

    Joins on advisory id across every row file of the snapshot, derives
    the official label from the row's score columns under the policy
    (manifest policy by default), and keeps only predictions made before
    the snapshot's official cutoff.
    """
    manifest = read_manifest(snapshot_dir)
    policy = policy or manifest.policy
    cutoff = official_cutoff(manifest)
    official: dict[str, Optional[SeverityLabel]] = {}
    for which in ("train", "test", "unlabeled"):
        if not os.path.exists(os.path.join(snapshot_dir, f"{which}.jsonl")):
            continue
        for row in load_split(snapshot_dir, which):
            official[row.id] = _official_label(row, policy)

    predictions = _read_predictions(predictions_log)
    pairs = []
    unknown = no_label = late = 0
    for entry in predictions:
        if entry["id"] not in official:
            unknown += 1
            continue
        truth = official[entry["id"]]
        if truth is None:
            no_label += 1
            continue
        if entry["timestamp"] >= cutoff:
            late += 1
            continue
        pairs.append((truth, entry["label"]))
    if not pairs:
        raise EvalError(
            "no predictions joined with an official label before the cutoff; "
            f"log had {len(predictions)} entries "
            f"(unknown id: {unknown}, no official label: {no_label}, not prior: {late})"
        )
    return AgreementResult(
        report=evaluate(pairs),
        total_predictions=len(predictions),
        matched=len(pairs),
        skipped_unknown_id=unknown,
        skipped_no_official_label=no_label,
        skipped_not_prior=late,
    )
