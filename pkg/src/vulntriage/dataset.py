"""Versioned labeled dataset snapshots.

A snapshot is an immutable export of the record store: train.jsonl,
test.jsonl, unlabeled.jsonl plus manifest.json, laid out under
`snapshot-<UTCdate>/`. Train/test assignment is a pure function of the
record id (FNV-1a 64 mod 10000 against ratio*10000), so an id never
migrates between splits as the corpus grows, and a record that gains a
score later lands in the split it was always destined for.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

from .hashing import fnv1a64_str
from .ingest import scan_records
from .kvstore import FileKvStore
from .records import AdvisoryRecord, CvssEntry, CvssVersion, SourceKind
from .severity import LABEL_ORDER, LabelingPolicy, SeverityLabel, label_record

ROW_FILES = ("train.jsonl", "test.jsonl", "unlabeled.jsonl")

#: Row columns, in serialization order.
SCORE_COLUMNS = {
    CvssVersion.V2: "cvss_v2",
    CvssVersion.V3_0: "cvss_v3_0",
    CvssVersion.V3_1: "cvss_v3_1",
    CvssVersion.V4_0: "cvss_v4_0",
}
ROW_KEYS = (
    "id", "title", "description", "cpes",
    "cvss_v2", "cvss_v3_0", "cvss_v3_1", "cvss_v4_0",
    "label", "split",
)

DEFAULT_SPLIT_RATIO = 0.9
DEFAULT_MIN_DESCRIPTION_CHARS = 10


class DatasetError(Exception):
    """Snapshot cannot be built or written."""


class IntegrityError(Exception):
    """Snapshot files do not match their manifest."""


class LoadError(Exception):
    """A snapshot row is malformed or violates an invariant."""


def split_of(record_id: str, split_ratio: float = DEFAULT_SPLIT_RATIO) -> str:
    """Deterministic train/test assignment for an id.

    train iff fnv1a64(utf8(id)) mod 10000 < round(ratio * 10000); stable
    across runs, machines and snapshot dates.
    """
    return "train" if fnv1a64_str(record_id) % 10000 < round(split_ratio * 10000) else "test"


@dataclass(frozen=True)
class DatasetRow:
    """One record as exported: text, per-version scores, label, split."""

    id: str
    title: Optional[str]
    description: str
    cpes: tuple[str, ...]
    cvss_v2: Optional[float] = None
    cvss_v3_0: Optional[float] = None
    cvss_v3_1: Optional[float] = None
    cvss_v4_0: Optional[float] = None
    label: Optional[SeverityLabel] = None
    split: str = "train"

    def to_json_line(self) -> str:
        d = {
            "id": self.id,
            "title": self.title,
            "description": self.description,
            "cpes": list(self.cpes),
            "cvss_v2": self.cvss_v2,
            "cvss_v3_0": self.cvss_v3_0,
            "cvss_v3_1": self.cvss_v3_1,
            "cvss_v4_0": self.cvss_v4_0,
            "label": self.label.value if self.label else None,
            "split": self.split,
        }
        return json.dumps(d, ensure_ascii=False, separators=(",", ":"))

    def score_for(self, version: CvssVersion) -> Optional[float]:
        return getattr(self, SCORE_COLUMNS[version])

    @property
    def has_score(self) -> bool:
        return any(self.score_for(v) is not None for v in CvssVersion)


@dataclass(frozen=True)
class SnapshotManifest:
    """Counts, policy and content digest of one snapshot."""

    created_at: str  # UTC date, matching the directory name
    policy: LabelingPolicy
    split_ratio: float
    min_description_chars: int
    total: int
    labeled: int
    unlabeled: int
    train: int
    test: int
    per_label_counts: dict[SeverityLabel, int]
    content_digest: str  # sha256 over train.jsonl + test.jsonl + unlabeled.jsonl bytes

    def to_dict(self) -> dict:
        return {
            "created_at": self.created_at,
            "policy": self.policy.to_dict(),
            "split_ratio": self.split_ratio,
            "min_description_chars": self.min_description_chars,
            "total": self.total,
            "labeled": self.labeled,
            "unlabeled": self.unlabeled,
            "train": self.train,
            "test": self.test,
            "per_label_counts": {label.value: self.per_label_counts[label] for label in LABEL_ORDER},
            "content_digest": self.content_digest,
            "digest_algorithm": "sha256",
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SnapshotManifest":
        return cls(
            created_at=d["created_at"],
            policy=LabelingPolicy.from_dict(d["policy"]),
            split_ratio=d["split_ratio"],
            min_description_chars=d["min_description_chars"],
            total=d["total"],
            labeled=d["labeled"],
            unlabeled=d["unlabeled"],
            train=d["train"],
            test=d["test"],
            per_label_counts={
                label: d["per_label_counts"][label.value] for label in LABEL_ORDER
            },
            content_digest=d["content_digest"],
        )


def _content_digest(snapshot_dir: str) -> str:
    h = hashlib.sha256()
    for name in ROW_FILES:
        with open(os.path.join(snapshot_dir, name), "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()


def _row_from_record(record, policy: LabelingPolicy, split_ratio: float,
                     min_description_chars: int) -> DatasetRow:
    scores: dict[str, float] = {}
    for entry in record.scores:
        column = SCORE_COLUMNS[entry.version]
        scores.setdefault(column, entry.base_score)
    label = None
    if len(record.description) >= min_description_chars:
        labeled = label_record(record, policy)
        if labeled is not None:
            label = labeled[0]
    return DatasetRow(
        id=record.id,
        title=record.title,
        description=record.description,
        cpes=tuple(record.cpes),
        label=label,
        split=split_of(record.id, split_ratio),
        **scores,
    )


def build_snapshot(
    store: FileKvStore,
    policy: LabelingPolicy,
    out_dir: str,
    split_ratio: float = DEFAULT_SPLIT_RATIO,
    min_description_chars: int = DEFAULT_MIN_DESCRIPTION_CHARS,
    created_at: Optional[str] = None,
) -> tuple[SnapshotManifest, str]:
    """Export the store into `out_dir/snapshot-<UTCdate>/`; returns (manifest, path).

    Rows are ordered by id. Labeled rows go to train/test per the id hash;
    unscored rows (and rows with a too-short description, regardless of
    score) go to unlabeled.jsonl with label null. Refuses an empty store.
    Rebuilding into an existing snapshot directory overwrites its files.
    """
    if not 0.0 < split_ratio < 1.0:
        raise DatasetError(f"split_ratio {split_ratio!r} outside (0, 1)")
    rows = [
        _row_from_record(r, policy, split_ratio, min_description_chars)
        for r in scan_records(store)
    ]
    if not rows:
        raise DatasetError("store holds no records; refusing to emit an empty dataset")

    date = created_at or datetime.now(timezone.utc).strftime("%Y-%m-%d")
    snapshot_dir = os.path.join(out_dir, f"snapshot-{date}")
    try:
        os.makedirs(snapshot_dir, exist_ok=True)
        buckets = {"train": [], "test": [], "unlabeled": []}
        for row in rows:
            buckets["unlabeled" if row.label is None else row.split].append(row)
        for name, bucket in zip(ROW_FILES, (buckets["train"], buckets["test"], buckets["unlabeled"])):
            with open(os.path.join(snapshot_dir, name), "w", encoding="utf-8") as fh:
                for row in bucket:
                    fh.write(row.to_json_line() + "\n")
    except OSError as e:
        raise DatasetError(f"cannot write snapshot to {snapshot_dir}: {e}") from None

    per_label = {label: 0 for label in LABEL_ORDER}
    for row in buckets["train"] + buckets["test"]:
        per_label[row.label] += 1
    manifest = SnapshotManifest(
        created_at=date,
        policy=policy,
        split_ratio=split_ratio,
        min_description_chars=min_description_chars,
        total=len(rows),
        labeled=len(buckets["train"]) + len(buckets["test"]),
        unlabeled=len(buckets["unlabeled"]),
        train=len(buckets["train"]),
        test=len(buckets["test"]),
        per_label_counts=per_label,
        content_digest=_content_digest(snapshot_dir),
    )
    with open(os.path.join(snapshot_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    return manifest, snapshot_dir


def read_manifest(snapshot_dir: str) -> SnapshotManifest:
    path = os.path.join(snapshot_dir, "manifest.json")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return SnapshotManifest.from_dict(json.load(fh))
    except FileNotFoundError:
        raise IntegrityError(f"{path}: manifest missing") from None
    except (json.JSONDecodeError, KeyError, ValueError) as e:
        raise IntegrityError(f"{path}: manifest unreadable: {e}") from None


def _parse_row(line: str, lineno: int, name: str) -> DatasetRow:
    try:
        d = json.loads(line)
        if not isinstance(d, dict):
            raise ValueError("row is not an object")
        if set(d) != set(ROW_KEYS):
            raise ValueError(f"row keys {sorted(d)} != expected {sorted(ROW_KEYS)}")
        label = d["label"]
        return DatasetRow(
            id=d["id"],
            title=d["title"],
            description=d["description"],
            cpes=tuple(d["cpes"]),
            cvss_v2=d["cvss_v2"],
            cvss_v3_0=d["cvss_v3_0"],
            cvss_v3_1=d["cvss_v3_1"],
            cvss_v4_0=d["cvss_v4_0"],
            label=SeverityLabel(label) if label is not None else None,
            split=d["split"],
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise LoadError(f"{name}:{lineno}: {e}") from None


def _validate_row(row: DatasetRow, which: str, manifest: SnapshotManifest,
                  name: str, lineno: int) -> None:
    where = f"{name}:{lineno}"
    if not row.id:
        raise LoadError(f"{where}: empty id")
    if row.split not in ("train", "test"):
        raise LoadError(f"{where}: bad split {row.split!r}")
    if row.split != split_of(row.id, manifest.split_ratio):
        raise LoadError(f"{where}: split {row.split!r} does not match the id hash")
    if row.label is not None and not row.has_score:
        raise LoadError(f"{where}: label present without any score field")
    # Re-derive the label from the score columns under the manifest policy.
    expected = _expected_label(row, manifest)
    if row.label != expected:
        raise LoadError(
            f"{where}: label {row.label} inconsistent with policy (expected {expected})"
        )
    if which in ("train", "test"):
        if row.label is None:
            raise LoadError(f"{where}: unlabeled row in {which} split")
        if row.split != which:
            raise LoadError(f"{where}: row assigned to {row.split} found in {which} file")
    elif row.label is not None:
        raise LoadError(f"{where}: labeled row in unlabeled file")


def _expected_label(row: DatasetRow, manifest: SnapshotManifest) -> Optional[SeverityLabel]:
    if len(row.description) < manifest.min_description_chars:
        return None
    scores = tuple(
        CvssEntry(version=v, base_score=row.score_for(v))
        for v in CvssVersion
        if row.score_for(v) is not None
    )
    if not scores:
        return None
    shim = AdvisoryRecord(
        id=row.id, description=row.description, source=SourceKind.CVE, scores=scores
    )
    labeled = label_record(shim, manifest.policy)
    return labeled[0] if labeled else None


def load_split(snapshot_dir: str, which: str) -> list[DatasetRow]:
    """Load one of train/test/unlabeled, digest-checking the whole snapshot first."""
    if which not in ("train", "test", "unlabeled"):
        raise ValueError(f"unknown split {which!r}")
    manifest = read_manifest(snapshot_dir)
    try:
        actual = _content_digest(snapshot_dir)
    except OSError as e:
        raise IntegrityError(f"{snapshot_dir}: row file unreadable: {e}") from None
    if actual != manifest.content_digest:
        raise IntegrityError(
            f"{snapshot_dir}: content digest mismatch (manifest {manifest.content_digest[:12]}..., "
            f"files {actual[:12]}...)"
        )
    name = f"{which}.jsonl"
    rows = []
    with open(os.path.join(snapshot_dir, name), "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = _parse_row(line, lineno, name)
            _validate_row(row, which, manifest, name, lineno)
            rows.append(row)
    expected_count = getattr(manifest, which if which != "unlabeled" else "unlabeled")
    if len(rows) != expected_count:
        raise IntegrityError(
            f"{snapshot_dir}/{name}: {len(rows)} rows but manifest says {expected_count}"
        )
    return rows


def snapshot_stats(manifest: SnapshotManifest) -> str:
    """Human-readable snapshot summary."""
    lines = [
        f"snapshot {manifest.created_at}",
        f"  total records : {manifest.total}",
        f"  labeled       : {manifest.labeled}",
        f"  unlabeled     : {manifest.unlabeled}",
        f"  train / test  : {manifest.train} / {manifest.test} (ratio {manifest.split_ratio})",
    ]
    if manifest.labeled:
        lines.append("  per label:")
        for label in LABEL_ORDER:
            count = manifest.per_label_counts.get(label, 0)
            frac = count / manifest.labeled
            lines.append(f"    {label.value:<8} {count:>8}  ({frac:.3f})")
    lines.append(f"  content digest: {manifest.content_digest}")
    return "\n".join(lines)


def latest_snapshot_dir(out_dir: str) -> Optional[str]:
    """Most recent `snapshot-*` directory under out_dir, by name."""
    if not os.path.isdir(out_dir):
        return None
    candidates = sorted(
        n for n in os.listdir(out_dir)
        if n.startswith("snapshot-") and os.path.isdir(os.path.join(out_dir, n))
    )
    return os.path.join(out_dir, candidates[-1]) if candidates else None
