"""Canonical domain types for normalized vulnerability advisories.

An AdvisoryRecord is the single shape every feed parser produces and every
downstream stage consumes. Canonical JSON serialization lives here too, so
that change detection in the store and golden-file comparisons agree on one
byte representation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional


class SourceKind(str, Enum):
    """Advisory feed family."""

    CVE = "cve"
    OSV = "osv"
    CSAF = "csaf"


class CvssVersion(str, Enum):
    """CVSS specification versions that can carry a base score."""

    V2 = "2.0"
    V3_0 = "3.0"
    V3_1 = "3.1"
    V4_0 = "4.0"


# Newest first; the default precedence order for label derivation.
CVSS_VERSIONS_NEWEST_FIRST = (
    CvssVersion.V4_0,
    CvssVersion.V3_1,
    CvssVersion.V3_0,
    CvssVersion.V2,
)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def score_to_tenths(score: float) -> int:
    """Convert a base score to integer tenths, rejecting extra precision.

    CVSS base scores carry at most one decimal digit; comparing in integer
    tenths avoids float boundary trouble at 3.9/4.0 and friends.
    """
    if not isinstance(score, (int, float)) or isinstance(score, bool):
        raise ValueError(f"base score must be numeric, got {type(score).__name__}")
    if not 0.0 <= float(score) <= 10.0:
        raise ValueError(f"base score {score!r} outside [0.0, 10.0]")
    tenths = round(float(score) * 10)
    if abs(float(score) * 10 - tenths) > 1e-6:
        raise ValueError(f"base score {score!r} has more than one decimal digit")
    return int(tenths)


@dataclass(frozen=True)
class CvssEntry:
    """One CVSS base score attached to an advisory."""

    version: CvssVersion
    base_score: float
    vector: Optional[str] = None

    def __post_init__(self):
        tenths = score_to_tenths(self.base_score)
        # Normalize to the exact one-decimal value so 5.300000001 and 5.3
        # serialize identically.
        object.__setattr__(self, "base_score", tenths / 10.0)

    @property
    def tenths(self) -> int:
        return round(self.base_score * 10)


@dataclass(frozen=True)
class AdvisoryRecord:
    """Normalized vulnerability advisory.

    ``fetched_at`` is bookkeeping, not content: it is excluded from the
    canonical serialization so that re-fetching an unchanged advisory is a
    no-op for change detection.
    """

    id: str
    description: str
    source: SourceKind
    title: Optional[str] = None
    cpes: tuple[str, ...] = ()
    scores: tuple[CvssEntry, ...] = ()
    fetched_at: datetime = field(default_factory=utc_now)

    def __post_init__(self):
        if not self.id:
            raise ValueError("advisory id must be non-empty")
        object.__setattr__(self, "cpes", tuple(self.cpes))
        object.__setattr__(self, "scores", tuple(self.scores))


def canonical_dict(record: AdvisoryRecord, include_fetched_at: bool = False) -> dict:
    """Record as a plain dict with a fixed key order."""
    d = {
        "id": record.id,
        "title": record.title,
        "description": record.description,
        "cpes": list(record.cpes),
        "scores": [
            {"version": e.version.value, "base_score": e.base_score, "vector": e.vector}
            for e in record.scores
        ],
        "source": record.source.value,
    }
    if include_fetched_at:
        d["fetched_at"] = record.fetched_at.isoformat()
    return d


def canonical_json(record: AdvisoryRecord) -> str:
    """Canonical one-line JSON used for change detection and goldens."""
    return json.dumps(canonical_dict(record), ensure_ascii=False, separators=(",", ":"))


def stored_json(record: AdvisoryRecord) -> str:
    """Full serialization (canonical fields plus fetched_at) for the store."""
    return json.dumps(
        canonical_dict(record, include_fetched_at=True),
        ensure_ascii=False,
        separators=(",", ":"),
    )


def record_from_dict(d: dict) -> AdvisoryRecord:
    """Rebuild a record from its (stored or canonical) dict form."""
    fetched = d.get("fetched_at")
    kwargs = {}
    if fetched is not None:
        kwargs["fetched_at"] = datetime.fromisoformat(fetched)
    return AdvisoryRecord(
        id=d["id"],
        title=d.get("title"),
        description=d["description"],
        cpes=tuple(d.get("cpes") or ()),
        scores=tuple(
            CvssEntry(
                version=CvssVersion(s["version"]),
                base_score=s["base_score"],
                vector=s.get("vector"),
            )
            for s in d.get("scores") or ()
        ),
        source=SourceKind(d["source"]),
        **kwargs,
    )
