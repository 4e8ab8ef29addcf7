"""Severity labels and the CVSS-score-to-label mapping.

The supervised target of the whole pipeline: four ordinal classes derived
from CVSS base scores using the v3.1 qualitative rating bands, applied
uniformly to every CVSS version so all records share one label space.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .records import (
    CVSS_VERSIONS_NEWEST_FIRST,
    AdvisoryRecord,
    CvssEntry,
    CvssVersion,
)


class SeverityLabel(str, Enum):
    """Ordinal severity class, low < medium < high < critical."""

    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"

    @property
    def rank(self) -> int:
        return _RANKS[self]


_RANKS = {
    SeverityLabel.LOW: 0,
    SeverityLabel.MEDIUM: 1,
    SeverityLabel.HIGH: 2,
    SeverityLabel.CRITICAL: 3,
}

#: The fixed label order used by the classifier head and every report.
LABEL_ORDER = (
    SeverityLabel.LOW,
    SeverityLabel.MEDIUM,
    SeverityLabel.HIGH,
    SeverityLabel.CRITICAL,
)


class ZeroScoreRule(str, Enum):
    """What to do with a 0.0 base score (CVSS "None", absent from the label set)."""

    MAP_TO_LOW = "map_to_low"
    EXCLUDE = "exclude"


# Upper band edges in tenths: low <= 3.9 < medium <= 6.9 < high <= 8.9 < critical <= 10.0.
DEFAULT_BAND_UPPER_TENTHS = (39, 69, 89, 100)


@dataclass(frozen=True)
class LabelingPolicy:
    """How scores become labels: version precedence, band edges, zero handling."""

    version_precedence: tuple[CvssVersion, ...] = CVSS_VERSIONS_NEWEST_FIRST
    band_upper_tenths: tuple[int, int, int, int] = DEFAULT_BAND_UPPER_TENTHS
    zero_score_rule: ZeroScoreRule = ZeroScoreRule.MAP_TO_LOW

    def __post_init__(self):
        object.__setattr__(self, "version_precedence", tuple(self.version_precedence))
        object.__setattr__(self, "band_upper_tenths", tuple(self.band_upper_tenths))
        edges = self.band_upper_tenths
        if len(edges) != 4 or list(edges) != sorted(set(edges)) or edges[-1] != 100:
            raise ValueError(f"band edges {edges!r} do not partition (0.0, 10.0]")
        if not all(1 <= e <= 100 for e in edges):
            raise ValueError(f"band edges {edges!r} out of range")
        if set(self.version_precedence) != set(CvssVersion):
            raise ValueError("version_precedence must list every CVSS version exactly once")

    def to_dict(self) -> dict:
        return {
            "version_precedence": [v.value for v in self.version_precedence],
            "band_upper_tenths": list(self.band_upper_tenths),
            "zero_score_rule": self.zero_score_rule.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LabelingPolicy":
        return cls(
            version_precedence=tuple(CvssVersion(v) for v in d["version_precedence"]),
            band_upper_tenths=tuple(d["band_upper_tenths"]),
            zero_score_rule=ZeroScoreRule(d["zero_score_rule"]),
        )


DEFAULT_POLICY = LabelingPolicy()


def label_from_score(score: float, policy: LabelingPolicy = DEFAULT_POLICY) -> Optional[SeverityLabel]:
    """Map a base score in [0, 10] to its severity band.

    Returns None only when the score is 0.0 and the policy excludes zeros.
    Raises ValueError for scores outside [0, 10]. Scores are quantized to
    tenths before banding, so 3.9 vs 4.0 can never be misbanded by float
    representation error.
    """
    if not 0.0 <= float(score) <= 10.0:
        raise ValueError(f"score {score!r} outside [0.0, 10.0]")
    tenths = round(float(score) * 10)
    if tenths == 0:
        if policy.zero_score_rule is ZeroScoreRule.EXCLUDE:
            return None
        return SeverityLabel.LOW
    for label, upper in zip(LABEL_ORDER, policy.band_upper_tenths):
        if tenths <= upper:
            return label
    return SeverityLabel.CRITICAL  # unreachable: last edge is 100


def select_score(
    record: AdvisoryRecord, policy: LabelingPolicy = DEFAULT_POLICY
) -> Optional[CvssEntry]:
    """Pick the score entry that decides the record's label.

    First by version precedence; among entries of the winning version, the
    highest base score wins (vector string as a final tie-break) so the
    choice is invariant under permutation of the scores list.
    """
    if not record.scores:
        return None
    for version in policy.version_precedence:
        candidates = [e for e in record.scores if e.version is version]
        if candidates:
            return max(candidates, key=lambda e: (e.tenths, e.vector or ""))
    return None


def label_record(
    record: AdvisoryRecord, policy: LabelingPolicy = DEFAULT_POLICY
) -> Optional[tuple[SeverityLabel, CvssEntry]]:
    """Label a record from its best-precedence score, or None when unscored.

    None is a normal outcome (the unlabeled pool), not an error. A selected
    0.0 score under zero_score_rule=exclude also yields None.
    """
    entry = select_score(record, policy)
    if entry is None:
        return None
    label = label_from_score(entry.base_score, policy)
    if label is None:
        return None
    return label, entry
