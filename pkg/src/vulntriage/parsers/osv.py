"""Parser for OSV-format advisories (GHSA, PySec and friends).

Accepts one OSV entry or a JSON array of entries. Withdrawn advisories are
skipped. Severity entries carry the score in one of two observed shapes:

  * a bare numeric string/number (PySec-style exports) — used directly,
    with the minor version defaulted from the type (CVSS_V3 -> 3.1);
  * a CVSS vector string (the official schema) — the version comes from the
    vector prefix and the numeric base score from the producer extension
    ``database_specific.cvss.score`` when present.

Vector-only entries with no numeric score anywhere are dropped with a
warning: this parser does not compute scores from vectors.
"""

from __future__ import annotations

from typing import Optional

from ..records import AdvisoryRecord, CvssEntry, CvssVersion, SourceKind
from .base import (
    ParseError,
    ParseReport,
    RawDocument,
    as_dict,
    as_list,
    as_str,
    load_json_document,
    normalize_text,
)

_TYPE_DEFAULT_VERSION = {
    "CVSS_V2": CvssVersion.V2,
    "CVSS_V3": CvssVersion.V3_1,
    "CVSS_V4": CvssVersion.V4_0,
}

_VECTOR_PREFIX_VERSION = {
    "CVSS:2.0": CvssVersion.V2,
    "CVSS:3.0": CvssVersion.V3_0,
    "CVSS:3.1": CvssVersion.V3_1,
    "CVSS:4.0": CvssVersion.V4_0,
}


def _as_number(value: object) -> Optional[float]:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return None
    return None


def _vector_version(vector: str) -> Optional[CvssVersion]:
    prefix = vector.split("/", 1)[0]
    return _VECTOR_PREFIX_VERSION.get(prefix)


def _db_specific_score(entry: dict) -> Optional[float]:
    cvss = as_dict(as_dict(entry.get("database_specific")).get("cvss"))
    return _as_number(cvss.get("score"))


def _entry_scores(entry: dict, entry_path: str, report: ParseReport) -> list[CvssEntry]:
    scores: list[CvssEntry] = []
    for i, sev in enumerate(as_list(entry.get("severity"))):
        sev = as_dict(sev)
        sev_type = as_str(sev.get("type")) or ""
        if sev_type not in _TYPE_DEFAULT_VERSION:
            continue
        path = f"{entry_path}severity[{i}]"
        raw = sev.get("score")
        numeric = _as_number(raw)
        vector = None
        version = _TYPE_DEFAULT_VERSION[sev_type]
        if numeric is None and isinstance(raw, str) and raw.startswith("CVSS:"):
            vector = raw
            version = _vector_version(raw) or version
            numeric = _db_specific_score(entry)
        if numeric is None:
            report.warn(path, "no parsable numeric score; severity entry dropped")
            continue
        try:
            scores.append(CvssEntry(version=version, base_score=numeric, vector=vector))
        except ValueError as e:
            report.warn(path, f"score dropped: {e}")
    return scores


def _parse_entry(entry: dict, entry_path: str, report: ParseReport) -> None:
    osv_id = as_str(entry.get("id"))
    if osv_id is None:
        report.warn(f"{entry_path}id", "missing id; entry skipped")
        report.skipped += 1
        return

    if entry.get("withdrawn"):
        report.warn(f"{entry_path}withdrawn", f"{osv_id} is withdrawn; entry skipped")
        report.skipped += 1
        return

    summary = as_str(entry.get("summary"))
    details = as_str(entry.get("details"))
    description = details or summary
    if description is None:
        report.warn(entry_path or "<entry>", f"{osv_id}: neither details nor summary present; entry skipped")
        report.skipped += 1
        return

    try:
        record = AdvisoryRecord(
            id=osv_id,
            title=normalize_text(summary) if summary else None,
            description=normalize_text(description),
            scores=tuple(_entry_scores(entry, entry_path, report)),
            source=SourceKind.OSV,
        )
    except ValueError as e:
        report.warn(entry_path or "<entry>", f"{osv_id}: {e}; entry skipped")
        report.skipped += 1
        return
    report.records.append(record)


def parse_osv(doc: RawDocument) -> ParseReport:
    if doc.source is not SourceKind.OSV:
        raise ParseError(f"parse_osv got a {doc.source.value} document")
    data = load_json_document(doc)

    report = ParseReport()
    if isinstance(data, dict):
        _parse_entry(data, "", report)
    elif isinstance(data, list):
        for i, entry in enumerate(data):
            if isinstance(entry, dict):
                _parse_entry(entry, f"[{i}].", report)
            else:
                report.warn(f"[{i}]", "entry is not an object; skipped")
                report.skipped += 1
    else:
        raise ParseError(
            f"{doc.origin_uri or '<document>'}: OSV document must be an object or array"
        )
    return report
