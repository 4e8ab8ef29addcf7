"""Parser for CSAF 2.0 advisories (Red Hat, Cisco, CISA style).

One AdvisoryRecord per entry of the `vulnerabilities` array. The record id
is the entry's CVE id when present, otherwise `<document-id>#<index>` to
keep ids unique. Description comes from the vulnerability's notes
("description" preferred, then "summary"); scores from scores[].cvss_v3 /
cvss_v2 baseScore.
"""

from __future__ import annotations

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


def _note_text(notes: list) -> str | None:
    by_category: dict[str, str] = {}
    for note in notes:
        note = as_dict(note)
        category = as_str(note.get("category")) or ""
        text = as_str(note.get("text"))
        if text and category not in by_category:
            by_category[category] = text
    return by_category.get("description") or by_category.get("summary")


def _v3_version(block: dict) -> CvssVersion:
    return CvssVersion.V3_0 if as_str(block.get("version")) == "3.0" else CvssVersion.V3_1


def _entry_scores(vuln: dict, path: str, report: ParseReport) -> list[CvssEntry]:
    scores: list[CvssEntry] = []
    for i, score in enumerate(as_list(vuln.get("scores"))):
        score = as_dict(score)
        for key in ("cvss_v3", "cvss_v2"):
            block = as_dict(score.get(key))
            if "baseScore" not in block:
                continue
            version = _v3_version(block) if key == "cvss_v3" else CvssVersion.V2
            try:
                scores.append(
                    CvssEntry(
                        version=version,
                        base_score=block["baseScore"],
                        vector=as_str(block.get("vectorString")),
                    )
                )
            except ValueError as e:
                report.warn(f"{path}.scores[{i}].{key}", f"score dropped: {e}")
    return scores


def parse_csaf(doc: RawDocument) -> ParseReport:
    if doc.source is not SourceKind.CSAF:
        raise ParseError(f"parse_csaf got a {doc.source.value} document")
    data = load_json_document(doc)
    if not isinstance(data, dict):
        raise ParseError(f"{doc.origin_uri or '<document>'}: CSAF document must be a JSON object")

    document = as_dict(data.get("document"))
    doc_id = as_str(as_dict(document.get("tracking")).get("id")) or "csaf-document"
    doc_title = as_str(document.get("title"))

    report = ParseReport()
    for i, vuln in enumerate(as_list(data.get("vulnerabilities"))):
        path = f"vulnerabilities[{i}]"
        vuln = as_dict(vuln)
        vuln_id = as_str(vuln.get("cve")) or f"{doc_id}#{i}"
        description = _note_text(as_list(vuln.get("notes")))
        if description is None:
            report.warn(f"{path}.notes", f"{vuln_id}: no usable note text; entry skipped")
            report.skipped += 1
            continue
        try:
            record = AdvisoryRecord(
                id=vuln_id,
                title=as_str(vuln.get("title")) or doc_title,
                description=normalize_text(description),
                scores=tuple(_entry_scores(vuln, path, report)),
                source=SourceKind.CSAF,
            )
        except ValueError as e:
            report.warn(path, f"{vuln_id}: {e}; entry skipped")
            report.skipped += 1
            continue
        report.records.append(record)
    return report
