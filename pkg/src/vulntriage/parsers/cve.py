"""Parser for CVE-program JSON 5.x records.

Reads a single CVE record: id from cveMetadata, first English description,
CPE strings from the affected-product list, and one score entry per metrics
block that carries a baseScore (keyed cvssV2_0 / cvssV3_0 / cvssV3_1 /
cvssV4_0). Enrichment containers (ADP) are assumed pre-merged into the CNA
container upstream.
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

_METRIC_KEYS = {
    "cvssV4_0": CvssVersion.V4_0,
    "cvssV3_1": CvssVersion.V3_1,
    "cvssV3_0": CvssVersion.V3_0,
    "cvssV2_0": CvssVersion.V2,
}


def _english_description(descriptions: list) -> str | None:
    for entry in descriptions:
        entry = as_dict(entry)
        lang = as_str(entry.get("lang")) or ""
        if lang.lower().split("-")[0] == "en":
            value = as_str(entry.get("value"))
            if value:
                return value
    return None


def _collect_cpes(affected: list) -> list[str]:
    cpes: list[str] = []
    for product in affected:
        for cpe in as_list(as_dict(product).get("cpes")):
            if isinstance(cpe, str) and cpe and cpe not in cpes:
                cpes.append(cpe)
    return cpes


def _collect_scores(metrics: list, report: ParseReport) -> list[CvssEntry]:
    scores: list[CvssEntry] = []
    for i, metric in enumerate(metrics):
        metric = as_dict(metric)
        for key, version in _METRIC_KEYS.items():
            block = as_dict(metric.get(key))
            if "baseScore" not in block:
                continue
            try:
                scores.append(
                    CvssEntry(
                        version=version,
                        base_score=block["baseScore"],
                        vector=as_str(block.get("vectorString")),
                    )
                )
            except ValueError as e:
                report.warn(f"metrics[{i}].{key}", f"score dropped: {e}")
    return scores


def parse_cve(doc: RawDocument) -> ParseReport:
    if doc.source is not SourceKind.CVE:
        raise ParseError(f"parse_cve got a {doc.source.value} document")
    data = load_json_document(doc)
    if not isinstance(data, dict):
        raise ParseError(f"{doc.origin_uri or '<document>'}: CVE record must be a JSON object")

    report = ParseReport()
    meta = as_dict(data.get("cveMetadata"))
    cve_id = as_str(meta.get("cveId"))
    if cve_id is None:
        report.warn("cveMetadata.cveId", "missing CVE id; record skipped")
        report.skipped = 1
        return report

    state = (as_str(meta.get("state")) or "").upper()
    if state in ("REJECTED", "WITHDRAWN"):
        report.warn("cveMetadata.state", f"{cve_id} is {state.lower()}; record skipped")
        report.skipped = 1
        return report

    cna = as_dict(as_dict(data.get("containers")).get("cna"))
    description = _english_description(as_list(cna.get("descriptions")))
    if description is None:
        report.warn("containers.cna.descriptions", f"{cve_id}: no English description; record skipped")
        report.skipped = 1
        return report

    try:
        record = AdvisoryRecord(
            id=cve_id,
            title=as_str(cna.get("title")),
            description=normalize_text(description),
            cpes=tuple(_collect_cpes(as_list(cna.get("affected")))),
            scores=tuple(_collect_scores(as_list(cna.get("metrics")), report)),
            source=SourceKind.CVE,
        )
    except ValueError as e:
        report.warn("containers.cna", f"{cve_id}: {e}; record skipped")
        report.skipped = 1
        return report
    report.records.append(record)
    return report
