"""Feed parsers: CVE JSON 5.x, OSV, CSAF 2.0 -> AdvisoryRecord."""

from __future__ import annotations

from ..records import SourceKind
from .base import ParseError, ParseReport, RawDocument, normalize_text
from .csaf import parse_csaf
from .cve import parse_cve
from .osv import parse_osv

_PARSERS = {
    SourceKind.CVE: parse_cve,
    SourceKind.OSV: parse_osv,
    SourceKind.CSAF: parse_csaf,
}


def parse_any(doc: RawDocument) -> ParseReport:
    """Dispatch to the parser matching the document's source kind."""
    try:
        parser = _PARSERS[doc.source]
    except KeyError:
        raise ParseError(f"no parser for source kind {doc.source!r}") from None
    return parser(doc)


__all__ = [
    "ParseError",
    "ParseReport",
    "RawDocument",
    "normalize_text",
    "parse_any",
    "parse_csaf",
    "parse_cve",
    "parse_osv",
]
