"""Shared parser plumbing: input documents, parse reports, helpers.

Parsers are pure: bytes in, ParseReport out. They never raise anything but
ParseError, no matter how mangled the input is; entry-level trouble becomes
a warning plus a skipped entry instead.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from ..records import AdvisoryRecord, SourceKind


class ParseError(Exception):
    """Document-level failure: not JSON, or not the expected top-level shape."""


@dataclass(frozen=True)
class RawDocument:
    """One fetched document, tagged with its feed family and origin."""

    source: SourceKind
    text: str
    origin_uri: str = ""

    @classmethod
    def from_bytes(cls, source: SourceKind, data: bytes, origin_uri: str = "") -> "RawDocument":
        # errors="replace" so undecodable garbage still flows into the
        # parser's own error handling instead of blowing up here.
        return cls(source=source, text=data.decode("utf-8", errors="replace"), origin_uri=origin_uri)


@dataclass
class ParseReport:
    """Outcome of parsing one document: records, warnings, skip count."""

    records: list[AdvisoryRecord] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)
    skipped: int = 0

    def warn(self, path: str, message: str) -> None:
        self.warnings.append((path, message))

    def to_golden_dict(self) -> dict:
        from ..records import canonical_dict

        return {
            "records": [canonical_dict(r) for r in self.records],
            "warnings": [list(w) for w in self.warnings],
            "skipped": self.skipped,
        }

    def to_golden_json(self) -> str:
        """Canonical human-diffable form checked in as `.expected.json`."""
        return json.dumps(self.to_golden_dict(), ensure_ascii=False, indent=2) + "\n"


_WS_RUN = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim (stable tokenization across sources)."""
    return _WS_RUN.sub(" ", text).strip()


def load_json_document(doc: RawDocument) -> object:
    try:
        return json.loads(doc.text)
    except (json.JSONDecodeError, RecursionError) as e:
        raise ParseError(f"{doc.origin_uri or '<document>'}: invalid JSON: {e}") from None


def as_dict(value: object) -> dict:
    return value if isinstance(value, dict) else {}


def as_list(value: object) -> list:
    return value if isinstance(value, list) else []


def as_str(value: object) -> Optional[str]:
    return value if isinstance(value, str) and value else None
