"""Feed ingestion: fetch advisory documents, parse, upsert into the store.

One-shot by design; recurrence (the production system's hourly imports)
belongs to cron or whatever scheduler wraps the CLI. A feed either syncs
completely or leaves the store untouched for that run: fetch and parse
errors abort the feed before any write happens.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterator

import requests

from . import __version__
from .kvstore import NS_META, NS_RECORDS, FileKvStore
from .parsers import ParseError, RawDocument, parse_any
from .records import AdvisoryRecord, SourceKind, canonical_json, record_from_dict, stored_json, utc_now

logger = logging.getLogger(__name__)

USER_AGENT = f"vulntriage/{__version__}"

#: Golden companion files living next to fixture inputs; never feed input.
_EXPECTED_SUFFIX = ".expected.json"


class FetchError(Exception):
    """Feed could not be fetched; carries the feed name."""

    def __init__(self, feed: str, message: str):
        super().__init__(f"feed {feed!r}: {message}")
        self.feed = feed


class SyncError(Exception):
    """Sync aborted; no records from this run were stored."""

    def __init__(self, feed: str, message: str):
        super().__init__(f"feed {feed!r}: {message}")
        self.feed = feed


class ScanError(Exception):
    """A stored record cannot be decoded; carries the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"record {key!r}: {message}")
        self.key = key


@dataclass(frozen=True)
class FeedConfig:
    """One configured advisory source: a directory of documents or an HTTP URL."""

    name: str
    kind: SourceKind
    uri: str
    enabled: bool = True

    def __post_init__(self):
        if not self.name:
            raise ValueError("feed name must be non-empty")
        if not self.uri:
            raise ValueError(f"feed {self.name!r}: uri must be non-empty")
        object.__setattr__(self, "kind", SourceKind(self.kind))


@dataclass
class SyncResult:
    """Per-feed outcome of one sync run."""

    feed: str
    fetched: int = 0
    parsed: int = 0
    stored_new: int = 0
    stored_updated: int = 0
    warnings: int = 0
    started_at: datetime = field(default_factory=utc_now)
    ended_at: datetime = field(default_factory=utc_now)

    def summary(self) -> str:
        return (
            f"{self.feed}: fetched={self.fetched} parsed={self.parsed} "
            f"new={self.stored_new} updated={self.stored_updated} warnings={self.warnings}"
        )


def fetch_feed(cfg: FeedConfig, timeout: float = 30.0) -> list[RawDocument]:
    """Fetch a feed's documents: HTTP GET for URLs, a full directory read for paths.

    Directory reads are all-or-error and return files in filename order;
    `.expected.json` golden companions (fixture layout) are skipped.
    """
    if not cfg.enabled:
        raise FetchError(cfg.name, "feed is disabled")
    if cfg.uri.startswith(("http://", "https://")):
        try:
            resp = requests.get(cfg.uri, headers={"User-Agent": USER_AGENT}, timeout=timeout)
            resp.raise_for_status()
        except requests.RequestException as e:
            raise FetchError(cfg.name, f"fetch failed: {e}") from None
        return [RawDocument.from_bytes(cfg.kind, resp.content, origin_uri=cfg.uri)]

    if not os.path.isdir(cfg.uri):
        raise FetchError(cfg.name, f"not a directory: {cfg.uri}")
    docs = []
    for name in sorted(os.listdir(cfg.uri)):
        path = os.path.join(cfg.uri, name)
        if not os.path.isfile(path) or name.endswith(_EXPECTED_SUFFIX):
            continue
        try:
            with open(path, "rb") as fh:
                data = fh.read()
        except OSError as e:
            raise FetchError(cfg.name, f"unreadable file {path}: {e}") from None
        docs.append(RawDocument.from_bytes(cfg.kind, data, origin_uri=path))
    return docs


def sync(cfg: FeedConfig, store: FileKvStore) -> SyncResult:
    """Fetch, parse and upsert one feed.

    A record counts as updated only when its canonical serialization
    (which excludes the volatile fetched_at) differs from what is stored;
    unchanged records are not rewritten, so re-syncing an unchanged feed
    is a no-op.
    """
    result = SyncResult(feed=cfg.name)
    try:
        docs = fetch_feed(cfg)
    except FetchError as e:
        raise SyncError(cfg.name, str(e)) from None
    result.fetched = len(docs)

    records: list[AdvisoryRecord] = []
    for doc in docs:
        try:
            report = parse_any(doc)
        except ParseError as e:
            raise SyncError(cfg.name, f"parse failed: {e}") from None
        records.extend(report.records)
        result.warnings += len(report.warnings)
        for path, message in report.warnings:
            logger.warning("%s: %s: %s", doc.origin_uri or cfg.name, path, message)
    result.parsed = len(records)

    for record in records:
        stored = store.get(NS_RECORDS, record.id)
        new_canonical = canonical_json(record)
        if stored is None:
            store.put(NS_RECORDS, record.id, stored_json(record).encode("utf-8"))
            result.stored_new += 1
            continue
        try:
            old = record_from_dict(json.loads(stored.decode("utf-8")))
        except (json.JSONDecodeError, KeyError, ValueError, UnicodeDecodeError) as e:
            raise ScanError(record.id, f"stored bytes are corrupt: {e}") from None
        if canonical_json(old) == new_canonical:
            continue
        if old.source is not record.source:
            result.warnings += 1
            logger.warning(
                "%s: id %s collides across sources (%s overwritten by %s)",
                cfg.name, record.id, old.source.value, record.source.value,
            )
        store.put(NS_RECORDS, record.id, stored_json(record).encode("utf-8"))
        result.stored_updated += 1

    result.ended_at = utc_now()
    store.put(NS_META, f"last_sync/{cfg.name}", result.ended_at.isoformat().encode("utf-8"))
    store.flush()
    return result


def scan_records(store: FileKvStore) -> Iterator[AdvisoryRecord]:
    """Yield every stored record exactly once, id ascending."""
    for key, value in store.items(NS_RECORDS):
        try:
            yield record_from_dict(json.loads(value.decode("utf-8")))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, UnicodeDecodeError) as e:
            raise ScanError(key, f"stored bytes are corrupt: {e}") from None
