"""Feed sync: fetch, parse, upsert, idempotence."""

import json
from pathlib import Path

import pytest

from vulntriage.ingest import (
    FeedConfig,
    FetchError,
    SyncError,
    fetch_feed,
    scan_records,
    sync,
)
from vulntriage.kvstore import NS_META, NS_RECORDS, FileKvStore
from vulntriage.records import SourceKind

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def _store(tmp_path) -> FileKvStore:
    return FileKvStore(str(tmp_path / "records.kv"))


def _cve_feed() -> FeedConfig:
    return FeedConfig(name="cve-fixtures", kind="cve", uri=str(FIXTURES / "cve"))


def test_fetch_skips_golden_files():
    docs = fetch_feed(_cve_feed())
    names = [Path(d.origin_uri).name for d in docs]
    assert names == sorted(names)
    assert all(not n.endswith(".expected.json") for n in names)
    assert len(names) == 5


def test_fetch_missing_directory():
    with pytest.raises(FetchError):
        fetch_feed(FeedConfig(name="x", kind="cve", uri="/nonexistent/feed/dir"))


def test_feed_kind_is_validated():
    with pytest.raises(ValueError):
        FeedConfig(name="x", kind="unknown-format", uri="/tmp")
    assert FeedConfig(name="x", kind="osv", uri="/tmp").kind is SourceKind.OSV


def test_sync_cve_fixtures(tmp_path):
    with _store(tmp_path) as store:
        result = sync(_cve_feed(), store)
        assert result.fetched == 5
        # Three fixtures parse to records; rejected and non-English are skipped.
        assert result.parsed == 3
        assert result.stored_new == 3
        assert result.stored_updated == 0
        assert result.warnings == 2
        assert store.keys(NS_RECORDS) == ["CVE-2024-0001", "CVE-2024-0002", "CVE-2024-0005"]
        assert store.get(NS_META, "last_sync/cve-fixtures") is not None


def test_sync_is_idempotent(tmp_path):
    with _store(tmp_path) as store:
        sync(_cve_feed(), store)
        first = {k: store.get(NS_RECORDS, k) for k in store.keys(NS_RECORDS)}
        again = sync(_cve_feed(), store)
        assert again.stored_new == 0
        assert again.stored_updated == 0
        # Unchanged advisories keep their original stored bytes, including fetched_at.
        for key, value in first.items():
            assert store.get(NS_RECORDS, key) == value


def test_sync_detects_content_change(tmp_path):
    feed_dir = tmp_path / "feed"
    feed_dir.mkdir()
    doc = json.loads((FIXTURES / "cve" / "cve_minimal.json").read_text())
    (feed_dir / "a.json").write_text(json.dumps(doc))
    cfg = FeedConfig(name="local", kind="cve", uri=str(feed_dir))
    with _store(tmp_path) as store:
        sync(cfg, store)
        doc["containers"]["cna"]["metrics"][0]["cvssV3_1"]["baseScore"] = 7.5
        (feed_dir / "a.json").write_text(json.dumps(doc))
        result = sync(cfg, store)
        assert result.stored_new == 0
        assert result.stored_updated == 1
        (record,) = list(scan_records(store))
        assert record.scores[0].tenths == 75


def test_sync_all_formats_together(tmp_path):
    feeds = [
        FeedConfig(name="cve", kind="cve", uri=str(FIXTURES / "cve")),
        FeedConfig(name="osv", kind="osv", uri=str(FIXTURES / "osv")),
        FeedConfig(name="csaf", kind="csaf", uri=str(FIXTURES / "csaf")),
    ]
    with _store(tmp_path) as store:
        for feed in feeds:
            sync(feed, store)
        records = list(scan_records(store))
        ids = [r.id for r in records]
        assert len(ids) == len(set(ids))
        # cve: 3, osv: 6 (array contributes 3), csaf: 5 entries across 4 docs
        assert len(records) == 14
        sources = {r.source for r in records}
        assert sources == {SourceKind.CVE, SourceKind.OSV, SourceKind.CSAF}


def test_sync_propagates_parse_failure(tmp_path):
    feed_dir = tmp_path / "feed"
    feed_dir.mkdir()
    (feed_dir / "good.json").write_text((FIXTURES / "cve" / "cve_minimal.json").read_text())
    (feed_dir / "broken.json").write_text("{truncated")
    cfg = FeedConfig(name="local", kind="cve", uri=str(feed_dir))
    with _store(tmp_path) as store:
        with pytest.raises(SyncError):
            sync(cfg, store)
        # Nothing from the failed run may be stored.
        assert store.keys(NS_RECORDS) == []


def test_disabled_feed_flag_is_visible():
    cfg = FeedConfig(name="x", kind="cve", uri="/tmp", enabled=False)
    assert cfg.enabled is False
