"""Append-log key-value store."""

import json

import pytest

from vulntriage.kvstore import NS_META, NS_RECORDS, FileKvStore, StoreError


def test_roundtrip_and_persistence(tmp_path):
    path = str(tmp_path / "s.kv")
    with FileKvStore(path) as store:
        store.put(NS_RECORDS, "CVE-1", b'{"a": 1}')
        store.put(NS_META, "CVE-1", b"meta value")  # same key, other namespace
        assert store.get(NS_RECORDS, "CVE-1") == b'{"a": 1}'
    with FileKvStore(path, writable=False) as store:
        assert store.get(NS_RECORDS, "CVE-1") == b'{"a": 1}'
        assert store.get(NS_META, "CVE-1") == b"meta value"
        assert store.get(NS_RECORDS, "missing") is None


def test_last_write_wins(tmp_path):
    path = str(tmp_path / "s.kv")
    with FileKvStore(path) as store:
        store.put(NS_RECORDS, "k", b"one")
        store.put(NS_RECORDS, "k", b"two")
        assert store.get(NS_RECORDS, "k") == b"two"
        assert len(store) == 1
    with FileKvStore(path, writable=False) as store:
        assert store.get(NS_RECORDS, "k") == b"two"


def test_keys_sorted(tmp_path):
    with FileKvStore(str(tmp_path / "s.kv")) as store:
        for key in ("zz", "aa", "mm"):
            store.put(NS_RECORDS, key, b"x")
        assert store.keys(NS_RECORDS) == ["aa", "mm", "zz"]
        assert store.keys(NS_META) == []


def test_items_iterates_in_key_order(tmp_path):
    with FileKvStore(str(tmp_path / "s.kv")) as store:
        store.put(NS_RECORDS, "b", b"2")
        store.put(NS_RECORDS, "a", b"1")
        assert list(store.items(NS_RECORDS)) == [("a", b"1"), ("b", b"2")]


def test_second_writer_is_refused(tmp_path):
    path = str(tmp_path / "s.kv")
    with FileKvStore(path):
        with pytest.raises(StoreError, match="lock"):
            FileKvStore(path)


def test_reader_coexists_with_writer(tmp_path):
    path = str(tmp_path / "s.kv")
    with FileKvStore(path) as writer:
        writer.put(NS_RECORDS, "k", b"v")
        writer.flush()
        with FileKvStore(path, writable=False) as reader:
            assert reader.get(NS_RECORDS, "k") == b"v"


def test_missing_file_readonly_raises(tmp_path):
    with pytest.raises(StoreError):
        FileKvStore(str(tmp_path / "absent.kv"), writable=False)


def test_missing_file_writable_creates(tmp_path):
    path = str(tmp_path / "fresh.kv")
    with FileKvStore(path) as store:
        assert len(store) == 0


def test_corrupt_line_reports_line_number(tmp_path):
    path = tmp_path / "s.kv"
    with FileKvStore(str(path)) as store:
        store.put(NS_RECORDS, "good", b"v")
    with open(path, "a", encoding="utf-8") as fh:
        fh.write("this is not json\n")
    with pytest.raises(StoreError, match=r"\.kv:2: corrupt"):
        FileKvStore(str(path), writable=False)


def test_binary_value_roundtrip(tmp_path):
    path = str(tmp_path / "s.kv")
    raw = bytes(range(256))
    with FileKvStore(path) as store:
        store.put(NS_RECORDS, "bin", raw)
    with FileKvStore(path, writable=False) as store:
        assert store.get(NS_RECORDS, "bin") == raw
    # The log file itself must stay line-delimited JSON.
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            json.loads(line)


def test_unicode_value_stored_as_utf8(tmp_path):
    path = str(tmp_path / "s.kv")
    text = '{"description": "Grüße, 中文, emoji \U0001f512"}'.encode("utf-8")
    with FileKvStore(path) as store:
        store.put(NS_RECORDS, "u", text)
    with FileKvStore(path, writable=False) as store:
        assert store.get(NS_RECORDS, "u") == text
