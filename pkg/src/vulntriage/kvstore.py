"""Local key-value store for normalized advisories.

The production system this mirrors keeps everything in a networked KV
database; here the default is a single-file append log with an in-memory
index. Good enough for desk scale, trivially inspectable, and safe under
the single-writer/many-reader contract (writers take a sidecar file lock).

Log format: one JSON object per line, {"ns": ..., "key": ..., "enc":
"utf8"|"b64", "val": ...}. Later lines win for the same (ns, key).
"""

from __future__ import annotations

import base64
import json
import os
from typing import Iterator, Optional, Protocol

from filelock import FileLock, Timeout

NS_RECORDS = "records"
NS_META = "meta"


class StoreError(Exception):
    """Store cannot be opened, locked, or its log is corrupt."""


class KvStore(Protocol):
    """Namespaced key -> bytes mapping. put-then-get returns the stored bytes."""

    def get(self, ns: str, key: str) -> Optional[bytes]: ...

    def put(self, ns: str, key: str, value: bytes) -> None: ...

    def keys(self, ns: str) -> list[str]: ...

    def close(self) -> None: ...


class FileKvStore:
    """Append-log store with an in-memory index, one writer at a time."""

    def __init__(self, path: str, writable: bool = True):
        self.path = str(path)
        self.writable = writable
        self._index: dict[tuple[str, str], bytes] = {}
        self._lock = None
        self._fh = None
        if writable:
            lock = FileLock(self.path + ".lock")
            try:
                lock.acquire(timeout=0)
            except Timeout:
                raise StoreError(f"{self.path}: another writer holds the store lock") from None
            self._lock = lock
        try:
            self._replay()
            if writable:
                self._fh = open(self.path, "a", encoding="utf-8")
        except Exception:
            self._release_lock()
            raise

    def _replay(self) -> None:
        if not os.path.exists(self.path):
            if not self.writable:
                raise StoreError(f"{self.path}: store file does not exist")
            return
        with open(self.path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = json.loads(line)
                    ns, key = entry["ns"], entry["key"]
                    if entry.get("enc") == "b64":
                        value = base64.b64decode(entry["val"])
                    else:
                        value = entry["val"].encode("utf-8")
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                    raise StoreError(f"{self.path}:{lineno}: corrupt log entry: {e}") from None
                self._index[(ns, key)] = value

    def get(self, ns: str, key: str) -> Optional[bytes]:
        return self._index.get((ns, key))

    def put(self, ns: str, key: str, value: bytes) -> None:
        if self._fh is None:
            raise StoreError(f"{self.path}: store opened read-only")
        try:
            text = value.decode("utf-8")
            entry = {"ns": ns, "key": key, "enc": "utf8", "val": text}
            # Reject text that would not survive a JSON round-trip (lone
            # surrogates from decode errors).
            json.dumps(text)
        except (UnicodeDecodeError, UnicodeEncodeError, ValueError):
            entry = {"ns": ns, "key": key, "enc": "b64", "val": base64.b64encode(value).decode("ascii")}
        self._fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        self._index[(ns, key)] = value

    def keys(self, ns: str) -> list[str]:
        return sorted(k for (n, k) in self._index if n == ns)

    def items(self, ns: str) -> Iterator[tuple[str, bytes]]:
        for key in self.keys(ns):
            yield key, self._index[(ns, key)]

    def flush(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        if self._fh is not None:
            self.flush()
            self._fh.close()
            self._fh = None
        self._release_lock()

    def _release_lock(self) -> None:
        if self._lock is not None:
            self._lock.release()
            self._lock = None

    def __enter__(self) -> "FileKvStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __len__(self) -> int:
        return len(self._index)
