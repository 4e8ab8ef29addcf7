"""Shared fixtures: fixture paths, a synced store, and a trained model.

The trained model and its snapshot are session-scoped because training,
even at desk scale, is the slowest thing the suite does; every consumer
treats them as read-only.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from corpus import make_planted_corpus, write_osv_feed  # noqa: E402

from vulntriage.classifier.train import TrainConfig, train
from vulntriage.dataset import build_snapshot, load_split
from vulntriage.ingest import FeedConfig, sync
from vulntriage.kvstore import FileKvStore
from vulntriage.severity import DEFAULT_POLICY

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def planted_entries() -> list[dict]:
    return make_planted_corpus(n=2000, seed=7)


@pytest.fixture(scope="session")
def planted_snapshot(tmp_path_factory, planted_entries):
    """Feed -> store -> snapshot for the 2,000-row planted corpus."""
    root = tmp_path_factory.mktemp("planted")
    feed_dir = root / "feed"
    write_osv_feed(planted_entries, str(feed_dir))
    store_path = root / "records.kv"
    with FileKvStore(str(store_path)) as store:
        result = sync(FeedConfig(name="planted", kind="osv", uri=str(feed_dir)), store)
        assert result.stored_new == len(planted_entries)
        manifest, snapshot_dir = build_snapshot(
            store, DEFAULT_POLICY, str(root / "snapshots"), created_at="2024-06-01"
        )
    return {"manifest": manifest, "dir": snapshot_dir, "store_path": str(store_path)}


@pytest.fixture(scope="session")
def trained(planted_snapshot):
    """A model trained on the planted train split, plus its eval rows."""
    train_rows = load_split(planted_snapshot["dir"], "train")
    test_rows = load_split(planted_snapshot["dir"], "test")
    model, log = train(train_rows, TrainConfig(), eval_rows=test_rows)
    return {
        "model": model,
        "log": log,
        "train_rows": train_rows,
        "test_rows": test_rows,
        "snapshot": planted_snapshot,
    }
