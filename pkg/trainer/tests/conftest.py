import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from corpus import make_corpus, write_osv_feed  # noqa: E402

from vulnformer.finetune import FinetuneConfig, export_worker, run_finetune  # noqa: E402
from vulntriage.dataset import build_snapshot  # noqa: E402
from vulntriage.ingest import FeedConfig, sync  # noqa: E402
from vulntriage.kvstore import FileKvStore  # noqa: E402
from vulntriage.severity import DEFAULT_POLICY  # noqa: E402

CORPUS_SIZE = 5600


@pytest.fixture(scope="session")
def snapshot(tmp_path_factory):
    """A labeled snapshot built through the base pipeline."""
    root = tmp_path_factory.mktemp("vf-data")
    feed_dir = root / "feed"
    write_osv_feed(make_corpus(CORPUS_SIZE, seed=42), str(feed_dir))
    with FileKvStore(str(root / "records.kv")) as store:
        result = sync(FeedConfig(name="vf", kind="osv", uri=str(feed_dir)), store)
        assert result.stored_new == CORPUS_SIZE
        _, snapshot_dir = build_snapshot(
            store, DEFAULT_POLICY, str(root / "snapshots"), created_at="2024-06-01"
        )
    return snapshot_dir


TEST_CONFIG = FinetuneConfig(
    epochs=1,
    subsample=5000,
    max_length=64,
    learning_rate=5e-4,
    vocab_size=1200,
    hidden_size=128,
    num_layers=2,
    num_heads=4,
    seed=2024,
)


@pytest.fixture(scope="session")
def finetuned(snapshot, tmp_path_factory):
    """One subsampled single-epoch run plus its exported worker bundle."""
    result = run_finetune(snapshot, TEST_CONFIG)
    bundle_dir = tmp_path_factory.mktemp("vf-bundle")
    spec_path = export_worker(result, str(bundle_dir))
    return {
        "result": result,
        "config": TEST_CONFIG,
        "snapshot": snapshot,
        "bundle_dir": str(bundle_dir),
        "spec_path": spec_path,
    }
