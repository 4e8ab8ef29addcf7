"""Single-file JSON configuration for the whole pipeline.

Relative paths inside the file are resolved against the file's own
directory, so a config can travel with its data tree. The only
environment override is VULNTRIAGE_BIND, which replaces the gateway
bind address and nothing else.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

from .classifier.train import TrainConfig
from .dataset import DEFAULT_MIN_DESCRIPTION_CHARS, DEFAULT_SPLIT_RATIO
from .gateway import BackendSpec, GatewayError
from .ingest import FeedConfig
from .severity import DEFAULT_POLICY, LabelingPolicy

DEFAULT_BIND = "127.0.0.1:8300"
BIND_ENV_VAR = "VULNTRIAGE_BIND"


class ConfigError(Exception):
    """Configuration file is missing, unreadable or invalid."""


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the CLI needs, parsed and path-resolved."""

    feeds: tuple[FeedConfig, ...]
    store_path: str
    snapshot_dir: str
    policy: LabelingPolicy
    split_ratio: float
    min_description_chars: int
    train: TrainConfig
    model_path: str
    train_log_path: Optional[str]
    predictions_log_path: Optional[str]
    bind: str
    backends: tuple[BackendSpec, ...]


def _resolve(base: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.normpath(os.path.join(base, path))


def load_config(path: str) -> PipelineConfig:
    """Parse and validate a pipeline config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    base = os.path.dirname(os.path.abspath(path))

    try:
        feeds = []
        for i, f in enumerate(raw.get("feeds", [])):
            uri = f["uri"]
            if "://" not in uri:
                uri = _resolve(base, uri)
            feeds.append(
                FeedConfig(
                    name=f["name"], kind=f["kind"], uri=uri, enabled=f.get("enabled", True)
                )
            )

        store_path = _resolve(base, raw.get("store_path", "data/records.kv"))
        snapshot_dir = _resolve(base, raw.get("snapshot_dir", "data/snapshots"))

        labeling = raw.get("labeling")
        policy = LabelingPolicy.from_dict(labeling) if labeling else DEFAULT_POLICY

        dataset = raw.get("dataset", {})
        split_ratio = float(dataset.get("split_ratio", DEFAULT_SPLIT_RATIO))
        min_chars = int(dataset.get("min_description_chars", DEFAULT_MIN_DESCRIPTION_CHARS))

        train_section = dict(raw.get("train", {}))
        model_path = _resolve(base, train_section.pop("model_path", "data/model.bin"))
        train_log_path = train_section.pop("log_path", None)
        if train_log_path is not None:
            train_log_path = _resolve(base, train_log_path)
        train = TrainConfig(**train_section)

        predictions_log_path = raw.get("predictions_log")
        if predictions_log_path is not None:
            predictions_log_path = _resolve(base, predictions_log_path)

        gateway = raw.get("gateway", {})
        bind = os.environ.get(BIND_ENV_VAR) or gateway.get("bind", DEFAULT_BIND)
        backend_entries = gateway.get("backends")
        if backend_entries is None:
            backend_entries = [
                {"name": "baseline", "kind": "native_baseline", "artifact_path": model_path}
            ]
        backends = tuple(
            BackendSpec(
                name=b["name"],
                kind=b["kind"],
                artifact_path=_resolve(base, b["artifact_path"]),
            )
            for b in backend_entries
        )
    except (KeyError, TypeError, ValueError, GatewayError) as e:
        raise ConfigError(f"{path}: {e}") from None

    return PipelineConfig(
        feeds=tuple(feeds),
        store_path=store_path,
        snapshot_dir=snapshot_dir,
        policy=policy,
        split_ratio=split_ratio,
        min_description_chars=min_chars,
        train=train,
        model_path=model_path,
        train_log_path=train_log_path,
        predictions_log_path=predictions_log_path,
        bind=bind,
        backends=backends,
    )
