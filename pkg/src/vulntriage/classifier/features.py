"""Text to sparse feature vectors via seeded feature hashing.

No vocabulary is ever built: each token is hashed straight into a
fixed-size index space, so featurization is stateless and two processes
with the same config produce bit-identical vectors.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from ..hashing import seeded_token_hash

DEFAULT_DIMS = 1 << 18
DEFAULT_HASH_SEED = 2024
TF_MODES = ("binary", "count", "log_count")

_TOKEN_RE = re.compile(r"[0-9a-z]+")


@dataclass(frozen=True)
class TokenizerConfig:
    """Tokenization knobs; part of the persisted model config."""

    lowercase: bool = True
    max_tokens: int = 512

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")

    def to_dict(self) -> dict:
        return {"lowercase": self.lowercase, "max_tokens": self.max_tokens}

    @classmethod
    def from_dict(cls, d: dict) -> "TokenizerConfig":
        return cls(lowercase=d["lowercase"], max_tokens=d["max_tokens"])


@dataclass(frozen=True)
class FeatureSpace:
    """Hashed index space: dimensionality, seed and term weighting."""

    dims: int = DEFAULT_DIMS
    hash_seed: int = DEFAULT_HASH_SEED
    tf_mode: str = "binary"

    def __post_init__(self):
        if self.dims < 2 or self.dims & (self.dims - 1):
            raise ValueError(f"dims must be a power of two >= 2, got {self.dims}")
        if self.tf_mode not in TF_MODES:
            raise ValueError(f"tf_mode {self.tf_mode!r} not one of {TF_MODES}")

    def to_dict(self) -> dict:
        return {"dims": self.dims, "hash_seed": self.hash_seed, "tf_mode": self.tf_mode}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpace":
        return cls(dims=d["dims"], hash_seed=d["hash_seed"], tf_mode=d["tf_mode"])


def tokenize(text: str, config: TokenizerConfig) -> list[str]:
    """Alphanumeric runs of the (optionally lowercased) text, truncated."""
    if config.lowercase:
        text = text.lower()
        tokens = _TOKEN_RE.findall(text)
    else:
        tokens = re.findall(r"[0-9A-Za-z]+", text)
    return tokens[: config.max_tokens]


def featurize(
    text: str, space: FeatureSpace, config: TokenizerConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Sparse vector for one text: (sorted unique int64 indices, float64 values).

    Index = seeded 64-bit token hash masked to dims. Colliding tokens share
    an index; their counts merge before term weighting is applied.
    """
    counts: dict[int, int] = {}
    for token in tokenize(text, config):
        idx = seeded_token_hash(token, space.hash_seed) & (space.dims - 1)
        counts[idx] = counts.get(idx, 0) + 1
    if not counts:
        return (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    indices = np.array(sorted(counts), dtype=np.int64)
    if space.tf_mode == "binary":
        values = np.ones(len(indices), dtype=np.float64)
    elif space.tf_mode == "count":
        values = np.array([float(counts[i]) for i in indices], dtype=np.float64)
    else:
        values = np.array([1.0 + math.log(counts[i]) for i in indices], dtype=np.float64)
    return indices, values
