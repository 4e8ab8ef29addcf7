"""Classifier model container, inference, and the on-disk model format.

The file layout is: 8-byte magic, u32 format version, u32 config length,
config JSON, weight matrix then bias as little-endian float64, and a
trailing SHA-256 over everything before it. The digest makes a truncated
or bit-flipped artifact fail loudly at load time instead of serving
garbage scores.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..severity import LABEL_ORDER, SeverityLabel
from . import kernels
from .features import FeatureSpace, TokenizerConfig, featurize

MODEL_MAGIC = b"VTRIAGE\x00"
MODEL_FORMAT_VERSION = 1


class ModelFormatError(Exception):
    """File is not a readable model artifact."""


class InferenceError(Exception):
    """Forward pass produced unusable output."""


@dataclass(frozen=True)
class Prediction:
    """One classification: winning label plus the full distribution."""

    label: SeverityLabel
    probabilities: dict[SeverityLabel, float]

    def __post_init__(self):
        total = sum(self.probabilities.values())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {total!r}, not 1")


@dataclass
class ClassifierModel:
    """Linear softmax head over a hashed feature space."""

    tokenizer: TokenizerConfig
    feature_space: FeatureSpace
    weights: np.ndarray  # (n_classes, dims) float64
    bias: np.ndarray  # (n_classes,) float64
    labels: tuple[SeverityLabel, ...] = field(default=LABEL_ORDER)

    def __post_init__(self):
        expected = (len(self.labels), self.feature_space.dims)
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float64)
        if self.weights.shape != expected:
            raise ValueError(f"weights shape {self.weights.shape} != {expected}")
        if self.bias.shape != (len(self.labels),):
            raise ValueError(f"bias shape {self.bias.shape} != ({len(self.labels)},)")

    @classmethod
    def zeros(cls, tokenizer: TokenizerConfig, feature_space: FeatureSpace) -> "ClassifierModel":
        """Fresh model at the origin; the softmax objective is convex, so
        zero init is a fine starting point."""
        return cls(
            tokenizer=tokenizer,
            feature_space=feature_space,
            weights=np.zeros((len(LABEL_ORDER), feature_space.dims), dtype=np.float64),
            bias=np.zeros(len(LABEL_ORDER), dtype=np.float64),
        )

    def logits_for(self, indices: np.ndarray, values: np.ndarray) -> np.ndarray:
        indptr = np.array([0, len(indices)], dtype=np.int64)
        return kernels.forward_csr(self.weights, self.bias, indptr, indices, values)[0]

    def predict_text(self, text: str) -> Prediction:
        """Classify one text. A text with no recognizable tokens is scored
        from the bias alone."""
        indices, values = featurize(text, self.feature_space, self.tokenizer)
        logits = self.logits_for(indices, values)
        if not np.all(np.isfinite(logits)):
            raise InferenceError(f"non-finite logits {logits.tolist()}")
        probs = _softmax(logits)
        # Argmax with ties resolved toward the lower severity rank.
        winner = int(np.argmax(probs))
        return Prediction(
            label=self.labels[winner],
            probabilities={label: float(p) for label, p in zip(self.labels, probs)},
        )


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    ez = np.exp(shifted)
    return ez / np.sum(ez)


def save_model(model: ClassifierModel, path: str) -> None:
    """Write the model artifact; see module docstring for the layout."""
    config = {
        "tokenizer": model.tokenizer.to_dict(),
        "feature_space": model.feature_space.to_dict(),
        "labels": [label.value for label in model.labels],
    }
    blob = json.dumps(config, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    digest = hashlib.sha256()
    with open(path, "wb") as fh:
        for chunk in (
            MODEL_MAGIC,
            struct.pack("<I", MODEL_FORMAT_VERSION),
            struct.pack("<I", len(blob)),
            blob,
            np.ascontiguousarray(model.weights, dtype="<f8").tobytes(),
            np.ascontiguousarray(model.bias, dtype="<f8").tobytes(),
        ):
            digest.update(chunk)
            fh.write(chunk)
        fh.write(digest.digest())


def load_model(path: str) -> ClassifierModel:
    """Read a model artifact, verifying magic, version and digest."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as e:
        raise ModelFormatError(f"{path}: {e}") from None
    min_len = len(MODEL_MAGIC) + 8 + 32
    if len(raw) < min_len or raw[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: not a severity classifier model file")
    body, stored = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != stored:
        raise ModelFormatError(f"{path}: digest mismatch; file is corrupt or truncated")
    offset = len(MODEL_MAGIC)
    (version,) = struct.unpack_from("<I", body, offset)
    offset += 4
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: format version {version}, this build reads {MODEL_FORMAT_VERSION}"
        )
    (config_len,) = struct.unpack_from("<I", body, offset)
    offset += 4
    try:
        config = json.loads(body[offset : offset + config_len].decode("utf-8"))
        offset += config_len
        tokenizer = TokenizerConfig.from_dict(config["tokenizer"])
        feature_space = FeatureSpace.from_dict(config["feature_space"])
        labels = tuple(SeverityLabel(v) for v in config["labels"])
    except (json.JSONDecodeError, KeyError, ValueError, UnicodeDecodeError) as e:
        raise ModelFormatError(f"{path}: bad config block: {e}") from None
    n_params = len(labels) * feature_space.dims
    expected_len = offset + (n_params + len(labels)) * 8
    if len(body) != expected_len:
        raise ModelFormatError(
            f"{path}: payload is {len(body)} bytes, layout expects {expected_len}"
        )
    weights = np.frombuffer(body, dtype="<f8", count=n_params, offset=offset)
    offset += n_params * 8
    bias = np.frombuffer(body, dtype="<f8", count=len(labels), offset=offset)
    return ClassifierModel(
        tokenizer=tokenizer,
        feature_space=feature_space,
        weights=weights.reshape(len(labels), feature_space.dims).copy(),
        bias=bias.copy(),
        labels=labels,
    )
