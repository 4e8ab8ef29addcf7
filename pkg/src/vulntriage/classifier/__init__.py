"""Hashed bag-of-words severity classifier: features, kernels, model, training."""

from .features import FeatureSpace, TokenizerConfig, featurize, tokenize
from .model import ClassifierModel, Prediction, load_model, save_model
from .train import TrainConfig, train

__all__ = [
    "ClassifierModel",
    "FeatureSpace",
    "Prediction",
    "TokenizerConfig",
    "TrainConfig",
    "featurize",
    "load_model",
    "save_model",
    "tokenize",
    "train",
]
