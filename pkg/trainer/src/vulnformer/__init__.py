"""Transformer severity classifier trained on vulntriage snapshots."""

from .finetune import FinetuneConfig, FinetuneError, run_finetune

__all__ = ["FinetuneConfig", "FinetuneError", "run_finetune"]
