"""Tokenizer and encoder construction for the severity classifier.

The trainer runs in environments with no model-hub access, so the
default path builds everything locally: a byte-level BPE tokenizer
trained on the snapshot corpus and a compact roberta-style encoder with
a 4-class head. A pretrained checkpoint directory can be substituted for
the encoder when one is available on disk.
"""

from __future__ import annotations

from typing import Iterable, Optional

import torch
from tokenizers import Tokenizer, decoders, models, pre_tokenizers, processors, trainers
from transformers import (
    AutoModelForSequenceClassification,
    AutoTokenizer,
    PreTrainedTokenizerFast,
    RobertaConfig,
    RobertaForSequenceClassification,
)

from .data import ID_TO_LABEL, LABEL_TO_ID

SPECIAL_TOKENS = ["<s>", "<pad>", "</s>", "<unk>", "<mask>"]


def train_tokenizer(
    texts: Iterable[str], vocab_size: int, max_length: int
) -> PreTrainedTokenizerFast:
    """Byte-level BPE learned from the given corpus."""
    tok = Tokenizer(models.BPE(unk_token=None))
    tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    tok.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(
        vocab_size=vocab_size,
        special_tokens=SPECIAL_TOKENS,
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
        show_progress=False,
    )
    tok.train_from_iterator(texts, trainer)
    tok.post_processor = processors.RobertaProcessing(
        sep=("</s>", tok.token_to_id("</s>")),
        cls=("<s>", tok.token_to_id("<s>")),
    )
    return PreTrainedTokenizerFast(
        tokenizer_object=tok,
        model_max_length=max_length,
        bos_token="<s>",
        eos_token="</s>",
        cls_token="<s>",
        sep_token="</s>",
        pad_token="<pad>",
        unk_token="<unk>",
        mask_token="<mask>",
    )


def build_model(
    tokenizer: PreTrainedTokenizerFast,
    max_length: int,
    hidden_size: int = 128,
    num_layers: int = 2,
    num_heads: int = 4,
) -> RobertaForSequenceClassification:
    """A small randomly initialized encoder with a 4-class head."""
    config = RobertaConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=hidden_size * 4,
        max_position_embeddings=max_length + 2,
        type_vocab_size=1,
        num_labels=len(LABEL_TO_ID),
        id2label=ID_TO_LABEL,
        label2id=LABEL_TO_ID,
        pad_token_id=tokenizer.pad_token_id,
        bos_token_id=tokenizer.bos_token_id,
        eos_token_id=tokenizer.eos_token_id,
    )
    return RobertaForSequenceClassification(config)


def load_pretrained(
    checkpoint_dir: str, max_length: Optional[int] = None
) -> tuple[PreTrainedTokenizerFast, torch.nn.Module]:
    """Load a saved tokenizer/model pair from a local directory.

    The classifier head is configured for the 4 severity labels; a
    checkpoint with a different head width is re-headed.
    """
    tokenizer = AutoTokenizer.from_pretrained(checkpoint_dir)
    model = AutoModelForSequenceClassification.from_pretrained(
        checkpoint_dir,
        num_labels=len(LABEL_TO_ID),
        id2label=ID_TO_LABEL,
        label2id=LABEL_TO_ID,
        ignore_mismatched_sizes=True,
    )
    if max_length is not None:
        tokenizer.model_max_length = max_length
    return tokenizer, model
