"""Checkpoint construction and loading.

Checkpoints are ordinary ``transformers`` directories (config, safetensors
weights, tokenizer files), so ``model:`` in a training config can point at
either a local directory or any hub identifier of a compatible sequence
classifier. ``build_tiny_checkpoint`` creates a deterministic, randomly
initialized miniature encoder for tests and offline smoke runs.
"""
from __future__ import annotations

from pathlib import Path

import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
from transformers import BertConfig, BertForSequenceClassification, BertTokenizerFast
from transformers.utils import logging as hf_logging

from .errors import ConfigError

hf_logging.set_verbosity_error()
hf_logging.disable_progress_bar()

_SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
_CHARS = "abcdefghijklmnopqrstuvwxyz0123456789"


def _tiny_vocab(extra_tokens: tuple[str, ...]) -> list[str]:
    """WordPiece vocabulary that can spell any lowercase word character by
    character, plus optional whole-word tokens."""
    vocab = list(_SPECIALS)
    vocab += list(_CHARS)
    vocab += ["##" + c for c in _CHARS]
    for token in extra_tokens:
        if token not in vocab:
            vocab.append(token)
    return vocab


def _wordpiece_tokenizer(vocab: list[str]) -> BertTokenizerFast:
    """Assemble a BERT-style WordPiece tokenizer from an explicit vocabulary."""
    ids = {token: i for i, token in enumerate(vocab)}
    backend = Tokenizer(models.WordPiece(ids, unk_token="[UNK]"))
    backend.normalizer = normalizers.BertNormalizer(lowercase=True)
    backend.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    backend.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B:1 [SEP]:1",
        special_tokens=[("[CLS]", ids["[CLS]"]), ("[SEP]", ids["[SEP]"])],
    )
    return BertTokenizerFast(tokenizer_object=backend, unk_token="[UNK]",
                             pad_token="[PAD]", cls_token="[CLS]",
                             sep_token="[SEP]", mask_token="[MASK]")


def build_tiny_checkpoint(out_dir: str | Path, num_labels: int, seed: int = 0,
                          hidden_size: int = 32, num_layers: int = 2,
                          num_heads: int = 2, max_positions: int = 128,
                          extra_tokens: tuple[str, ...] = ()) -> str:
    """Write a miniature randomly initialized classifier checkpoint.

    The same seed always produces byte-identical weights.
    """
    if num_labels < 2:
        raise ConfigError(f"num_labels must be at least 2, got {num_labels}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vocab = _tiny_vocab(extra_tokens)
    tokenizer = _wordpiece_tokenizer(vocab)

    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=hidden_size * 2,
        max_position_embeddings=max_positions,
        num_labels=num_labels,
        pad_token_id=0,
    )
    model = BertForSequenceClassification(config)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return str(out)


def load_checkpoint(model_id: str | Path, num_labels: int):
    """Load a sequence-classification checkpoint and its tokenizer.

    Raises ConfigError when the classifier head does not match the task's
    category count.
    """
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    model = AutoModelForSequenceClassification.from_pretrained(str(model_id))
    if model.config.num_labels != num_labels:
        raise ConfigError(
            f"checkpoint {model_id} classifies {model.config.num_labels} "
            f"categories but the task has {num_labels}"
        )
    tokenizer = AutoTokenizer.from_pretrained(str(model_id))
    return model, tokenizer
