"""Inference and run-file export.

Writes the two-file output contract: a hard run (argmax labels) and a
soft run (per-category softmax probabilities), both in the exchange
format the evaluation toolkit's ``score`` command accepts.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import torch

from .data import labels_for_task, read_corpus
from .modeling import load_checkpoint


def predict(checkpoint: str | Path, texts: Sequence[str], task: int | str,
            batch_size: int = 32, max_length: int = 64) -> list[list[float]]:
    """Softmax probability vectors (category order = task label order)."""
    labels = labels_for_task(task)
    model, tokenizer = load_checkpoint(checkpoint, num_labels=len(labels))
    model.eval()
    probs: list[list[float]] = []
    with torch.no_grad():
        for lo in range(0, len(texts), batch_size):
            chunk = list(texts[lo:lo + batch_size])
            enc = tokenizer(chunk, padding=True, truncation=True,
                            max_length=max_length, return_tensors="pt")
            logits = model(**enc).logits
            batch = torch.softmax(logits.double(), dim=-1)
            probs.extend([float(w) for w in row] for row in batch)
    return probs


def _emit(doc: list[dict], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=True) + "\n",
        "utf-8",
    )


def predict_and_export(checkpoint: str | Path, corpus_path: str | Path,
                       task: int | str, hard_out: str | Path,
                       soft_out: str | Path, batch_size: int = 32,
                       max_length: int = 64) -> int:
    """Classify every instance of a corpus file and write both run files.

    The hard label is always the argmax of the exported soft vector.
    Returns the number of items written.
    """
    labels = labels_for_task(task)
    examples = read_corpus(corpus_path, task)
    probs = predict(checkpoint, [ex.text for ex in examples], task,
                    batch_size=batch_size, max_length=max_length)

    hard_doc, soft_doc = [], []
    for ex, vector in zip(examples, probs):
        best = max(range(len(labels)), key=lambda i: (vector[i], -i))
        hard_doc.append({"id": ex.id, "value": labels[best]})
        soft_doc.append({"id": ex.id,
                         "value": {c: w for c, w in zip(labels, vector)}})
    _emit(hard_doc, hard_out)
    _emit(soft_doc, soft_out)
    return len(examples)
