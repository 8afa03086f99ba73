"""Corpus reading and training-target derivation.

The trainer consumes the same corpus JSON files the evaluation toolkit
reads and emits run files the toolkit scores; those file formats are the
entire contract between the two packages. The target-derivation rules
below therefore mirror the exchange semantics exactly: hard labels by
absolute majority (task 1) or unique intent plurality (task 2), soft
labels as annotator-vote fractions, UNKNOWN votes dropped, and "-" votes
carrying their mass to NO.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import ConfigError, DataError

TASK1_LABELS = ("YES", "NO")
TASK2_LABELS = ("NO", "DIRECT", "REPORTED", "JUDGEMENTAL")
TARGET_MODES = ("hard-majority", "soft-distribution")


def labels_for_task(task: int | str) -> tuple[str, ...]:
    key = str(task).removeprefix("task")
    if key == "1":
        return TASK1_LABELS
    if key == "2":
        return TASK2_LABELS
    raise ConfigError(f"unknown task {task!r}: expected 1 or 2")


@dataclass(frozen=True)
class Example:
    """One tweet with its derived training targets (either may be absent)."""

    id: str
    lang: str
    text: str
    hard: str | None
    soft: dict[str, float]


def relevance_targets(votes: Sequence[str]) -> tuple[str | None, dict[str, float]]:
    """Hard label by absolute majority, soft label by vote share."""
    counts = Counter(votes)
    n = len(votes)
    soft = {c: counts[c] / n for c in TASK1_LABELS if counts[c]}
    hard = next((c for c in TASK1_LABELS if 2 * counts[c] > n), None)
    return hard, soft


def intent_targets(votes1: Sequence[str],
                   votes2: Sequence[str]) -> tuple[str | None, dict[str, float]]:
    """Intent targets over the four canonical categories.

    UNKNOWN votes are dropped before normalization; "-" votes count as NO.
    The hard target is NO when the relevance majority is NO, the unique
    intent plurality when it is YES, and absent otherwise.
    """
    counted = [v for v in votes2 if v != "UNKNOWN"]
    if not counted:
        return None, {}
    mapped = Counter("NO" if v == "-" else v for v in counted)
    soft = {c: mapped[c] / len(counted) for c in TASK2_LABELS if mapped[c]}

    rel_votes = (list(votes1) if votes1
                 else ["NO" if v == "-" else "YES" for v in votes2])
    relevance, _ = relevance_targets(rel_votes)
    if relevance == "NO":
        return "NO", soft
    if relevance != "YES":
        return None, soft
    intents = Counter(v for v in counted if v != "-")
    if not intents:
        return None, soft
    (top, top_n), *rest = intents.most_common()
    return (top if not rest or rest[0][1] < top_n else None), soft


def read_corpus(path: str | Path, task: int | str) -> list[Example]:
    """Read a corpus JSON file and derive per-item training targets.

    Accepts both container shapes (array, or object keyed by id). Items
    without annotations (e.g. test-split tweets) come back with no targets.
    """
    labels_for_task(task)
    task_no = str(task).removeprefix("task")
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON: {exc}") from None

    objs = list(doc.values()) if isinstance(doc, dict) else doc
    if not isinstance(objs, list):
        raise DataError(f"{path}: expected an array or object of instances")

    examples = []
    seen = set()
    for i, obj in enumerate(objs):
        if not isinstance(obj, dict):
            raise DataError(f"{path}: instance #{i} is not an object")
        try:
            item_id = str(obj["id_EXIST"])
            lang = str(obj["lang"]).upper()
            text = obj["tweet"]
        except KeyError as exc:
            raise DataError(f"{path}: instance #{i} lacks field {exc}") from None
        if not isinstance(text, str) or not text:
            raise DataError(f"{path}: instance {item_id}: tweet must be a "
                            "non-empty string")
        if item_id in seen:
            raise DataError(f"{path}: duplicate instance id {item_id!r}")
        seen.add(item_id)

        votes1 = obj.get("labels_task1")
        votes2 = obj.get("labels_task2")
        if task_no == "1":
            hard, soft = relevance_targets(votes1) if votes1 else (None, {})
        else:
            hard, soft = (intent_targets(votes1 or [], votes2)
                          if votes2 else (None, {}))
        examples.append(Example(id=item_id, lang=lang, text=text,
                                hard=hard, soft=soft))
    return examples


def training_pairs(examples: Sequence[Example], target_mode: str,
                   labels: Sequence[str], what: str):
    """Select the usable examples and their target tensors' raw material.

    Returns (texts, targets) where targets are label indices in hard mode
    and dense probability vectors in soft mode.
    """
    if target_mode not in TARGET_MODES:
        raise ConfigError(f"unknown label-target mode {target_mode!r}: "
                          f"expected one of {TARGET_MODES}")
    texts: list[str] = []
    targets: list = []
    for ex in examples:
        if target_mode == "hard-majority":
            if ex.hard is None:
                continue
            texts.append(ex.text)
            targets.append(labels.index(ex.hard))
        else:
            if not ex.soft:
                continue
            texts.append(ex.text)
            targets.append([ex.soft.get(c, 0.0) for c in labels])
    if not texts:
        raise ConfigError(f"{what} corpus has no instances usable under "
                          f"{target_mode!r} targets")
    return texts, targets
