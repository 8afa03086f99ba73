"""Turning per-annotator votes into soft and hard gold labels.

Soft labels are vote-share distributions; hard labels exist only where the
votes justify one (absolute majority for relevance, unique plurality of
intent votes for intent). Category priors over a set of summaries are
floored at 1/(2*n_items) so no category has infinite information content.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .corpus import DASH, UNKNOWN, AnnotatedTweet, Corpus, TestTweet


class LabelError(Exception):
    """Raised on unusable vote data or malformed gold files."""


@dataclass(frozen=True)
class TaskVocabulary:
    """The closed category set a task is scored over, in canonical order."""

    task: str
    categories: tuple[str, ...]

    def index(self, category: str) -> int:
        return self.categories.index(category)


TASK1_VOCAB = TaskVocabulary("task1", ("YES", "NO"))
TASK2_VOCAB = TaskVocabulary("task2", ("NO", "DIRECT", "REPORTED", "JUDGEMENTAL"))


def vocabulary_for(task: str | int | TaskVocabulary) -> TaskVocabulary:
    """Resolve a task given as 1/2, "task1"/"task2" or a vocabulary itself."""
    if isinstance(task, TaskVocabulary):
        return task
    name = f"task{task}" if isinstance(task, int) else str(task).lower()
    if name in ("task1", "1"):
        return TASK1_VOCAB
    if name in ("task2", "2"):
        return TASK2_VOCAB
    raise LabelError(f"unknown task {task!r}")


def canonical_category(label: str, vocab: TaskVocabulary) -> str:
    """Map a stored label into the scoring vocabulary ("-" counts as NO)."""
    if label == DASH and "NO" in vocab.categories:
        return "NO"
    if label not in vocab.categories:
        raise LabelError(f"label {label!r} not in {vocab.task} vocabulary")
    return label


@dataclass(frozen=True)
class LabelSummary:
    """Aggregated votes for one instance.

    ``soft`` holds only categories that received mass; ``hard`` is None when
    the votes do not determine a single label. For the intent task a
    relevance-majority NO yields the sentinel hard label "-".
    """

    id: str
    soft: Mapping[str, float]
    hard: str | None
    n_counted: int
    lang: str | None = None


def aggregate_task1(tweet: AnnotatedTweet) -> LabelSummary:
    """Relevance labels: soft = vote shares, hard = absolute majority."""
    votes = getattr(tweet, "votes_task1", None)
    if not votes:
        raise LabelError(f"instance {tweet.id}: no relevance votes")
    counts = Counter(votes)
    n = len(votes)
    soft = {c: counts[c] / n for c in TASK1_VOCAB.categories if counts[c]}
    hard = next((c for c in TASK1_VOCAB.categories if counts[c] * 2 > n), None)
    return LabelSummary(id=tweet.id, soft=soft, hard=hard, n_counted=n, lang=tweet.lang)


def aggregate_task2(tweet: AnnotatedTweet) -> LabelSummary:
    """Intent labels.

    UNKNOWN votes are dropped and the rest renormalized; "-" votes carry
    their mass to NO. The hard label is the unique plurality among actual
    intent votes when the instance is relevance-majority YES, the sentinel
    "-" when relevance-majority NO, and absent otherwise.
    """
    votes = getattr(tweet, "votes_task2", None)
    if not votes:
        raise LabelError(f"instance {tweet.id}: no intent votes")
    counted = [v for v in votes if v != UNKNOWN]
    n = len(counted)
    if n == 0:
        return LabelSummary(id=tweet.id, soft={}, hard=None, n_counted=0, lang=tweet.lang)

    mapped = Counter("NO" if v == DASH else v for v in counted)
    soft = {c: mapped[c] / n for c in TASK2_VOCAB.categories if mapped[c]}

    relevance = aggregate_task1(tweet).hard
    if relevance == "NO":
        hard: str | None = DASH
    elif relevance == "YES":
        intent = Counter(v for v in counted if v != DASH)
        hard = None
        if intent:
            (top, top_n), *rest = intent.most_common()
            if not rest or rest[0][1] < top_n:
                hard = top
    else:
        hard = None
    return LabelSummary(id=tweet.id, soft=soft, hard=hard, n_counted=n, lang=tweet.lang)


def summarize_corpus(corpus: Corpus | Iterable[AnnotatedTweet | TestTweet],
                     task: str | int | TaskVocabulary) -> list[LabelSummary]:
    """Aggregate every annotated instance of a corpus for one task.

    Unlabelled (test-split) instances are skipped.
    """
    vocab = vocabulary_for(task)
    agg = aggregate_task1 if vocab.task == "task1" else aggregate_task2
    return [agg(inst) for inst in corpus if isinstance(inst, AnnotatedTweet)]


@dataclass(frozen=True)
class CategoryModel:
    """Frequency estimates a scoring run is conditioned on.

    ``priors`` covers the full vocabulary and sums to 1; ``soft_marginals``
    maps each category to the ascending-sorted per-item weights it received
    (zeros included), over the ``n_soft_items`` items with a soft label.
    """

    vocab: TaskVocabulary
    priors: Mapping[str, float]
    n_items: int
    soft_marginals: Mapping[str, np.ndarray]
    n_soft_items: int


def _floored_distribution(counts: Mapping[str, int], categories: Sequence[str],
                          n: int) -> dict[str, float]:
    """Relative frequencies with every category floored at 1/(2n).

    Floored categories are pinned; the remaining mass is shared among the
    rest proportionally to their counts, repeatedly, since pinning can push
    further categories under the floor.
    """
    floor = 1.0 / (2.0 * n)
    pinned: set[str] = set()
    while True:
        free = [c for c in categories if c not in pinned]
        budget = 1.0 - floor * len(pinned)
        total = sum(counts.get(c, 0) for c in free)
        # All free categories empty: nothing left to distinguish them, share evenly.
        shares = {
            c: budget * (counts.get(c, 0) / total) if total else budget / len(free)
            for c in free
        }
        newly = {c for c, share in shares.items() if share < floor}
        if not newly:
            dist = {c: floor for c in pinned}
            dist.update(shares)
            return {c: dist[c] for c in categories}
        pinned |= newly


def estimate_priors(summaries: Sequence[LabelSummary],
                    vocab: TaskVocabulary) -> CategoryModel:
    """Estimate category priors and soft marginals from gold summaries.

    Priors come from hard labels ("-" counting as NO); with no hard labels
    at all they fall back to uniform so soft-only scoring stays possible.
    """
    hard = [canonical_category(s.hard, vocab) for s in summaries if s.hard is not None]
    soft_items = [s for s in summaries if s.soft]
    if not hard and not soft_items:
        raise LabelError("no usable summaries: every item lacks both hard and soft labels")

    if hard:
        counts = Counter(hard)
        priors = _floored_distribution(counts, vocab.categories, len(hard))
    else:
        priors = {c: 1.0 / len(vocab.categories) for c in vocab.categories}

    marginals = {
        c: np.sort(np.array([s.soft.get(c, 0.0) for s in soft_items], dtype=np.float64))
        for c in vocab.categories
    }
    return CategoryModel(
        vocab=vocab,
        priors=priors,
        n_items=len(hard),
        soft_marginals=marginals,
        n_soft_items=len(soft_items),
    )


def infer_task(summaries: Sequence[LabelSummary]) -> TaskVocabulary:
    """Guess the task from the categories a gold file actually uses."""
    seen: set[str] = set()
    for s in summaries:
        seen.update(s.soft)
        if s.hard is not None:
            seen.add(s.hard)
    if seen & {"DIRECT", "REPORTED", "JUDGEMENTAL", DASH}:
        return TASK2_VOCAB
    if "YES" in seen:
        return TASK1_VOCAB
    raise LabelError(
        "cannot infer task from categories {} -- pass the task explicitly".format(sorted(seen))
    )


def write_gold(summaries: Sequence[LabelSummary]) -> str:
    """Render summaries as the gold-file JSON text (ids sorted)."""
    doc: dict[str, Any] = {}
    for s in sorted(summaries, key=lambda s: s.id):
        if s.id in doc:
            raise LabelError(f"duplicate summary id {s.id!r}")
        entry: dict[str, Any] = {"soft": {c: s.soft[c] for c in sorted(s.soft)}}
        if s.hard is not None:
            entry["hard"] = s.hard
        if s.lang is not None:
            entry["lang"] = s.lang
        entry["n"] = s.n_counted
        doc[s.id] = entry
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def read_gold(text: str | bytes) -> list[LabelSummary]:
    """Parse a gold file back into summaries."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LabelError(f"malformed gold file: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise LabelError("gold file must be an object keyed by instance id")
    out = []
    for item_id, entry in doc.items():
        if not isinstance(entry, dict) or "soft" not in entry:
            raise LabelError(f"gold entry {item_id!r} must be an object with 'soft'")
        soft = entry["soft"]
        if not isinstance(soft, dict) or not all(
            isinstance(v, (int, float)) and v >= 0 for v in soft.values()
        ):
            raise LabelError(f"gold entry {item_id!r}: 'soft' must map labels to weights")
        hard = entry.get("hard")
        if hard is not None and not isinstance(hard, str):
            raise LabelError(f"gold entry {item_id!r}: 'hard' must be a string")
        out.append(LabelSummary(
            id=item_id,
            soft={k: float(v) for k, v in soft.items() if v},
            hard=hard,
            n_counted=int(entry.get("n", 0)),
            lang=entry.get("lang"),
        ))
    return out
