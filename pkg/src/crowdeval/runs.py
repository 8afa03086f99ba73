"""System run files: loading, validation, emission, reference baselines.

A run file is a JSON array of {"id", "value"} objects, "value" being either
a single label string or a dense label->probability map. One file is one
kind: hard or soft, never mixed.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .corpus import DASH
from .labels import (
    LabelSummary,
    TaskVocabulary,
    canonical_category,
    vocabulary_for,
)
from .metrics import DEFAULT_CONFIG, ItemPrediction, MetricConfig, ScoreReport, score_run

BASELINE_KINDS = ("gold", "majority-class", "minority-class")


class RunError(Exception):
    """Raised on malformed run files or unusable baseline requests."""


@dataclass(frozen=True)
class Run:
    """A named set of predictions for one task."""

    name: str
    task: str
    kind: str  # "hard" | "soft"
    predictions: tuple[ItemPrediction, ...]
    source: str = "<memory>"


def _hard_labels_for(vocab: TaskVocabulary) -> tuple[str, ...]:
    if vocab.task == "task2":
        return vocab.categories + (DASH,)
    return vocab.categories


def load_run(raw: bytes | str, task: str | int | TaskVocabulary, name: str = "run",
             source: str = "<memory>") -> Run:
    """Parse and validate a run file for the given task.

    Checks: well-formed container, exactly the keys "id" and "value" per
    entry, labels in the task vocabulary ("-" allowed for the intent task),
    dense soft maps summing to 1 within 1e-6, unique ids, no mixing of hard
    and soft values.
    """
    vocab = vocabulary_for(task)
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise RunError(f"run {name!r}: malformed JSON: {exc.msg}") from exc
    if not isinstance(doc, list):
        raise RunError(f"run {name!r}: must be a JSON array of predictions")

    allowed_hard = _hard_labels_for(vocab)
    predictions: list[ItemPrediction] = []
    seen: set[str] = set()
    kind: str | None = None
    for i, entry in enumerate(doc):
        where = f"run {name!r} entry {i}"
        if not isinstance(entry, dict) or set(entry) != {"id", "value"}:
            raise RunError(f"{where}: expected an object with exactly 'id' and 'value'")
        item_id = entry["id"]
        if isinstance(item_id, int):
            item_id = str(item_id)
        if not isinstance(item_id, str) or not item_id:
            raise RunError(f"{where}: 'id' must be a non-empty string")
        if item_id in seen:
            raise RunError(f"run {name!r}: duplicate id {item_id!r}")
        seen.add(item_id)
        value = entry["value"]

        if isinstance(value, str):
            if kind == "soft":
                raise RunError(f"{where}: hard value in a soft run")
            kind = "hard"
            if value not in allowed_hard:
                raise RunError(f"{where}: unknown label {value!r} for {vocab.task}")
            predictions.append(ItemPrediction(id=item_id, hard=value))
        elif isinstance(value, dict):
            if kind == "hard":
                raise RunError(f"{where}: soft value in a hard run")
            kind = "soft"
            extra = set(value) - set(vocab.categories)
            if extra:
                raise RunError(f"{where}: unknown label {sorted(extra)[0]!r} for {vocab.task}")
            missing = set(vocab.categories) - set(value)
            if missing:
                raise RunError(
                    f"{where}: missing probability for {sorted(missing)[0]!r}"
                )
            total = 0.0
            for c, w in value.items():
                if not isinstance(w, (int, float)) or isinstance(w, bool) \
                        or not math.isfinite(w) or w < 0.0:
                    raise RunError(f"{where}: invalid probability {w!r} for {c!r}")
                total += float(w)
            if abs(total - 1.0) > 1e-6:
                raise RunError(f"{where}: probabilities sum to {total:.6g}")
            predictions.append(ItemPrediction(
                id=item_id, soft={c: float(value[c]) for c in vocab.categories}
            ))
        else:
            raise RunError(f"{where}: 'value' must be a label or a probability map")

    return Run(name=name, task=vocab.task, kind=kind or "hard",
               predictions=tuple(predictions), source=source)


def load_run_file(path: str | Path, task: str | int | TaskVocabulary,
                  name: str | None = None) -> Run:
    p = Path(path)
    return load_run(p.read_bytes(), task, name=name or p.stem, source=str(p))


def emit_submission(run: Run) -> bytes:
    """Render a run in the exchange format: deterministic, two-space indent."""
    doc = []
    for p in run.predictions:
        if run.kind == "hard":
            value: object = p.hard
        else:
            value = {c: p.soft[c] for c in sorted(p.soft)}  # type: ignore[index]
        doc.append({"id": p.id, "value": value})
    return (json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n").encode("utf-8")


def generate_baseline(kind: str, gold: Sequence[LabelSummary],
                      task: str | int | TaskVocabulary, name: str | None = None) -> Run:
    """Build a reference run from gold summaries.

    "gold" copies each item's own labels; "majority-class" / "minority-class"
    assign every item the most / least frequent gold hard label (ties going
    to the earlier vocabulary category) as a one-hot soft map plus that hard
    label.
    """
    vocab = vocabulary_for(task)
    if kind not in BASELINE_KINDS:
        raise RunError(f"unknown baseline kind {kind!r} (expected one of {BASELINE_KINDS})")
    usable = [s for s in gold if s.hard is not None or s.soft]
    if not usable:
        raise RunError("cannot build a baseline from empty gold")

    predictions: list[ItemPrediction] = []
    if kind == "gold":
        for s in usable:
            soft = {c: s.soft.get(c, 0.0) for c in vocab.categories} if s.soft else None
            predictions.append(ItemPrediction(id=s.id, hard=s.hard, soft=soft))
    else:
        counts = Counter(
            canonical_category(s.hard, vocab) for s in usable if s.hard is not None
        )
        if not counts:
            raise RunError(f"cannot build a {kind} baseline: gold has no hard labels")
        reverse = -1 if kind == "majority-class" else 1
        label = min(
            vocab.categories,
            key=lambda c: (reverse * counts.get(c, 0), vocab.index(c)),
        )
        one_hot = {c: 1.0 if c == label else 0.0 for c in vocab.categories}
        predictions = [
            ItemPrediction(id=s.id, hard=label, soft=one_hot) for s in usable
        ]

    some_soft = any(p.soft is not None for p in predictions)
    return Run(name=name or kind, task=vocab.task,
               kind="soft" if some_soft else "hard",
               predictions=tuple(predictions))


def compare(runs: Sequence[Run], gold: Sequence[LabelSummary],
            task: str | int | TaskVocabulary | None = None,
            cfg: MetricConfig = DEFAULT_CONFIG,
            lang: str | None = None) -> list[ScoreReport]:
    """Score runs against gold next to the three reference baselines.

    Baselines are rebuilt on the same language scope as the runs and come
    first in the result, in a fixed order.
    """
    if task is None:
        if not runs:
            raise RunError("nothing to compare: no runs and no task given")
        task = runs[0].task
    vocab = vocabulary_for(task)
    for r in runs:
        if r.task != vocab.task:
            raise RunError(f"run {r.name!r} is for {r.task}, expected {vocab.task}")

    scoped = [s for s in gold if lang is None or s.lang == lang.upper()]
    reports = []
    for kind in BASELINE_KINDS:
        baseline = generate_baseline(kind, scoped, vocab)
        reports.append(score_run(baseline, scoped, cfg=cfg, vocab=vocab))
    for r in runs:
        reports.append(score_run(r, scoped, cfg=cfg, vocab=vocab))
    scope = lang.upper() if lang else "ALL"
    return [replace(report, scope=scope) for report in reports]
