"""Disagreement-aware scoring: information-contrast measures, cross entropy, F1.

A label assignment is scored by its information content under category
statistics estimated from the gold data itself. The contrast of a predicted
assignment A against a gold assignment B is

    alpha1*IC(A) + alpha2*IC(B) - beta*IC(A u B)

which with the default coefficients (2, 2, 3) equals IC(A) when A == B and
goes negative as the assignments diverge. The hard variant draws IC from
category priors; the soft variant scores each weighted category by how rare
a weight at least that large is among the gold items. Dataset scores are
means over items; np.mean's pairwise summation keeps them bit-stable
regardless of how the item axis is chunked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .labels import (
    CategoryModel,
    LabelSummary,
    TaskVocabulary,
    canonical_category,
    estimate_priors,
    vocabulary_for,
)

METRIC_COLUMNS = ("ICM-Soft", "ICM-Soft Norm", "Cross Entropy", "ICM-Hard",
                  "ICM-Hard Norm", "F1")


class MetricError(Exception):
    """Raised when a metric cannot be computed from the given inputs."""


class CoverageError(MetricError):
    """Raised when a run fails to cover every scoreable gold item."""

    def __init__(self, message: str, missing: Sequence[str]):
        shown = ", ".join(sorted(missing)[:5])
        more = "" if len(missing) <= 5 else f" (+{len(missing) - 5} more)"
        super().__init__(f"{message}: {shown}{more}")
        self.missing = tuple(sorted(missing))


@dataclass(frozen=True)
class MetricConfig:
    """Contrast coefficients and the cross-entropy probability floor."""

    alpha1: float = 2.0
    alpha2: float = 2.0
    beta: float = 3.0
    epsilon: float = 1e-4

    def __post_init__(self):
        if not (0.0 < self.epsilon < 0.5):
            raise ValueError(f"epsilon must lie in (0, 0.5), got {self.epsilon}")


DEFAULT_CONFIG = MetricConfig()


@dataclass(frozen=True)
class ItemPrediction:
    """One run's output for one instance: a hard label, a soft map, or both.

    Soft maps are dense (one weight per vocabulary category).
    """

    id: str
    hard: str | None = None
    soft: Mapping[str, float] | None = None

    def __post_init__(self):
        if self.hard is None and self.soft is None:
            raise ValueError(f"prediction {self.id!r} has neither hard nor soft value")


@dataclass(frozen=True)
class ScoreReport:
    """All six metrics for one run on one scope; None = not computable."""

    name: str
    scope: str
    icm_soft: float | None
    icm_soft_norm: float | None
    cross_entropy: float | None
    icm_hard: float | None
    icm_hard_norm: float | None
    f1: float | None
    n_scored: Mapping[str, int] = field(default_factory=dict)

    def values(self) -> tuple[float | None, ...]:
        return (self.icm_soft, self.icm_soft_norm, self.cross_entropy,
                self.icm_hard, self.icm_hard_norm, self.f1)


def ic(category: str, model: CategoryModel) -> float:
    """Information content of one category, in bits."""
    label = canonical_category(category, model.vocab)
    p = model.priors[label]
    if p <= 0.0:
        raise MetricError(f"category {label!r} has prior 0")
    return -math.log2(p)


def _hard_pairs(predictions: Sequence[ItemPrediction], gold: Sequence[LabelSummary],
                what: str) -> list[tuple[str, str]]:
    by_id: dict[str, ItemPrediction] = {}
    for p in predictions:
        if p.id in by_id:
            raise MetricError(f"duplicate prediction for {p.id!r}")
        by_id[p.id] = p
    scored = [s for s in gold if s.hard is not None]
    if not scored:
        raise MetricError(f"no gold items with a hard label to score {what} on")
    missing = [s.id for s in scored if s.id not in by_id or by_id[s.id].hard is None]
    if missing:
        raise CoverageError("run lacks a hard label for gold items", missing)
    return [(by_id[s.id].hard, s.hard) for s in scored]  # type: ignore[misc]


def icm_hard(predictions: Sequence[ItemPrediction], gold: Sequence[LabelSummary],
             model: CategoryModel, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """Mean information contrast of hard predictions against hard gold."""
    pairs = _hard_pairs(predictions, gold, "ICM-Hard")
    scores = np.empty(len(pairs), dtype=np.float64)
    for i, (sys_label, gold_label) in enumerate(pairs):
        ic_s = ic(sys_label, model)
        ic_g = ic(gold_label, model)
        if canonical_category(sys_label, model.vocab) == canonical_category(gold_label, model.vocab):
            union = ic_s
        else:
            union = ic_s + ic_g
        scores[i] = cfg.alpha1 * ic_s + cfg.alpha2 * ic_g - cfg.beta * union
    return float(np.mean(scores))


def _exceedance_ic(model: CategoryModel, category: str, weight: float) -> float:
    """Bits of surprise in ``category`` carrying a weight of at least ``weight``."""
    if model.n_soft_items == 0:
        raise MetricError("model has no soft marginals")
    marginal = model.soft_marginals[category]
    at_least = len(marginal) - int(np.searchsorted(marginal, weight, side="left"))
    floor = 1.0 / (2.0 * model.n_soft_items)
    p = max(at_least / model.n_soft_items, floor)
    return -math.log2(p)


def soft_assignment_ic(soft: Mapping[str, float], model: CategoryModel) -> float:
    """Information content of a weighted assignment: sum over its positive weights."""
    total = 0.0
    for category, weight in soft.items():
        if category not in model.vocab.categories:
            raise MetricError(f"category {category!r} not in {model.vocab.task} vocabulary")
        if weight > 0.0:
            total += _exceedance_ic(model, category, weight)
    return total


def _check_soft(p: ItemPrediction, vocab: TaskVocabulary) -> Mapping[str, float]:
    soft = p.soft
    if soft is None:
        raise CoverageError("run lacks a soft label for gold items", [p.id])
    total = 0.0
    for category, weight in soft.items():
        if category not in vocab.categories:
            raise MetricError(f"prediction {p.id!r}: unknown category {category!r}")
        if not math.isfinite(weight) or weight < 0.0:
            raise MetricError(f"prediction {p.id!r}: invalid weight {weight!r}")
        total += weight
    if abs(total - 1.0) > 1e-6:
        raise MetricError(f"prediction {p.id!r}: probabilities sum to {total:.6g}")
    return soft


def icm_soft(predictions: Sequence[ItemPrediction], gold: Sequence[LabelSummary],
             model: CategoryModel, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """Mean information contrast of soft predictions against soft gold."""
    by_id: dict[str, ItemPrediction] = {}
    for p in predictions:
        if p.id in by_id:
            raise MetricError(f"duplicate prediction for {p.id!r}")
        by_id[p.id] = p
    scored = [s for s in gold if s.soft]
    if not scored:
        raise MetricError("no gold items with a soft label to score ICM-Soft on")
    missing = [s.id for s in scored if s.id not in by_id]
    if missing:
        raise CoverageError("run lacks predictions for gold items", missing)

    scores = np.empty(len(scored), dtype=np.float64)
    for i, s in enumerate(scored):
        sys_soft = _check_soft(by_id[s.id], model.vocab)
        ic_s = soft_assignment_ic(sys_soft, model)
        ic_g = soft_assignment_ic(s.soft, model)
        union = {
            c: max(sys_soft.get(c, 0.0), s.soft.get(c, 0.0))
            for c in set(sys_soft) | set(s.soft)
        }
        ic_u = soft_assignment_ic(union, model)
        scores[i] = cfg.alpha1 * ic_s + cfg.alpha2 * ic_g - cfg.beta * ic_u
    return float(np.mean(scores))


def normalize_icm(score: float, gold_self_score: float) -> float:
    """Map a raw contrast score into [0, 1] with gold-vs-gold pinned at 1."""
    if gold_self_score <= 0.0:
        raise MetricError(
            f"gold self-score must be positive, got {gold_self_score!r} (degenerate gold)"
        )
    return min(1.0, max(0.0, 0.5 + score / (2.0 * gold_self_score)))


def cross_entropy(predictions: Sequence[ItemPrediction], gold: Sequence[LabelSummary],
                  cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """Mean cross entropy (nats) of soft predictions under soft gold."""
    by_id: dict[str, ItemPrediction] = {}
    for p in predictions:
        if p.id in by_id:
            raise MetricError(f"duplicate prediction for {p.id!r}")
        by_id[p.id] = p
    scored = [s for s in gold if s.soft]
    if not scored:
        raise MetricError("no gold items with a soft label to score cross entropy on")
    missing = [s.id for s in scored if s.id not in by_id or by_id[s.id].soft is None]
    if missing:
        raise CoverageError("run lacks a soft label for gold items", missing)

    scores = np.empty(len(scored), dtype=np.float64)
    for i, s in enumerate(scored):
        sys_soft = by_id[s.id].soft
        assert sys_soft is not None
        total = sum(sys_soft.values())
        if abs(total - 1.0) > 1e-6:
            raise MetricError(f"prediction {s.id!r}: probabilities sum to {total:.6g}")
        scores[i] = -sum(
            g * math.log(max(sys_soft.get(c, 0.0), cfg.epsilon))
            for c, g in s.soft.items()
        )
    return float(np.mean(scores))


def f1(predictions: Sequence[ItemPrediction], gold: Sequence[LabelSummary],
       vocab: TaskVocabulary) -> float:
    """Classification F1 on hard labels.

    Binary F1 on YES for the relevance task; otherwise the macro average
    over the full vocabulary, a class absent from both gold and predictions
    contributing 0 to a fixed-size denominator.
    """
    pairs = _hard_pairs(predictions, gold, "F1")
    pairs = [
        (canonical_category(s, vocab), canonical_category(g, vocab)) for s, g in pairs
    ]

    def single(category: str) -> float:
        tp = sum(1 for s, g in pairs if s == category and g == category)
        fp = sum(1 for s, g in pairs if s == category and g != category)
        fn = sum(1 for s, g in pairs if s != category and g == category)
        if tp == 0:
            return 0.0
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
        return 2.0 * precision * recall / (precision + recall)

    if vocab.task == "task1":
        return single("YES")
    return sum(single(c) for c in vocab.categories) / len(vocab.categories)


def _argmax_category(soft: Mapping[str, float], vocab: TaskVocabulary) -> str:
    best = None
    best_weight = -1.0
    for c in vocab.categories:
        w = soft.get(c, 0.0)
        if w > best_weight:
            best, best_weight = c, w
    assert best is not None
    return best


def score_run(run, gold: Sequence[LabelSummary], cfg: MetricConfig = DEFAULT_CONFIG,
              lang: str | None = None, vocab: TaskVocabulary | None = None) -> ScoreReport:
    """Score one run against gold summaries, optionally for one language.

    Hard metrics (ICM-Hard, its norm, F1) are computed for every run, the
    hard label of a soft-only prediction being its argmax category (ties to
    the earlier vocabulary category). Soft metrics are computed only for
    soft runs. Metrics whose gold side is empty come back as None.
    """
    if vocab is None:
        vocab = vocabulary_for(run.task)
    scope = lang.upper() if lang else "ALL"
    scoped = [s for s in gold if lang is None or s.lang == lang.upper()]
    if not scoped:
        raise MetricError(f"no gold items in scope {scope}")
    model = estimate_priors(scoped, vocab)

    hard_gold = [s for s in scoped if s.hard is not None]
    soft_gold = [s for s in scoped if s.soft]

    hard_preds = [
        p if p.hard is not None
        else ItemPrediction(id=p.id, hard=_argmax_category(p.soft or {}, vocab))
        for p in run.predictions
    ]

    icm_h = norm_h = f1_val = None
    if hard_gold:
        gold_as_preds = [ItemPrediction(id=s.id, hard=s.hard) for s in hard_gold]
        self_hard = icm_hard(gold_as_preds, hard_gold, model, cfg)
        icm_h = icm_hard(hard_preds, hard_gold, model, cfg)
        norm_h = normalize_icm(icm_h, self_hard)
        f1_val = f1(hard_preds, hard_gold, vocab)

    icm_s = norm_s = ce = None
    if run.kind == "soft" and soft_gold:
        gold_as_preds = [ItemPrediction(id=s.id, soft=s.soft) for s in soft_gold]
        self_soft = icm_soft(gold_as_preds, soft_gold, model, cfg)
        icm_s = icm_soft(run.predictions, soft_gold, model, cfg)
        norm_s = normalize_icm(icm_s, self_soft)
        ce = cross_entropy(run.predictions, soft_gold, cfg)

    n_hard, n_soft = len(hard_gold), len(soft_gold)
    return ScoreReport(
        name=run.name,
        scope=scope,
        icm_soft=icm_s,
        icm_soft_norm=norm_s,
        cross_entropy=ce,
        icm_hard=icm_h,
        icm_hard_norm=norm_h,
        f1=f1_val,
        n_scored={
            "ICM-Soft": n_soft if icm_s is not None else 0,
            "ICM-Soft Norm": n_soft if norm_s is not None else 0,
            "Cross Entropy": n_soft if ce is not None else 0,
            "ICM-Hard": n_hard if icm_h is not None else 0,
            "ICM-Hard Norm": n_hard if norm_h is not None else 0,
            "F1": n_hard if f1_val is not None else 0,
        },
    )


def render_reports(reports: Sequence[ScoreReport], fmt: str = "table",
                   scope_column: bool = False) -> str:
    """Render score reports as an aligned text table or as TSV.

    Tables round to two decimals, TSV keeps six; metrics that were not
    computable render as "-".
    """
    if fmt not in ("table", "tsv"):
        raise ValueError(f"unknown format {fmt!r}")
    headers = (("Run", "Scope") if scope_column else ("Run",)) + METRIC_COLUMNS

    def cells(r: ScoreReport, decimals: int) -> list[str]:
        row = [r.name, r.scope] if scope_column else [r.name]
        row += ["-" if v is None else f"{v:.{decimals}f}" for v in r.values()]
        return row

    if fmt == "tsv":
        lines = ["\t".join(headers)]
        lines += ["\t".join(cells(r, 6)) for r in reports]
        return "\n".join(lines) + "\n"

    rows = [list(headers)] + [cells(r, 2) for r in reports]
    n_label = 2 if scope_column else 1
    widths = [max(len(row[i]) for row in rows) for i in range(len(headers))]
    out = []
    for row in rows:
        padded = [
            row[i].ljust(widths[i]) if i < n_label else row[i].rjust(widths[i])
            for i in range(len(row))
        ]
        out.append("  ".join(padded).rstrip())
    return "\n".join(out) + "\n"
