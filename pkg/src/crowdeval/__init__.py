"""Disagreement-aware evaluation for bilingual tweet classification.

The pipeline: parse a multi-annotator corpus (:mod:`crowdeval.corpus`),
aggregate votes into soft/hard gold labels (:mod:`crowdeval.labels`), score
system runs against them with information-contrast measures, cross entropy
and F1 (:mod:`crowdeval.metrics`, :mod:`crowdeval.runs`), and optionally
produce runs via few-shot LLM annotation (:mod:`crowdeval.fewshot`).
"""
from __future__ import annotations

from .corpus import (
    AnnotatedTweet,
    AnnotatorProfile,
    Corpus,
    CorpusError,
    CorpusParseError,
    SchemaError,
    TestTweet,
    filter_corpus,
    load_corpus,
    parse_corpus,
    save_corpus,
    serialize_corpus,
)
from .fewshot import (
    Annotation,
    FewshotError,
    LlmEndpointConfig,
    PromptSpec,
    TransportError,
    annotate,
    build_prompt,
    parse_response,
    sample_exemplars,
    scripted_responder,
)
from .labels import (
    TASK1_VOCAB,
    TASK2_VOCAB,
    CategoryModel,
    LabelError,
    LabelSummary,
    TaskVocabulary,
    aggregate_task1,
    aggregate_task2,
    estimate_priors,
    infer_task,
    read_gold,
    summarize_corpus,
    vocabulary_for,
    write_gold,
)
from .metrics import (
    DEFAULT_CONFIG,
    CoverageError,
    ItemPrediction,
    MetricConfig,
    MetricError,
    ScoreReport,
    cross_entropy,
    f1,
    ic,
    icm_hard,
    icm_soft,
    normalize_icm,
    render_reports,
    score_run,
)
from .runs import (
    Run,
    RunError,
    compare,
    emit_submission,
    generate_baseline,
    load_run,
    load_run_file,
)

__version__ = "0.1.0"
