"""Few-shot LLM annotation over a chat-completion HTTP endpoint.

Prompts show six training exemplars (three per language) together with
their raw annotator vote counts, then ask for a single label for the
target tweet. Responses are parsed defensively; targets whose responses
stay unusable after the retry budget fall back to the training majority
class so the resulting run still covers every target.
"""
from __future__ import annotations

import json
import logging
import os
import random
import re
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import requests

from .corpus import DASH, UNKNOWN, AnnotatedTweet, Corpus, TestTweet
from .labels import TaskVocabulary, canonical_category, summarize_corpus, vocabulary_for
from .metrics import ItemPrediction
from .runs import Run

log = logging.getLogger(__name__)

EXEMPLARS_PER_LANG = 3
TEMPLATE_IDS = ("v1",)


class FewshotError(Exception):
    """Raised on unusable prompting inputs or configuration."""


class TransportError(Exception):
    """Raised when the endpoint cannot be reached or answers garbage."""


@dataclass(frozen=True)
class LlmEndpointConfig:
    """Where and how to call the chat-completion endpoint.

    ``token_env`` names the environment variable holding the bearer token;
    the token itself never appears in configuration or logs.
    """

    base_url: str
    model: str
    token_env: str = "CROWDEVAL_LLM_TOKEN"
    timeout: float = 30.0
    max_retries: int = 2
    max_concurrent: int = 4
    temperature: float = 0.0
    backoff_seconds: float = 0.5

    def __post_init__(self):
        if self.max_retries < 0:
            raise FewshotError("max_retries must be >= 0")
        if self.max_concurrent < 1:
            raise FewshotError("max_concurrent must be >= 1")
        if self.backoff_seconds < 0:
            raise FewshotError("backoff_seconds must be >= 0")


_CONFIG_KEYS = ("base_url", "model", "token_env", "timeout", "max_retries",
                "max_concurrent", "temperature", "backoff_seconds")


def load_endpoint_config(path: str | Path) -> LlmEndpointConfig:
    """Read an endpoint config from a JSON object file."""
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise FewshotError(f"endpoint config {path}: malformed JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise FewshotError(f"endpoint config {path}: must be a JSON object")
    unknown = set(doc) - set(_CONFIG_KEYS)
    if unknown:
        raise FewshotError(f"endpoint config {path}: unknown key {sorted(unknown)[0]!r}")
    for key in ("base_url", "model"):
        if key not in doc:
            raise FewshotError(f"endpoint config {path}: missing {key!r}")
    return LlmEndpointConfig(**doc)


@dataclass(frozen=True)
class PromptSpec:
    """Everything that determines one prompt, checkable before rendering."""

    task: str
    exemplars: tuple[AnnotatedTweet, ...]
    target_id: str
    target_text: str
    target_lang: str
    template_id: str = "v1"
    seed: int = 0

    def __post_init__(self):
        vocabulary_for(self.task)
        if self.template_id not in TEMPLATE_IDS:
            raise FewshotError(f"unknown prompt template {self.template_id!r}")
        per_lang = Counter(e.lang for e in self.exemplars)
        if len(self.exemplars) != 2 * EXEMPLARS_PER_LANG or \
                per_lang.get("EN") != EXEMPLARS_PER_LANG or \
                per_lang.get("ES") != EXEMPLARS_PER_LANG:
            raise FewshotError(
                f"expected {EXEMPLARS_PER_LANG} EN + {EXEMPLARS_PER_LANG} ES exemplars, "
                f"got {dict(per_lang)}"
            )
        if any(e.split != "TRAIN" for e in self.exemplars):
            raise FewshotError("exemplars must come from the TRAIN split")
        if any(e.id == self.target_id for e in self.exemplars):
            raise FewshotError(f"target {self.target_id!r} appears among its own exemplars")


@dataclass(frozen=True)
class Annotation:
    """Outcome of annotating one target: what came back and how it went."""

    id: str
    raw_response: str
    parsed: str | None
    attempts: int
    status: str  # "ok" | "unparseable" | "transport_error"


def sample_exemplars(corpus: Corpus, task: str | int | TaskVocabulary, seed: int,
                     exclude_id: str | None = None) -> tuple[AnnotatedTweet, ...]:
    """Draw 3 EN then 3 ES training exemplars, reproducibly for a seed.

    ``exclude_id`` keeps the target itself out of its prompt.
    """
    vocabulary_for(task)
    rng = random.Random(seed)
    picked: list[AnnotatedTweet] = []
    for lang in ("EN", "ES"):
        pool = [
            inst for inst in corpus
            if isinstance(inst, AnnotatedTweet) and inst.split == "TRAIN"
            and inst.lang == lang and inst.id != exclude_id
        ]
        if len(pool) < EXEMPLARS_PER_LANG:
            raise FewshotError(
                f"need {EXEMPLARS_PER_LANG} {lang} training instances, have {len(pool)}"
            )
        picked.extend(rng.sample(pool, EXEMPLARS_PER_LANG))
    return tuple(picked)


def _vote_summary(exemplar: AnnotatedTweet, vocab: TaskVocabulary) -> str:
    if vocab.task == "task1":
        counts = Counter(exemplar.votes_task1)
    else:
        counts = Counter(
            "NO" if v == DASH else v
            for v in exemplar.votes_task2 if v != UNKNOWN
        )
    parts = [f"{counts[c]} x {c}" for c in vocab.categories if counts[c]]
    return ", ".join(parts) if parts else "no usable votes"

_TASK_BRIEFS = {
    "task1": (
        "Decide whether the tweet is sexist. Answer YES if the tweet itself is "
        "sexist, describes a sexist situation, or reports sexist behaviour; "
        "answer NO otherwise."
    ),
    "task2": (
        "Decide the role of the tweet with respect to sexism. Answer DIRECT if "
        "the tweet itself expresses a sexist attitude, REPORTED if it recounts "
        "a sexist situation that happened to the author or someone else, "
        "JUDGEMENTAL if it condemns or criticises sexist behaviour, and NO if "
        "the tweet is not sexist at all."
    ),
}


def build_prompt(spec: PromptSpec) -> str:
    """Render a prompt spec to the final prompt text (template "v1")."""
    vocab = vocabulary_for(spec.task)
    options = " or ".join(vocab.categories) if vocab.task == "task1" \
        else ", ".join(vocab.categories)
    lines = [
        _TASK_BRIEFS[vocab.task],
        "",
        "Each example below was labelled independently by several trained "
        "annotators; the vote counts show how much they agreed.",
        "",
    ]
    for i, e in enumerate(spec.exemplars, start=1):
        lines.append(f"Example {i} ({e.lang.lower()}): {e.text}")
        lines.append(f"Votes: {_vote_summary(e, vocab)}")
        lines.append("")
    lines.append(f"Tweet ({spec.target_lang.lower()}): {spec.target_text}")
    lines.append(f"Answer with exactly one label ({options}):")
    return "\n".join(lines)


def parse_response(raw: str, task: str | int | TaskVocabulary) -> str | None:
    """Extract the single label a response commits to, or None.

    Matching is case-insensitive on word boundaries; a response mentioning
    more than one distinct label (or none) is unusable.
    """
    vocab = vocabulary_for(task)
    found = {
        c for c in vocab.categories
        if re.search(rf"\b{re.escape(c)}\b", raw, flags=re.IGNORECASE)
    }
    if len(found) == 1:
        return found.pop()
    return None


def scripted_responder(path: str | Path) -> Callable[[str, str], str]:
    """Replay responses from a JSONL file of {"id", "response"} records.

    Targets without a scripted response raise TransportError, which makes
    failure handling testable without a network.
    """
    table: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FewshotError(f"{path}:{lineno}: malformed JSONL: {exc.msg}") from exc
        if not isinstance(record, dict) or "id" not in record or "response" not in record:
            raise FewshotError(f"{path}:{lineno}: expected an object with 'id' and 'response'")
        table[str(record["id"])] = str(record["response"])

    def respond(target_id: str, prompt: str) -> str:
        if target_id not in table:
            raise TransportError(f"no scripted response for {target_id!r}")
        return table[target_id]

    return respond


def http_responder(cfg: LlmEndpointConfig) -> Callable[[str, str], str]:
    """Build a responder that POSTs chat-completion requests."""
    token = os.environ.get(cfg.token_env)
    if not token:
        raise TransportError(f"environment variable {cfg.token_env!r} is not set")
    session = requests.Session()

    def respond(target_id: str, prompt: str) -> str:
        payload = {
            "model": cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
        }
        try:
            resp = session.post(
                cfg.base_url,
                json=payload,
                headers={"Authorization": f"Bearer {token}"},
                timeout=cfg.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"request for {target_id!r} failed: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"request for {target_id!r} failed: HTTP {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload for {target_id!r}") from exc

    return respond


def _train_majority(corpus: Corpus, vocab: TaskVocabulary) -> str:
    """Majority gold hard label over the TRAIN split (the fallback label)."""
    train = [
        inst for inst in corpus
        if isinstance(inst, AnnotatedTweet) and inst.split == "TRAIN"
    ]
    counts = Counter(
        canonical_category(s.hard, vocab)
        for s in summarize_corpus(train, vocab)
        if s.hard is not None
    )
    if not counts:
        raise FewshotError("training split has no instances with a hard label")
    return min(vocab.categories, key=lambda c: (-counts.get(c, 0), vocab.index(c)))


def annotate(
    targets: Sequence[AnnotatedTweet | TestTweet],
    corpus: Corpus,
    cfg: LlmEndpointConfig,
    task: str | int | TaskVocabulary,
    seed: int = 0,
    responder: Callable[[str, str], str] | None = None,
    run_name: str = "llm",
) -> tuple[Run, list[Annotation]]:
    """Annotate targets with few-shot prompts; return a hard run plus a log.

    Target i gets exemplars drawn with ``seed + i``, so results do not
    depend on thread scheduling. Each target is attempted up to
    ``max_retries + 1`` times, retrying both transport failures and
    unparseable responses; a target still unusable afterwards is recorded
    with its failure status and falls back to the training majority label.
    Raises TransportError only if every target failed at the transport level.
    """
    vocab = vocabulary_for(task)
    fallback = _train_majority(corpus, vocab)
    if responder is None:
        responder = http_responder(cfg)

    done = 0
    done_lock = threading.Lock()

    def annotate_one(item: tuple[int, AnnotatedTweet | TestTweet]) -> Annotation:
        index, target = item
        exemplars = sample_exemplars(corpus, vocab, seed + index, exclude_id=target.id)
        prompt = build_prompt(PromptSpec(
            task=vocab.task,
            exemplars=exemplars,
            target_id=target.id,
            target_text=target.text,
            target_lang=target.lang,
            seed=seed + index,
        ))
        raw = ""
        status = "transport_error"
        attempts = 0
        while attempts <= cfg.max_retries:
            attempts += 1
            try:
                raw = responder(target.id, prompt)
            except TransportError as exc:
                status = "transport_error"
                log.debug("target %s attempt %d: %s", target.id, attempts, exc)
            else:
                parsed = parse_response(raw, vocab)
                if parsed is not None:
                    return Annotation(id=target.id, raw_response=raw, parsed=parsed,
                                      attempts=attempts, status="ok")
                status = "unparseable"
                log.debug("target %s attempt %d: unparseable response", target.id, attempts)
            if attempts <= cfg.max_retries and cfg.backoff_seconds:
                time.sleep(cfg.backoff_seconds * (2 ** (attempts - 1)))
        return Annotation(id=target.id, raw_response=raw, parsed=None,
                          attempts=attempts, status=status)

    def tracked(item: tuple[int, AnnotatedTweet | TestTweet]) -> Annotation:
        nonlocal done
        result = annotate_one(item)
        with done_lock:
            done += 1
            log.info("annotated %d/%d", done, len(targets))
        return result

    with ThreadPoolExecutor(max_workers=cfg.max_concurrent) as pool:
        annotations = list(pool.map(tracked, enumerate(targets)))

    if targets and all(a.status == "transport_error" for a in annotations):
        raise TransportError("annotation failed: no target got a response")

    predictions = tuple(
        ItemPrediction(id=a.id, hard=a.parsed if a.parsed is not None else fallback)
        for a in annotations
    )
    run = Run(name=run_name, task=vocab.task, kind="hard", predictions=predictions)
    return run, annotations
