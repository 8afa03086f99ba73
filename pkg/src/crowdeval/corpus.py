"""Multi-annotator tweet corpus: parsing, validation, filtering, serialization.

The on-disk format is UTF-8 JSON, either an array of instance objects or an
object keyed by instance id. Train/dev instances carry the tweet plus six
parallel per-annotator arrays (demographic profiles and one vote list per
task); test instances carry only id, lang, tweet and split. Parsing is
strict by default (any invariant violation raises); lenient mode quarantines
structurally unusable instances and downgrades value-level problems to
warnings, both recorded on the returned corpus.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterator, Mapping

LANGS = ("EN", "ES")
SPLITS = ("TRAIN", "DEV", "TEST")

DASH = "-"
UNKNOWN = "UNKNOWN"

GENDERS = ("F", "M")
AGE_GROUPS = ("18-22", "23-45", "46+")
ETHNICITIES = (
    "Black or African America",
    "Hispano or Latino",
    "White or Caucasian",
    "Multiracial",
    "Asian",
    "Asian Indian",
    "Middle Eastern",
)
STUDY_LEVELS = (
    "Less than high school diploma",
    "High school degree or equivalent",
    "Bachelor's degree",
    "Master's degree",
    "Doctorate",
)

TASK1_VOTES = ("YES", "NO")
TASK2_VOTES = ("DIRECT", "REPORTED", "JUDGEMENTAL", DASH, UNKNOWN)
TASK3_VOTES = (
    "IDEOLOGICAL-INEQUALITY",
    "STEREOTYPING-DOMINANCE",
    "OBJECTIFICATION",
    "SEXUAL-VIOLENCE",
    "MISOGYNY-NON-SEXUAL-VIOLENCE",
    DASH,
    UNKNOWN,
)

# Instance attributes in canonical serialization order.
_CORE_FIELDS = ("id_EXIST", "lang", "tweet")
_ANNOTATION_FIELDS = (
    "number_annotators",
    "annotators",
    "gender_annotators",
    "age_annotators",
    "ethnicity_annotators",
    "study_level_annotators",
    "country_annotators",
    "labels_task1",
    "labels_task2",
    "labels_task3",
)
_KNOWN_FIELDS = frozenset(_CORE_FIELDS + _ANNOTATION_FIELDS + ("split",))


class CorpusError(Exception):
    """Base class for corpus-level failures."""


class CorpusParseError(CorpusError):
    """Raised when the input is not valid JSON (or not valid UTF-8).

    ``byte_offset`` locates the first offending byte in the raw input.
    """

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte {byte_offset})")
        self.byte_offset = byte_offset


class SchemaError(CorpusError):
    """Raised in strict mode when an instance violates the corpus schema."""


@dataclass(frozen=True)
class AnnotatorProfile:
    gender: str
    age_group: str
    ethnicity: str
    study_level: str
    country: str


@dataclass(frozen=True)
class AnnotatedTweet:
    """A labelled instance with one vote per annotator and task."""

    id: str
    lang: str
    text: str
    split: str
    split_raw: str
    n_annotators: int
    annotator_ids: tuple[str, ...]
    profiles: tuple[AnnotatorProfile, ...]
    votes_task1: tuple[str, ...]
    votes_task2: tuple[str, ...]
    votes_task3: tuple[tuple[str, ...], ...]
    extra: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class TestTweet:
    """An unlabelled instance (test split): text and identity only."""

    __test__ = False  # keep pytest from collecting this as a test class

    id: str
    lang: str
    text: str
    split: str
    split_raw: str
    extra: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Provenance:
    source: str = "<memory>"
    mode: str = "strict"
    container: str = "array"  # "array" | "object"
    warnings: tuple[str, ...] = ()
    quarantined: tuple[str, ...] = ()


@dataclass(frozen=True)
class Corpus:
    """An immutable sequence of instances plus how/where they were read."""

    instances: tuple[AnnotatedTweet | TestTweet, ...]
    provenance: Provenance = field(default=Provenance(), compare=False)

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[AnnotatedTweet | TestTweet]:
        return iter(self.instances)


def _normalize_apostrophes(value: str) -> str:
    return value.replace("’", "'")


class _Collector:
    """Accumulates problems; raises immediately in strict mode."""

    def __init__(self, mode: str):
        if mode not in ("strict", "lenient"):
            raise ValueError(f"unknown parse mode {mode!r}")
        self.mode = mode
        self.warnings: list[str] = []
        self.quarantined: list[str] = []

    def fatal(self, ref: str, message: str) -> None:
        # Structurally unusable instance: reject (strict) or quarantine (lenient).
        if self.mode == "strict":
            raise SchemaError(f"instance {ref}: {message}")
        self.quarantined.append(ref)
        self.warnings.append(f"instance {ref} quarantined: {message}")

    def warn(self, ref: str, message: str) -> None:
        # Value-level problem on an otherwise usable instance.
        if self.mode == "strict":
            raise SchemaError(f"instance {ref}: {message}")
        self.warnings.append(f"instance {ref}: {message}")


def _require_str(obj: Mapping[str, Any], key: str, ref: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value:
        raise SchemaError(f"instance {ref}: {key!r} must be a non-empty string")
    return value


def _parse_instance(
    key: str | None, obj: Any, problems: _Collector
) -> AnnotatedTweet | TestTweet | None:
    ref = key if key is not None else "<array item>"
    if not isinstance(obj, dict):
        problems.fatal(ref, "instance is not a JSON object")
        return None

    raw_id = obj.get("id_EXIST", key)
    if raw_id is None:
        problems.fatal(ref, "missing 'id_EXIST'")
        return None
    if isinstance(raw_id, int):
        raw_id = str(raw_id)
    if not isinstance(raw_id, str) or not raw_id:
        problems.fatal(ref, "'id_EXIST' must be a non-empty string")
        return None
    ref = raw_id
    if key is not None and "id_EXIST" in obj and str(obj["id_EXIST"]) != key:
        problems.warn(ref, f"container key {key!r} disagrees with 'id_EXIST'")

    try:
        lang_raw = _require_str(obj, "lang", ref)
        text = _require_str(obj, "tweet", ref)
        split_raw = _require_str(obj, "split", ref)
    except SchemaError as exc:
        problems.fatal(ref, str(exc).split(": ", 1)[1])
        return None

    lang = lang_raw.upper()
    if lang not in LANGS:
        problems.fatal(ref, f"unknown lang {lang_raw!r}")
        return None

    split = split_raw.split("_", 1)[0]
    if split not in SPLITS:
        problems.fatal(ref, f"unknown split {split_raw!r}")
        return None
    if "_" in split_raw:
        suffix = split_raw.split("_", 1)[1]
        if suffix not in LANGS:
            problems.warn(ref, f"unknown split language tag {split_raw!r}")
        elif suffix != lang:
            problems.warn(ref, f"split tag {split_raw!r} disagrees with lang {lang_raw!r}")

    extra = {k: v for k, v in obj.items() if k not in _KNOWN_FIELDS}

    if split == "TEST":
        stray = [f for f in _ANNOTATION_FIELDS if f in obj]
        if stray:
            problems.fatal(ref, f"test instance carries annotation fields {stray}")
            return None
        return TestTweet(id=raw_id, lang=lang, text=text, split=split,
                         split_raw=split_raw, extra=extra)

    missing = [f for f in _ANNOTATION_FIELDS if f not in obj]
    if missing:
        problems.fatal(ref, f"missing annotation fields {missing}")
        return None

    n = obj["number_annotators"]
    if isinstance(n, str) and n.isdigit():
        n = int(n)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        problems.fatal(ref, "'number_annotators' must be a positive integer")
        return None

    arrays = {}
    for f in _ANNOTATION_FIELDS[1:]:
        value = obj[f]
        if not isinstance(value, list):
            problems.fatal(ref, f"{f!r} must be an array")
            return None
        if len(value) != n:
            problems.fatal(
                ref, f"{f!r} has {len(value)} entries, expected number_annotators={n}"
            )
            return None
        arrays[f] = value

    def bad_values(name: str, values: list[Any], allowed: tuple[str, ...]) -> bool:
        rogue = [v for v in values if not isinstance(v, str) or v not in allowed]
        if rogue:
            problems.fatal(ref, f"{name!r} contains invalid vote {rogue[0]!r}")
            return True
        return False

    if bad_values("labels_task1", arrays["labels_task1"], TASK1_VOTES):
        return None
    if bad_values("labels_task2", arrays["labels_task2"], TASK2_VOTES):
        return None
    task3: list[tuple[str, ...]] = []
    for entry in arrays["labels_task3"]:
        if not isinstance(entry, list):
            problems.fatal(ref, "'labels_task3' entries must be arrays of labels")
            return None
        if bad_values("labels_task3", entry, TASK3_VOTES):
            return None
        task3.append(tuple(entry))

    profiles = []
    for i in range(n):
        gender = arrays["gender_annotators"][i]
        age = arrays["age_annotators"][i]
        ethnicity = arrays["ethnicity_annotators"][i]
        study = arrays["study_level_annotators"][i]
        country = arrays["country_annotators"][i]
        if gender not in GENDERS:
            problems.warn(ref, f"unknown annotator gender {gender!r}")
        if age not in AGE_GROUPS:
            problems.warn(ref, f"unknown annotator age group {age!r}")
        if not isinstance(ethnicity, str) or _normalize_apostrophes(ethnicity) not in ETHNICITIES:
            problems.warn(ref, f"unknown annotator ethnicity {ethnicity!r}")
        if not isinstance(study, str) or _normalize_apostrophes(study) not in STUDY_LEVELS:
            problems.warn(ref, f"unknown annotator study level {study!r}")
        if not isinstance(country, str):
            problems.warn(ref, f"annotator country must be a string, got {country!r}")
            country = str(country)
        profiles.append(AnnotatorProfile(
            gender=str(gender), age_group=str(age), ethnicity=str(ethnicity),
            study_level=str(study), country=country,
        ))

    # A "-" intent vote must pair with a NO relevance vote and vice versa.
    for i, (v1, v2) in enumerate(zip(arrays["labels_task1"], arrays["labels_task2"])):
        if v2 == UNKNOWN:
            continue
        if (v1 == "NO") != (v2 == DASH):
            problems.warn(
                ref, f"annotator {i}: task1 vote {v1!r} inconsistent with task2 vote {v2!r}"
            )

    return AnnotatedTweet(
        id=raw_id,
        lang=lang,
        text=text,
        split=split,
        split_raw=split_raw,
        n_annotators=n,
        annotator_ids=tuple(str(a) for a in arrays["annotators"]),
        profiles=tuple(profiles),
        votes_task1=tuple(arrays["labels_task1"]),
        votes_task2=tuple(arrays["labels_task2"]),
        votes_task3=tuple(task3),
        extra=extra,
    )


def parse_corpus(raw: bytes | str, mode: str = "strict", source: str = "<memory>") -> Corpus:
    """Parse a corpus from raw JSON bytes (or text).

    In strict mode the first schema violation raises :class:`SchemaError`.
    In lenient mode unusable instances are quarantined (dropped, their ids
    recorded) and value-level oddities become warnings; both surface on
    ``corpus.provenance``. Malformed JSON raises :class:`CorpusParseError`
    with a byte offset in both modes.
    """
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorpusParseError("invalid UTF-8", exc.start) from exc
    else:
        text = raw

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise CorpusParseError(f"malformed JSON: {exc.msg}", offset) from exc

    problems = _Collector(mode)
    if isinstance(doc, list):
        container = "array"
        items: list[tuple[str | None, Any]] = [(None, obj) for obj in doc]
    elif isinstance(doc, dict):
        container = "object"
        items = list(doc.items())
    else:
        raise SchemaError("corpus must be a JSON array or object of instances")

    instances: list[AnnotatedTweet | TestTweet] = []
    seen: set[str] = set()
    for key, obj in items:
        inst = _parse_instance(key, obj, problems)
        if inst is None:
            continue
        if inst.id in seen:
            problems.fatal(inst.id, "duplicate id")
            continue
        seen.add(inst.id)
        instances.append(inst)

    return Corpus(
        instances=tuple(instances),
        provenance=Provenance(
            source=source,
            mode=mode,
            container=container,
            warnings=tuple(problems.warnings),
            quarantined=tuple(problems.quarantined),
        ),
    )


def load_corpus(path: str | Path, mode: str = "strict") -> Corpus:
    """Read and parse a corpus file."""
    p = Path(path)
    return parse_corpus(p.read_bytes(), mode=mode, source=str(p))


def _instance_to_obj(inst: AnnotatedTweet | TestTweet) -> dict[str, Any]:
    obj: dict[str, Any] = {
        "id_EXIST": inst.id,
        "lang": inst.lang.lower(),
        "tweet": inst.text,
    }
    if isinstance(inst, AnnotatedTweet):
        obj["number_annotators"] = inst.n_annotators
        obj["annotators"] = list(inst.annotator_ids)
        obj["gender_annotators"] = [p.gender for p in inst.profiles]
        obj["age_annotators"] = [p.age_group for p in inst.profiles]
        obj["ethnicity_annotators"] = [p.ethnicity for p in inst.profiles]
        obj["study_level_annotators"] = [p.study_level for p in inst.profiles]
        obj["country_annotators"] = [p.country for p in inst.profiles]
        obj["labels_task1"] = list(inst.votes_task1)
        obj["labels_task2"] = list(inst.votes_task2)
        obj["labels_task3"] = [list(entry) for entry in inst.votes_task3]
    obj["split"] = inst.split_raw
    obj.update(inst.extra)
    return obj


def serialize_corpus(corpus: Corpus) -> bytes:
    """Render a corpus back to canonical JSON bytes.

    Canonical form: instance fields in the documented order, two-space
    indentation, non-ASCII characters kept literal, trailing newline. The
    container shape (array vs object keyed by id) follows provenance, so a
    parsed file round-trips to its original shape.
    """
    if corpus.provenance.container == "object":
        doc: Any = {inst.id: _instance_to_obj(inst) for inst in corpus.instances}
    else:
        doc = [_instance_to_obj(inst) for inst in corpus.instances]
    return (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_bytes(serialize_corpus(corpus))


def filter_corpus(corpus: Corpus, lang: str | None = None, split: str | None = None) -> Corpus:
    """Subset a corpus by language and/or split (both optional, conjunctive)."""
    if lang is not None and lang.upper() not in LANGS:
        raise ValueError(f"unknown lang {lang!r}")
    if split is not None and split.upper() not in SPLITS:
        raise ValueError(f"unknown split {split!r}")
    kept = tuple(
        inst
        for inst in corpus.instances
        if (lang is None or inst.lang == lang.upper())
        and (split is None or inst.split == split.upper())
    )
    return Corpus(instances=kept, provenance=replace(corpus.provenance))
