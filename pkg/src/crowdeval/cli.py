"""Command-line interface.

Subcommands: validate, gold, baseline, score, report, prompt, annotate.
Exit codes: 0 on success, 1 on invalid input or usage, 2 when an input
file cannot be read or the annotation endpoint cannot be reached.
"""
from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path
from typing import Sequence

from . import corpus as corpus_mod
from .corpus import CorpusError, load_corpus
from .fewshot import (
    FewshotError,
    LlmEndpointConfig,
    PromptSpec,
    TransportError,
    annotate,
    build_prompt,
    load_endpoint_config,
    sample_exemplars,
    scripted_responder,
)
from .labels import (
    LabelError,
    infer_task,
    read_gold,
    summarize_corpus,
    vocabulary_for,
    write_gold,
)
from .metrics import MetricError, render_reports, score_run
from .runs import BASELINE_KINDS, RunError, compare, emit_submission, generate_baseline, load_run_file

_USAGE_EXIT = 1
_IO_EXIT = 2


class _Parser(argparse.ArgumentParser):
    """argparse, but usage problems exit 1 instead of 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(_USAGE_EXIT)


def _read_gold_file(path: str):
    summaries = read_gold(Path(path).read_bytes())
    if not summaries:
        raise LabelError(f"gold file {path} is empty")
    return summaries


def _task_for(args, summaries) -> object:
    if args.task:
        return vocabulary_for(args.task)
    return infer_task(summaries)


def _write_out(text_or_bytes: str | bytes, out: str | None) -> None:
    data = text_or_bytes if isinstance(text_or_bytes, bytes) \
        else text_or_bytes.encode("utf-8")
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))


def _cmd_validate(args) -> int:
    corpus = load_corpus(args.corpus, mode=args.mode)
    for message in corpus.provenance.warnings:
        sys.stderr.write(f"warning: {message}\n")
    counts = Counter((inst.split, inst.lang) for inst in corpus)
    print(f"instances\t{len(corpus)}")
    for split in corpus_mod.SPLITS:
        for lang in corpus_mod.LANGS:
            if counts[(split, lang)]:
                print(f"{split}/{lang}\t{counts[(split, lang)]}")
    print(f"warnings\t{len(corpus.provenance.warnings)}")
    print(f"quarantined\t{len(corpus.provenance.quarantined)}")
    return 0


def _cmd_gold(args) -> int:
    corpus = load_corpus(args.corpus, mode=args.mode)
    summaries = summarize_corpus(corpus, args.task)
    if not summaries:
        raise LabelError(f"corpus {args.corpus} has no annotated instances")
    _write_out(write_gold(summaries), args.out)
    return 0


def _cmd_baseline(args) -> int:
    summaries = _read_gold_file(args.gold)
    vocab = _task_for(args, summaries)
    run = generate_baseline(args.kind, summaries, vocab)
    _write_out(emit_submission(run), args.out)
    return 0


def _cmd_score(args) -> int:
    summaries = _read_gold_file(args.gold)
    vocab = _task_for(args, summaries)
    reports = [
        score_run(load_run_file(path, vocab), summaries, lang=args.lang, vocab=vocab)
        for path in args.runs
    ]
    sys.stdout.write(render_reports(reports, fmt=args.format))
    return 0


def _cmd_report(args) -> int:
    summaries = _read_gold_file(args.gold)
    vocab = _task_for(args, summaries)
    runs = [load_run_file(path, vocab) for path in args.runs]
    scopes: list[str | None] = [None]
    scopes += [lang for lang in corpus_mod.LANGS
               if any(s.lang == lang for s in summaries)]
    sections = [compare(runs, summaries, task=vocab, lang=scope) for scope in scopes]

    if args.format == "tsv":
        flat = [report for section in sections for report in section]
        sys.stdout.write(render_reports(flat, fmt="tsv", scope_column=True))
        return 0
    blocks = []
    for scope, section in zip(scopes, sections):
        title = "Overall" if scope is None else scope
        blocks.append(f"# {title}\n" + render_reports(section, fmt="table"))
    sys.stdout.write("\n".join(blocks))
    return 0


def _cmd_prompt(args) -> int:
    corpus = load_corpus(args.corpus, mode=args.mode)
    target = next((inst for inst in corpus if inst.id == args.target_id), None)
    if target is None:
        raise FewshotError(f"target {args.target_id!r} not found in {args.corpus}")
    exemplars = sample_exemplars(corpus, args.task, args.seed, exclude_id=target.id)
    spec = PromptSpec(
        task=vocabulary_for(args.task).task,
        exemplars=exemplars,
        target_id=target.id,
        target_text=target.text,
        target_lang=target.lang,
        template_id=args.template,
        seed=args.seed,
    )
    print(build_prompt(spec))
    return 0


def _cmd_annotate(args) -> int:
    corpus = load_corpus(args.corpus, mode=args.mode)
    if args.targets:
        targets = list(load_corpus(args.targets, mode=args.mode))
    else:
        targets = [inst for inst in corpus if inst.split == "TEST"]
    if not targets:
        raise FewshotError("no targets: corpus has no TEST instances and no "
                           "--targets file was given")

    if args.endpoint_config:
        cfg = load_endpoint_config(args.endpoint_config)
    elif args.dry_run:
        cfg = LlmEndpointConfig(base_url="", model="scripted", backoff_seconds=0.0)
    else:
        raise FewshotError("either --endpoint-config or --dry-run is required")
    responder = scripted_responder(args.dry_run) if args.dry_run else None

    run, annotations = annotate(
        targets, corpus, cfg, args.task,
        seed=args.seed, responder=responder, run_name=args.name,
    )
    _write_out(emit_submission(run), args.out)
    if args.annotations_out:
        lines = [
            json.dumps({
                "id": a.id, "status": a.status, "attempts": a.attempts,
                "parsed": a.parsed, "raw_response": a.raw_response,
            }, ensure_ascii=False)
            for a in annotations
        ]
        Path(args.annotations_out).write_text("\n".join(lines) + "\n", "utf-8")
    tallies = Counter(a.status for a in annotations)
    summary = ", ".join(f"{tallies[s]} {s}" for s in ("ok", "unparseable", "transport_error")
                        if tallies[s])
    sys.stderr.write(f"annotated {len(annotations)} targets: {summary}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crowdeval",
                     description="Disagreement-aware evaluation for bilingual "
                                 "tweet classification")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_mode(p):
        p.add_argument("--mode", choices=("strict", "lenient"), default="strict",
                       help="schema violations: fail fast or quarantine+warn")

    def add_task(p, required: bool = False):
        p.add_argument("--task", choices=("1", "2", "task1", "task2"),
                       required=required, default=None,
                       help="which task the labels belong to"
                            + ("" if required else " (default: inferred)"))

    p = sub.add_parser("validate", help="parse a corpus and print split counts")
    p.add_argument("corpus")
    add_mode(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("gold", help="aggregate votes into a gold label file")
    p.add_argument("corpus")
    add_task(p, required=True)
    add_mode(p)
    p.add_argument("-o", "--out", default=None, help="output path (default stdout)")
    p.set_defaults(func=_cmd_gold)

    p = sub.add_parser("baseline", help="derive a reference run from a gold file")
    p.add_argument("gold")
    p.add_argument("--kind", choices=BASELINE_KINDS, required=True)
    add_task(p)
    p.add_argument("-o", "--out", default=None, help="output path (default stdout)")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("score", help="score run files against a gold file")
    p.add_argument("gold")
    p.add_argument("runs", nargs="+", metavar="run")
    add_task(p)
    p.add_argument("--lang", choices=corpus_mod.LANGS, default=None,
                   help="restrict scoring to one language")
    p.add_argument("--format", choices=("table", "tsv"), default="table")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("report", help="score runs next to baselines, overall and per language")
    p.add_argument("gold")
    p.add_argument("runs", nargs="*", metavar="run")
    add_task(p)
    p.add_argument("--format", choices=("table", "tsv"), default="table")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("prompt", help="print the few-shot prompt for one target")
    p.add_argument("corpus")
    p.add_argument("--target-id", required=True)
    add_task(p, required=True)
    add_mode(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--template", default="v1")
    p.set_defaults(func=_cmd_prompt)

    p = sub.add_parser("annotate", help="label targets via a few-shot LLM endpoint")
    p.add_argument("corpus", help="exemplar source (and TEST-split target source)")
    p.add_argument("--targets", default=None,
                   help="corpus file with the instances to annotate")
    add_task(p, required=True)
    add_mode(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--endpoint-config", default=None,
                   help="JSON file describing the chat-completion endpoint")
    p.add_argument("--dry-run", default=None, metavar="RESPONSES_JSONL",
                   help="replay scripted responses instead of calling an endpoint")
    p.add_argument("--name", default="llm", help="run name used in score tables")
    p.add_argument("-o", "--out", default=None, help="run output path (default stdout)")
    p.add_argument("--annotations-out", default=None,
                   help="JSONL path for the per-target annotation log")
    p.set_defaults(func=_cmd_annotate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (CorpusError, LabelError, MetricError, RunError, FewshotError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return _USAGE_EXIT
    except TransportError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return _IO_EXIT
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return _IO_EXIT


if __name__ == "__main__":
    sys.exit(main())
