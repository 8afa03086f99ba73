"""Command-line interface: make-tiny, train, export, grid.

Exit codes: 0 on success, 1 on invalid configuration or data, 2 when a
file cannot be read.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .data import labels_for_task
from .errors import ConfigError, DataError, TrainerError
from .export import predict_and_export
from .modeling import build_tiny_checkpoint
from .training import (
    TrainConfig,
    grid_search,
    load_train_config,
    render_grid,
    train,
)

_USAGE_EXIT = 1
_IO_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(_USAGE_EXIT)


def _cmd_make_tiny(args) -> int:
    path = build_tiny_checkpoint(args.out, num_labels=len(labels_for_task(args.task)),
                                 seed=args.seed, hidden_size=args.hidden_size)
    print(path)
    return 0


def _log_lines(result) -> list[str]:
    lines = []
    for entry in result.log:
        marker = " *" if entry.epoch == result.best_epoch else ""
        lines.append(
            f"epoch {entry.epoch}: train_loss {entry.train_loss:.4f}  "
            f"dev_loss {entry.dev_loss:.4f}  acc {entry.accuracy:.4f}  "
            f"f1 {entry.f1:.4f}{marker}"
        )
    return lines


def _cmd_train(args) -> int:
    config = load_train_config(args.config)
    result = train(config, args.train_corpus, args.dev_corpus, args.out)
    for line in _log_lines(result):
        print(line)
    print(f"saved best checkpoint (epoch {result.best_epoch}) to "
          f"{result.checkpoint_dir}")
    return 0


def _cmd_export(args) -> int:
    n = predict_and_export(args.checkpoint, args.corpus, args.task,
                           hard_out=args.hard_out, soft_out=args.soft_out,
                           batch_size=args.batch_size)
    print(f"exported {n} predictions to {args.hard_out} and {args.soft_out}")
    return 0


def _cmd_grid(args) -> int:
    try:
        doc = json.loads(Path(args.configs).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.configs}: malformed JSON: {exc}") from None
    if not isinstance(doc, list):
        raise ConfigError(f"{args.configs}: expected a JSON array of configs")
    configs = [TrainConfig(**entry) for entry in doc]
    rows = grid_search(configs, args.train_corpus, args.dev_corpus, args.work_dir)
    sys.stdout.write(render_grid(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crowdtrain",
                     description="Fine-tune tweet classifiers on crowd labels "
                                 "and export scoreable run files")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("make-tiny",
                       help="write a miniature randomly initialized checkpoint")
    p.add_argument("out")
    p.add_argument("--task", choices=("1", "2", "task1", "task2"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden-size", type=int, default=32)
    p.set_defaults(func=_cmd_make_tiny)

    p = sub.add_parser("train", help="fine-tune one configuration")
    p.add_argument("config", help="TrainConfig JSON file")
    p.add_argument("train_corpus")
    p.add_argument("dev_corpus")
    p.add_argument("-o", "--out", required=True, help="checkpoint output directory")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("export", help="classify a corpus into hard+soft run files")
    p.add_argument("checkpoint")
    p.add_argument("corpus")
    p.add_argument("--task", choices=("1", "2", "task1", "task2"), required=True)
    p.add_argument("--hard-out", required=True)
    p.add_argument("--soft-out", required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("grid", help="train several configs and rank by dev F1")
    p.add_argument("configs", help="JSON array of TrainConfig objects")
    p.add_argument("train_corpus")
    p.add_argument("dev_corpus")
    p.add_argument("-d", "--work-dir", required=True,
                   help="directory for per-config checkpoints")
    p.set_defaults(func=_cmd_grid)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, DataError, TrainerError, ValueError, TypeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return _USAGE_EXIT
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return _IO_EXIT


if __name__ == "__main__":
    sys.exit(main())
