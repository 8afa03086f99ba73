"""Fine-tuning with AdamW, a warmup+linear-decay schedule, and early stopping.

``train`` reads corpus files, fine-tunes a sequence classifier on either
majority hard labels or vote-fraction soft distributions, logs per-epoch
train/dev loss plus dev accuracy/precision/recall/F1, and keeps the
checkpoint of the best dev-loss epoch. ``grid_search`` ranks a list of
configurations by their best dev F1.
"""
from __future__ import annotations

import dataclasses
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .data import (
    TARGET_MODES,
    labels_for_task,
    read_corpus,
    training_pairs,
)
from .errors import ConfigError
from .modeling import load_checkpoint

GRID_COLUMNS = ("Accuracy", "Precision", "Recall", "F1-score")
WARMUP_FRACTION = 0.1


@dataclass(frozen=True)
class TrainConfig:
    """Everything one fine-tuning run depends on.

    The numeric defaults are conventional starting points, not tuned
    values; real experiments should sweep them via ``grid_search``.
    """

    model: str
    task: int | str = 1
    target: str = "hard-majority"
    learning_rate: float = 5e-5
    weight_decay: float = 0.01
    epochs: int = 3
    batch_size: int = 16
    patience: int = 2
    seed: int = 0
    max_length: int = 64
    name: str | None = None

    def __post_init__(self):
        if not self.model:
            raise ConfigError("model must name a checkpoint directory or id")
        labels_for_task(self.task)
        if self.target not in TARGET_MODES:
            raise ConfigError(f"unknown label-target mode {self.target!r}: "
                              f"expected one of {TARGET_MODES}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, "
                              f"got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be at least 1, got {self.epochs}")
        if self.patience < 0:
            raise ConfigError(f"patience must be non-negative, "
                              f"got {self.patience}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be at least 1, "
                              f"got {self.batch_size}")
        if self.max_length < 8:
            raise ConfigError(f"max_length must be at least 8, "
                              f"got {self.max_length}")

    @property
    def label(self) -> str:
        return self.name or Path(str(self.model)).name or str(self.model)


def load_train_config(path: str | Path) -> TrainConfig:
    """Read a TrainConfig from a JSON file with exactly the dataclass keys."""
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    known = {f.name for f in dataclasses.fields(TrainConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    if "model" not in doc:
        raise ConfigError(f"{path}: missing required key 'model'")
    return TrainConfig(**doc)


@dataclass(frozen=True)
class EpochLog:
    """Losses and dev-set quality after one epoch."""

    epoch: int
    train_loss: float
    dev_loss: float
    accuracy: float
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class TrainResult:
    checkpoint_dir: str
    log: tuple[EpochLog, ...]
    best_epoch: int
    config: TrainConfig

    @property
    def best(self) -> EpochLog:
        return self.log[self.best_epoch - 1]


class EarlyStopper:
    """Stop when dev loss has not improved for more than ``patience`` epochs."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = float("inf")
        self.bad_epochs = 0

    def update(self, dev_loss: float) -> str:
        """Returns "improved", "continue", or "stop"."""
        if dev_loss < self.best:
            self.best = dev_loss
            self.bad_epochs = 0
            return "improved"
        self.bad_epochs += 1
        return "stop" if self.bad_epochs > self.patience else "continue"


def classification_metrics(predicted: Sequence[str], gold: Sequence[str],
                           labels: Sequence[str]) -> tuple[float, float, float, float]:
    """Accuracy plus precision/recall/F1 under the scorer's conventions.

    Two-category tasks report the positive (first) category's binary
    scores; larger tasks report macro averages over the full category
    list, with absent categories contributing zero.
    """
    if not gold:
        raise ConfigError("cannot compute metrics on an empty dev set")
    accuracy = sum(p == g for p, g in zip(predicted, gold)) / len(gold)
    scored = labels[:1] if len(labels) == 2 else labels

    precisions, recalls, f1s = [], [], []
    for c in scored:
        tp = sum(1 for p, g in zip(predicted, gold) if p == c and g == c)
        n_pred = sum(1 for p in predicted if p == c)
        n_gold = sum(1 for g in gold if g == c)
        p = tp / n_pred if n_pred else 0.0
        r = tp / n_gold if n_gold else 0.0
        precisions.append(p)
        recalls.append(r)
        f1s.append(2 * p * r / (p + r) if tp else 0.0)
    k = len(scored)
    return accuracy, sum(precisions) / k, sum(recalls) / k, sum(f1s) / k


def _linear_schedule(optimizer, total_steps: int):
    warmup = max(1, int(total_steps * WARMUP_FRACTION))

    def factor(step: int) -> float:
        if step < warmup:
            return (step + 1) / warmup
        remaining = total_steps - step
        return max(0.0, remaining / max(1, total_steps - warmup))

    return torch.optim.lr_scheduler.LambdaLR(optimizer, factor)


def _encode(tokenizer, texts: Sequence[str], max_length: int):
    return tokenizer(list(texts), padding=True, truncation=True,
                     max_length=max_length, return_tensors="pt")


def _batch_loss(model, batch, targets) -> torch.Tensor:
    # CrossEntropyLoss takes class indices (hard mode) and probability
    # vectors (soft mode) alike.
    logits = model(**batch).logits
    return torch.nn.CrossEntropyLoss(reduction="sum")(logits, targets)


def _evaluate(model, target_enc, dev_targets, hard_enc, dev_gold_labels,
              labels: Sequence[str], batch_size: int):
    """Dev loss over the usable targets plus hard metrics where gold exists."""
    model.eval()
    n = dev_targets.shape[0]
    loss_total = 0.0
    with torch.no_grad():
        for lo in range(0, n, batch_size):
            hi = min(lo + batch_size, n)
            batch = {k: v[lo:hi] for k, v in target_enc.items()}
            loss_total += float(_batch_loss(model, batch,
                                            dev_targets[lo:hi]).detach())
        predicted = []
        n_hard = hard_enc["input_ids"].shape[0]
        for lo in range(0, n_hard, batch_size):
            batch = {k: v[lo:lo + batch_size] for k, v in hard_enc.items()}
            logits = model(**batch).logits
            predicted.extend(labels[int(i)] for i in logits.argmax(dim=-1))
    model.train()
    metrics = classification_metrics(predicted, dev_gold_labels, labels)
    return loss_total / n, metrics


def train(config: TrainConfig, train_path: str | Path, dev_path: str | Path,
          out_dir: str | Path) -> TrainResult:
    """Fine-tune per the config and save the best-dev-loss checkpoint.

    The training log (one entry per completed epoch) is also written to
    ``<out_dir>/training_log.json``.
    """
    labels = labels_for_task(config.task)
    hard_mode = config.target == "hard-majority"

    train_examples = read_corpus(train_path, config.task)
    dev_examples = read_corpus(dev_path, config.task)
    train_texts, train_targets = training_pairs(train_examples, config.target,
                                                labels, "train")
    dev_texts, dev_targets = training_pairs(dev_examples, config.target,
                                            labels, "dev")
    dev_hard = [(ex.text, ex.hard) for ex in dev_examples if ex.hard is not None]
    if not dev_hard:
        raise ConfigError("dev corpus has no majority-labeled instances to "
                          "measure quality on")

    random.seed(config.seed)
    np.random.seed(config.seed % 2**32)
    torch.manual_seed(config.seed)

    model, tokenizer = load_checkpoint(config.model, num_labels=len(labels))
    model.train()

    train_enc = _encode(tokenizer, train_texts, config.max_length)
    dev_target_enc = _encode(tokenizer, dev_texts, config.max_length)
    dev_hard_enc = _encode(tokenizer, [t for t, _ in dev_hard], config.max_length)
    if hard_mode:
        train_t = torch.tensor(train_targets, dtype=torch.long)
        dev_t = torch.tensor(dev_targets, dtype=torch.long)
    else:
        train_t = torch.tensor(train_targets, dtype=torch.float32)
        dev_t = torch.tensor(dev_targets, dtype=torch.float32)
    dev_gold_labels = [h for _, h in dev_hard]

    n_train = len(train_texts)
    batches_per_epoch = (n_train + config.batch_size - 1) // config.batch_size
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate,
                                  weight_decay=config.weight_decay)
    scheduler = _linear_schedule(optimizer, config.epochs * batches_per_epoch)

    order_rng = random.Random(config.seed)
    stopper = EarlyStopper(config.patience)
    log: list[EpochLog] = []
    best_epoch = 0
    best_state = None

    for epoch in range(1, config.epochs + 1):
        order = list(range(n_train))
        order_rng.shuffle(order)
        epoch_loss = 0.0
        for lo in range(0, n_train, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            batch = {k: v[idx] for k, v in train_enc.items()}
            loss = _batch_loss(model, batch, train_t[idx])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            scheduler.step()
            epoch_loss += float(loss.detach())

        dev_loss, (acc, prec, rec, f1) = _evaluate(
            model, dev_target_enc, dev_t, dev_hard_enc, dev_gold_labels,
            labels, config.batch_size,
        )
        log.append(EpochLog(epoch=epoch, train_loss=epoch_loss / n_train,
                            dev_loss=dev_loss, accuracy=acc, precision=prec,
                            recall=rec, f1=f1))

        verdict = stopper.update(dev_loss)
        if verdict == "improved":
            best_epoch = epoch
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
        elif verdict == "stop":
            break

    assert best_state is not None  # the first epoch always improves on +inf
    model.load_state_dict(best_state)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)

    result = TrainResult(checkpoint_dir=str(out), log=tuple(log),
                         best_epoch=best_epoch, config=config)
    (out / "training_log.json").write_text(json.dumps({
        "config": dataclasses.asdict(config),
        "best_epoch": best_epoch,
        "epochs": [dataclasses.asdict(entry) for entry in log],
    }, indent=2) + "\n", "utf-8")
    return result


@dataclass(frozen=True)
class GridRow:
    """One configuration's best-epoch dev quality."""

    label: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    result: TrainResult = field(repr=False)


def grid_search(configs: Sequence[TrainConfig], train_path: str | Path,
                dev_path: str | Path, work_dir: str | Path) -> list[GridRow]:
    """Train every config and rank them by best dev F1 (ties keep input order)."""
    if not configs:
        raise ConfigError("grid search needs at least one configuration")
    rows = []
    for i, config in enumerate(configs):
        result = train(config, train_path, dev_path,
                       Path(work_dir) / f"config-{i:02d}")
        best = result.best
        rows.append(GridRow(label=config.label, accuracy=best.accuracy,
                            precision=best.precision, recall=best.recall,
                            f1=best.f1, result=result))
    return sorted(rows, key=lambda r: -r.f1)


def render_grid(rows: Sequence[GridRow]) -> str:
    """Fixed-width comparison table, best configuration first."""
    header = ("Model",) + GRID_COLUMNS
    body = [(r.label, f"{r.accuracy:.4f}", f"{r.precision:.4f}",
             f"{r.recall:.4f}", f"{r.f1:.4f}") for r in rows]
    widths = [max(len(row[i]) for row in [header, *body])
              for i in range(len(header))]
    lines = []
    for row in [header, *body]:
        cells = [row[0].ljust(widths[0])]
        cells += [row[i].rjust(widths[i]) for i in range(1, len(header))]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"
