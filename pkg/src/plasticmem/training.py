"""Adam optimization loop, splitting, evaluation, and sweeps.

Gradient updates are per-sample by default: Hebbian traces make
within-batch parallel semantics ambiguous, so larger batch sizes are
implemented as gradient accumulation over sequentially processed samples.
Trace gradients detach at sequence boundaries; within a sequence they are
exact.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import autograd as ag
from .autograd import ParameterTape
from .data import LabeledSequence, majority_vote
from .errors import InvalidArgumentError, InvalidStateError
from .model import Classifier, ModelConfig, cross_entropy


@dataclass
class TrainConfig:
    epochs: int = 50
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 1
    val_fraction: float = 0.2
    seed: int = 0
    shuffle: bool = True

    def validate(self) -> None:
        if self.epochs < 0:
            raise InvalidArgumentError("epochs must be >= 0")
        if not (0.0 < self.val_fraction < 1.0):
            raise InvalidArgumentError("val_fraction must be in (0, 1)")
        if self.batch_size < 1:
            raise InvalidArgumentError("batch_size must be >= 1")


class AdamState:
    """Per-parameter first/second moment estimates plus the step count."""

    def __init__(self, tape: ParameterTape):
        self.m = {name: np.zeros_like(p.data) for name, p in tape.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in tape.items()}
        self.step = 0


def adam_step(
    tape: ParameterTape,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Standard Adam update with bias correction, in place on the tape."""
    if not tape.has_gradients:
        raise InvalidStateError("adam_step called before any backward pass")
    state.step += 1
    t = state.step
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for name, p in tape.items():
        g = p.grad
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    tape.step = state.step


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainResult:
    model: Classifier
    history: list[EpochMetrics]
    best_epoch: int
    best_val_acc: float
    best_checkpoint: dict


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray  # (true, predicted)
    per_class_counts: np.ndarray
    n: int


def _record_ids(dataset: list[LabeledSequence]) -> list[str]:
    seen = []
    seen_set = set()
    for seq in dataset:
        if seq.record_id not in seen_set:
            seen.append(seq.record_id)
            seen_set.add(seq.record_id)
    return seen


def split_train_val(
    dataset: list[LabeledSequence], val_fraction: float, seed: int
) -> tuple[list[LabeledSequence], list[LabeledSequence]]:
    """Record-level train/validation split; windows never straddle the split."""
    records = _record_ids(dataset)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(records))
    n_val = max(1, int(round(len(records) * val_fraction)))
    if n_val >= len(records):
        n_val = len(records) - 1
    val_records = {records[i] for i in order[:n_val]}
    train = [s for s in dataset if s.record_id not in val_records]
    val = [s for s in dataset if s.record_id in val_records]
    return train, val


def train(
    model: Classifier,
    dataset: list[LabeledSequence],
    config: TrainConfig,
    diagnostic_dir: str | None = None,
) -> TrainResult:
    """Train the classifier; returns per-epoch metrics and the best epoch.

    The model is left at the best-validation-accuracy parameters (ties go
    to the earlier epoch).  A NaN loss aborts training after writing a
    diagnostic checkpoint to ``diagnostic_dir`` when given.
    """
    config.validate()
    if not dataset:
        raise InvalidArgumentError("train: empty dataset")
    num_classes = model.config.num_classes
    for seq in dataset:
        if not (0 <= seq.label < num_classes):
            raise InvalidArgumentError(
                f"label {seq.label} out of range for {num_classes} classes"
            )

    train_set, val_set = split_train_val(dataset, config.val_fraction, config.seed)
    rng = np.random.default_rng(config.seed)
    adam = AdamState(model.tape)
    history: list[EpochMetrics] = []
    best_epoch = -1
    best_val_acc = -1.0
    best_checkpoint = model.checkpoint()

    for epoch in range(config.epochs):
        order = rng.permutation(len(train_set)) if config.shuffle else np.arange(len(train_set))
        losses = []
        correct = 0
        batch_loss = None
        batch_count = 0
        for idx in order:
            seq = train_set[idx]
            probs, _ = model.forward(seq.steps)
            loss = cross_entropy(probs, seq.label)
            loss_val = float(loss.data)
            if not np.isfinite(loss_val):
                if diagnostic_dir is not None:
                    Path(diagnostic_dir).mkdir(parents=True, exist_ok=True)
                    model.save(Path(diagnostic_dir) / "nan-abort.ckpt.json")
                raise InvalidStateError(
                    f"non-finite loss at epoch {epoch}, sample {idx}"
                )
            losses.append(loss_val)
            if int(np.argmax(probs.data)) == seq.label:
                correct += 1
            batch_loss = loss if batch_loss is None else ag.add(batch_loss, loss)
            batch_count += 1
            if batch_count == config.batch_size:
                model.tape.backward(ag.scale(batch_loss, 1.0 / batch_count))
                adam_step(model.tape, adam, config.learning_rate,
                          config.beta1, config.beta2, config.adam_eps)
                batch_loss = None
                batch_count = 0
        if batch_loss is not None:
            model.tape.backward(ag.scale(batch_loss, 1.0 / batch_count))
            adam_step(model.tape, adam, config.learning_rate,
                      config.beta1, config.beta2, config.adam_eps)

        val_metrics = evaluate(model, val_set) if val_set else None
        val_loss = _mean_loss(model, val_set) if val_set else float("nan")
        val_acc = val_metrics.accuracy if val_metrics else float("nan")
        history.append(
            EpochMetrics(
                epoch=epoch,
                train_loss=float(np.mean(losses)) if losses else float("nan"),
                train_acc=correct / len(train_set) if train_set else float("nan"),
                val_loss=val_loss,
                val_acc=val_acc,
            )
        )
        if val_metrics and val_metrics.accuracy > best_val_acc:
            best_val_acc = val_metrics.accuracy
            best_epoch = epoch
            best_checkpoint = model.checkpoint()

    if best_epoch >= 0:
        model.load_checkpoint(best_checkpoint)
    return TrainResult(model, history, best_epoch, best_val_acc, best_checkpoint)


def _mean_loss(model: Classifier, dataset: list[LabeledSequence]) -> float:
    total = 0.0
    for seq in dataset:
        probs, _ = model.forward(seq.steps)
        total += float(cross_entropy(probs, seq.label).data)
    return total / len(dataset)


def evaluate(
    model: Classifier, dataset: list[LabeledSequence], vote: bool = False
) -> EvalResult:
    """Accuracy, per-class counts, and confusion matrix over a dataset.

    With ``vote`` set, windows sharing a record_id aggregate by majority
    vote and scoring happens at the record level.
    """
    if not dataset:
        raise InvalidArgumentError("evaluate: empty dataset")
    num_classes = model.config.num_classes
    preds = []
    probs_list = []
    for seq in dataset:
        probs, _ = model.forward(seq.steps)
        preds.append(int(np.argmax(probs.data)))
        probs_list.append(probs.data.copy())

    confusion = np.zeros((num_classes, num_classes), dtype=int)
    if vote:
        groups: dict[str, list[int]] = {}
        for i, seq in enumerate(dataset):
            if not seq.record_id:
                raise InvalidArgumentError("evaluate: vote requires record ids")
            groups.setdefault(seq.record_id, []).append(i)
        for record_id, idxs in groups.items():
            labels = {dataset[i].label for i in idxs}
            if len(labels) != 1:
                raise InvalidArgumentError(
                    f"record {record_id!r} has inconsistent labels {sorted(labels)}"
                )
            true = dataset[idxs[0]].label
            pred = majority_vote([preds[i] for i in idxs], [probs_list[i] for i in idxs])
            confusion[true, pred] += 1
    else:
        for seq, pred in zip(dataset, preds):
            confusion[seq.label, pred] += 1

    n = int(confusion.sum())
    accuracy = float(np.trace(confusion)) / n
    return EvalResult(accuracy, confusion, confusion.sum(axis=1), n)


def kfold_split(
    dataset: list[LabeledSequence], folds: int, seed: int
) -> list[tuple[list[int], list[int]]]:
    """Record-level k-fold partitions as (train_indices, test_indices)."""
    if folds < 2:
        raise InvalidArgumentError("folds must be >= 2")
    records = _record_ids(dataset)
    if folds > len(records):
        raise InvalidArgumentError(
            f"folds ({folds}) exceeds number of records ({len(records)})"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(records))
    fold_of_record: dict[str, int] = {}
    for pos, rec_idx in enumerate(order):
        fold_of_record[records[rec_idx]] = pos % folds
    partitions = []
    for f in range(folds):
        test = [i for i, s in enumerate(dataset) if fold_of_record[s.record_id] == f]
        trainidx = [i for i, s in enumerate(dataset) if fold_of_record[s.record_id] != f]
        partitions.append((trainidx, test))
    return partitions


@dataclass
class SweepRow:
    param_name: str
    param_value: float
    val_acc: float


SWEEP_PARAMS = {"k": "embed_dim", "l": "memory_len", "eta": "eta"}


def hyper_sweep(
    grid: dict[str, list[float]],
    dataset: list[LabeledSequence],
    model_config: ModelConfig,
    train_config: TrainConfig,
) -> list[SweepRow]:
    """One-at-a-time sweep over {k, l, eta}, others held at configured values."""
    if not grid or all(not v for v in grid.values()):
        raise InvalidArgumentError("hyper_sweep: empty grid")
    rows = []
    for param_name, values in grid.items():
        if param_name not in SWEEP_PARAMS:
            warnings.warn(f"skipping unknown sweep parameter {param_name!r}", stacklevel=2)
            continue
        attr = SWEEP_PARAMS[param_name]
        for value in values:
            cast = float(value) if param_name == "eta" else int(value)
            cfg = replace(model_config, **{attr: cast})
            try:
                cfg.validate()
            except InvalidArgumentError as exc:
                warnings.warn(f"skipping {param_name}={value}: {exc}", stacklevel=2)
                continue
            model = Classifier(cfg)
            result = train(model, dataset, train_config)
            rows.append(SweepRow(param_name, float(value), result.best_val_acc))
    return rows


def write_metrics_csv(path, history: list[EpochMetrics], train_config: TrainConfig) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# learning_rate={train_config.learning_rate!r} "
                 f"beta1={train_config.beta1!r} beta2={train_config.beta2!r} "
                 f"adam_eps={train_config.adam_eps!r} seed={train_config.seed}\n")
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
        for row in history:
            writer.writerow(
                [row.epoch, repr(row.train_loss), repr(row.train_acc),
                 repr(row.val_loss), repr(row.val_acc)]
            )


def write_sweep_csv(path, rows: list[SweepRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["param_name", "param_value", "val_acc"])
        for row in rows:
            writer.writerow([row.param_name, repr(row.param_value), repr(row.val_acc)])
