"""Cross-validation and confusion-matrix scoring."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .. import rng as streams
from ..dataset import Dataset
from ..errors import ConfigError

HEALTHY = "healthy"


def stratified_folds(labels: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Fold id per row; each class is shuffled then dealt round-robin."""
    if folds < 2:
        raise ConfigError("need at least 2 folds")
    g = streams.substream(seed, streams.FOLDS)
    fold_of = np.empty(labels.size, dtype=int)
    _, first = np.unique(labels, return_index=True)
    for label in labels[np.sort(first)]:
        idx = np.flatnonzero(labels == label)
        if idx.size < folds:
            raise ConfigError(f"class {label!r} has {idx.size} samples, fewer than {folds} folds")
        fold_of[g.permutation(idx)] = np.arange(idx.size) % folds
    return fold_of


def accuracy(model, data: Dataset) -> float:
    return float(np.mean(model.predict(data.features) == data.labels))


def cross_validate(data: Dataset, folds: int = 5, classifier: str = "qda", seed: int = 0,
                   return_folds: bool = False):
    """Mean held-out accuracy over stratified folds.

    Normalization is refit on each training portion by the classifier itself.
    """
    from . import fit

    fold_of = stratified_folds(data.labels, folds, seed)
    scores = []
    for f in range(folds):
        model = fit(classifier, data.subset(fold_of != f))
        scores.append(accuracy(model, data.subset(fold_of == f)))
    mean = float(np.mean(scores))
    return (mean, scores) if return_folds else mean


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple[str, ...]
    counts: np.ndarray  # rows true, columns predicted

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["true\\predicted", *self.labels])
        for label, row in zip(self.labels, self.counts):
            w.writerow([label, *[int(v) for v in row]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ConfusionMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        labels = tuple(rows[0][1:])
        counts = np.array([[int(v) for v in r[1:]] for r in rows[1:]], dtype=int)
        return cls(labels, counts)


@dataclass(frozen=True)
class ConfusionReport:
    matrix: ConfusionMatrix
    accuracy: float
    recall: dict
    false_positive_rate: float | None  # healthy rows flagged as damaged
    false_negative_rate: dict  # damage class -> fraction predicted healthy


def confusion(model, validation: Dataset) -> ConfusionReport:
    if len(validation) == 0:
        raise ConfigError("validation set is empty")
    labels = tuple(model.classes)
    index = {c: i for i, c in enumerate(labels)}
    missing = sorted(set(validation.labels) - set(labels))
    if missing:
        raise ConfigError(f"label absent from model: {missing}")
    pred = model.predict(validation.features)
    counts = np.zeros((len(labels), len(labels)), dtype=int)
    np.add.at(counts, ([index[t] for t in validation.labels], [index[p] for p in pred]), 1)
    totals = counts.sum(axis=1)
    recall = {c: (counts[i, i] / totals[i] if totals[i] else float("nan"))
              for i, c in enumerate(labels)}
    fpr = None
    fnr = {}
    if HEALTHY in index:
        h = index[HEALTHY]
        if totals[h]:
            fpr = 1.0 - recall[HEALTHY]
        fnr = {c: counts[i, h] / totals[i] for i, c in enumerate(labels)
               if c != HEALTHY and totals[i]}
    return ConfusionReport(
        matrix=ConfusionMatrix(labels, counts),
        accuracy=float(np.trace(counts) / counts.sum()),
        recall=recall,
        false_positive_rate=fpr,
        false_negative_rate=fnr,
    )
