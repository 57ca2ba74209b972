"""Holdout scores: accuracy, AUC, weighted precision/recall, F-measure, MAE, RMSE."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from ..event_log import value_key
from ..labeling import Task


@dataclass
class Metrics:
    task: Task
    n_test: int
    accuracy: float | None = None
    auc: float | None = None
    weighted_precision: float | None = None
    weighted_recall: float | None = None
    f_measure: float | None = None
    mae: float | None = None
    rmse: float | None = None
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["task"] = self.task.value
        return {k: v for k, v in d.items() if v is not None}


def binary_auc(labels, scores) -> float | None:
    """Rank-sum AUC with average ranks for ties; ``None`` if one class is absent."""
    labels = np.asarray(labels, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores, method="average")
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def regression_metrics(predictions, truths) -> Metrics:
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(truths, dtype=float)
    if len(p) != len(t) or len(t) == 0:
        raise ValueError("predictions and truths must be non-empty and of equal length")
    err = t - p
    mae = float(np.mean(np.abs(err)))
    rmse = float(math.sqrt(np.mean(err * err)))
    return Metrics(Task.REGRESSION, len(t), mae=mae, rmse=rmse)


def classification_metrics(predictions, truths, scores=None, classes=None) -> Metrics:
    """``scores`` is either a 1-D positive-class score (binary, positive =
    last of ``classes``) or an (n, len(classes)) probability matrix.  Without
    scores the hard predictions are used as 0/1 scores."""
    if len(predictions) != len(truths) or len(truths) == 0:
        raise ValueError("predictions and truths must be non-empty and of equal length")
    n = len(truths)
    flags = []
    tkeys = [value_key(t) for t in truths]
    pkeys = [value_key(p) for p in predictions]
    accuracy = sum(a == b for a, b in zip(tkeys, pkeys)) / n

    support: dict = {}
    for key in tkeys:
        support[key] = support.get(key, 0) + 1
    predicted: dict = {}
    for key in pkeys:
        predicted[key] = predicted.get(key, 0) + 1

    precision = 0.0
    recall = 0.0
    for key, count in support.items():
        tp = sum(1 for a, b in zip(tkeys, pkeys) if a == key and b == key)
        if predicted.get(key, 0) == 0:
            flags.append(f"precision undefined for never-predicted class {key[1]!r}; counted as 0")
            prec = 0.0
        else:
            prec = tp / predicted[key]
        precision += count / n * prec
        recall += count / n * (tp / count)
    f = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)

    column = _score_columns(predictions, scores, classes)
    if len(support) < 2:
        flags.append("AUC undefined for single-class truths; reported as 0.5")
        auc = 0.5
    else:
        # sum count * auc before dividing so a constant scorer gives exactly 0.5
        total = 0.0
        for key, count in support.items():
            is_pos = np.array([k == key for k in tkeys])
            total += count * binary_auc(is_pos, column(key))
        auc = total / n
    return Metrics(Task.CLASSIFICATION, n, accuracy=accuracy, auc=auc,
                   weighted_precision=precision, weighted_recall=recall, f_measure=f, flags=flags)


def _score_columns(predictions, scores, classes):
    n = len(predictions)
    if scores is None:
        pkeys = [value_key(p) for p in predictions]
        return lambda key: np.array([1.0 if k == key else 0.0 for k in pkeys])
    scores = np.asarray(scores, dtype=float)
    ckeys = [value_key(c) for c in classes]
    if scores.ndim == 1:
        if len(ckeys) == 1:
            return lambda key: np.full(n, 1.0 if key == ckeys[0] else 0.0)
        if len(ckeys) != 2:
            raise ValueError("1-D scores need exactly two classes")

        def col(key):
            if key == ckeys[1]:
                return scores
            if key == ckeys[0]:
                return 1.0 - scores
            return np.zeros(n)
        return col
    index = {k: j for j, k in enumerate(ckeys)}
    return lambda key: scores[:, index[key]] if key in index else np.zeros(n)


def compute_metrics(predictions, truths, task: Task, scores=None, classes=None) -> Metrics:
    if task is Task.REGRESSION:
        return regression_metrics(predictions, truths)
    return classification_metrics(predictions, truths, scores, classes)
