"""Holdout evaluation: train on the first part of the log, test on the rest."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ..ast import AnalyticRule
from ..encoding import Composite, FittedEncoder, fit
from ..event_log import EventLog
from ..labeling import LabeledDataset, build_dataset, training_prefixes
from .metrics import Metrics, compute_metrics
from .models import TrainedModel, train

DEFAULT_SPLIT = Fraction(2, 3)


class EmptySplit(ValueError):
    pass


def split_point(n_traces: int, split=DEFAULT_SPLIT) -> int:
    """Number of training traces: ``ceil(split * n)`` computed exactly."""
    frac = Fraction(split).limit_denominator(10**6) if not isinstance(split, Fraction) else split
    if not 0 < frac < 1:
        raise ValueError(f"split must lie strictly between 0 and 1, got {split}")
    return math.ceil(frac * n_traces)


def split_log(log: EventLog, split=DEFAULT_SPLIT) -> tuple[EventLog, EventLog]:
    cut = split_point(len(log), split)
    return EventLog(log.traces[:cut]), EventLog(log.traces[cut:])


@dataclass
class PreparedHoldout:
    encoder: FittedEncoder
    train: LabeledDataset
    test: LabeledDataset


@dataclass
class HoldoutResult:
    metrics: Metrics
    model: TrainedModel
    encoder: FittedEncoder
    predictions: list


def _as_config(encoders):
    if isinstance(encoders, (list, tuple)):
        return encoders[0] if len(encoders) == 1 else Composite(tuple(encoders))
    return encoders


def prepare_holdout(rule: AnalyticRule, log: EventLog, encoders, split=DEFAULT_SPLIT,
                    include_k1=False, include_klast=False) -> PreparedHoldout:
    """Split, fit encoders on training prefixes, and label both sides."""
    train_log, test_log = split_log(log, split)
    prefixes = training_prefixes(train_log, include_k1, include_klast)
    if not prefixes:
        raise EmptySplit("training split has no prefixes in the labelling range")
    max_len = max(len(t) for t in train_log)
    encoder = fit(_as_config(encoders), prefixes, default_n=max_len)
    train_ds = build_dataset(rule, train_log, encoder, include_k1, include_klast)
    test_ds = build_dataset(rule, test_log, encoder, include_k1, include_klast)
    if len(train_ds) == 0:
        raise EmptySplit(f"training split yields no rows ({train_ds.skip_report()})")
    if len(test_ds) == 0:
        raise EmptySplit(f"test split yields no rows ({test_ds.skip_report()})")
    return PreparedHoldout(encoder, train_ds, test_ds)


def score(prepared: PreparedHoldout, spec) -> HoldoutResult:
    model = train(prepared.train, spec)
    X = prepared.test.rows
    preds = model.predict(X)
    if prepared.test.task.value == "classification":
        proba = model.predict_proba(X)
        metrics = compute_metrics(preds, prepared.test.targets, prepared.test.task,
                                  scores=proba, classes=model.classes)
    else:
        metrics = compute_metrics(preds, prepared.test.targets, prepared.test.task)
    return HoldoutResult(metrics, model, prepared.encoder, preds)


def evaluate_holdout(rule: AnalyticRule, log: EventLog, encoders, spec, split=DEFAULT_SPLIT,
                     include_k1=False, include_klast=False) -> Metrics:
    prepared = prepare_holdout(rule, log, encoders, split, include_k1, include_klast)
    return score(prepared, spec).metrics
