"""Labelled datasets from a rule, a log and fitted encoders.

For every trace and every prefix length ``k`` with ``1 < k < |trace|`` one
row is produced: the encoded prefix and the rule's value on ``(trace, k)``.
"""
from __future__ import annotations

import csv
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .ast import AnalyticRule, Kind
from .encoding import FittedComposite, FittedEncoder
from .evaluator import apply_rule
from .event_log import UNDEFINED, EventLog


class Task(Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"


class EmptyDataset(ValueError):
    pass


class EncoderSchemaMismatch(ValueError):
    pass


@dataclass
class LabeledDataset:
    feature_names: list
    rows: np.ndarray
    targets: list
    task: Task
    provenance: list
    skipped: Counter = field(default_factory=Counter)

    def __len__(self):
        return len(self.targets)

    def skip_report(self) -> str:
        if not self.skipped:
            return "no prefixes skipped"
        return "; ".join(f"{count} skipped ({reason})" for reason, count in sorted(self.skipped.items()))


def task_for(rule: AnalyticRule) -> Task:
    return Task.REGRESSION if rule.kind is Kind.NUMERIC else Task.CLASSIFICATION


def k_range(length: int, include_k1: bool = False, include_klast: bool = False) -> range:
    lo = 1 if include_k1 else 2
    hi = length if include_klast else length - 1
    return range(lo, hi + 1)


def training_prefixes(log, include_k1=False, include_klast=False) -> list:
    """Prefixes (event tuples) in the labelling range, in log order."""
    traces = log.traces if isinstance(log, EventLog) else log
    return [tr.events[:k] for tr in traces for k in k_range(len(tr), include_k1, include_klast)]


def worker_count() -> int:
    raw = os.environ.get("FOE_PREDICT_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def _as_encoder(encoders) -> FittedEncoder:
    if isinstance(encoders, FittedEncoder):
        return encoders
    encoders = list(encoders)
    if not encoders:
        raise ValueError("at least one encoder is required")
    if len(encoders) == 1:
        return encoders[0]
    return FittedComposite(encoders)


def _label_trace(rule, trace, encoder, ks):
    rows, targets, prov, skipped = [], [], [], 0
    for k in ks:
        value = apply_rule(rule, trace, k)
        if value is UNDEFINED:
            skipped += 1
            continue
        vec = encoder.encode(trace.events[:k])
        if vec.shape != (encoder.width,):
            raise EncoderSchemaMismatch(
                f"encoder produced {vec.shape} for trace {trace.id} k={k}, expected ({encoder.width},)")
        rows.append(vec)
        targets.append(value)
        prov.append((trace.id, k))
    return rows, targets, prov, skipped


def build_dataset(rule: AnalyticRule, log, encoders, include_k1: bool = False,
                  include_klast: bool = False, workers: int | None = None) -> LabeledDataset:
    """Label every prefix in range; prefixes whose target is undefined are skipped."""
    encoder = _as_encoder(encoders)
    traces = log.traces if isinstance(log, EventLog) else tuple(log)
    workers = workers or worker_count()
    jobs = [(tr, k_range(len(tr), include_k1, include_klast)) for tr in traces]

    def run(job):
        return _label_trace(rule, job[0], encoder, job[1])

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    rows, targets, prov = [], [], []
    skipped = Counter()
    for r, t, p, s in results:
        rows.extend(r)
        targets.extend(t)
        prov.extend(p)
        if s:
            skipped["undefined target"] += s
    matrix = np.vstack(rows) if rows else np.zeros((0, encoder.width))
    return LabeledDataset(list(encoder.feature_names), matrix, targets, task_for(rule), prov, skipped)


def require_rows(dataset: LabeledDataset, what: str = "dataset"):
    if len(dataset) == 0:
        raise EmptyDataset(f"{what} has no rows ({dataset.skip_report()})")
    return dataset


def _cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    return value


def export_csv(dataset: LabeledDataset, path) -> None:
    """Header of feature names plus ``target``; strings quoted, numbers bare."""
    if not dataset.feature_names:
        raise ValueError("dataset has no features")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
        writer.writerow(list(dataset.feature_names) + ["target"])
        for row, target in zip(dataset.rows, dataset.targets):
            writer.writerow([float(x) for x in row] + [_cell(target)])


def read_csv(path) -> tuple[list, np.ndarray, list]:
    """Inverse of :func:`export_csv`: ``(feature_names, rows, targets)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, quoting=csv.QUOTE_NONNUMERIC)
        header = next(reader)
        body = list(reader)
    names = [str(h) for h in header[:-1]]
    rows = np.array([r[:-1] for r in body], dtype=float).reshape(len(body), len(names))
    return names, rows, [r[-1] for r in body]
