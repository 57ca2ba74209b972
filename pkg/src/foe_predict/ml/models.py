"""Built-in learners: ZeroR, CART, ridge linear regression, logistic regression.

Classification models keep the sorted training label vocabulary
(``classes``); for two classes the positive class is ``classes[-1]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..event_log import Timestamp, value_key
from ..labeling import LabeledDataset, Task


class TaskMismatch(ValueError):
    pass


class SchemaMismatch(ValueError):
    pass


class VersionMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# specs

@dataclass(frozen=True)
class ZeroRSpec:
    pass


@dataclass(frozen=True)
class TreeSpec:
    max_depth: int = 10
    min_samples_leaf: int = 1
    seed: int = 0  # splits are deterministic; kept for a uniform interface

    def __post_init__(self):
        if self.max_depth < 0 or self.min_samples_leaf < 1:
            raise ValueError("max_depth must be >= 0 and min_samples_leaf >= 1")


@dataclass(frozen=True)
class LinearSpec:
    ridge: float = 1e-6

    def __post_init__(self):
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")


@dataclass(frozen=True)
class LogisticSpec:
    learning_rate: float = 0.5
    iterations: int = 500
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.iterations < 1 or self.l2 < 0:
            raise ValueError("learning_rate and iterations must be positive, l2 non-negative")


def spec_from_name(name: str, seed: int = 0, **params):
    if name == "zeror":
        return ZeroRSpec()
    if name == "tree":
        return TreeSpec(seed=seed, **params)
    if name == "linear":
        return LinearSpec(**params)
    if name == "logistic":
        return LogisticSpec(seed=seed, **params)
    raise ValueError(f"unknown model {name!r}")


# ---------------------------------------------------------------------------
# base

def _sorted_classes(targets):
    seen = {}
    for t in targets:
        seen.setdefault(value_key(t), t)
    return [seen[k] for k in sorted(seen)]


class TrainedModel:
    kind = ""
    task: Task
    n_features: int
    classes: list

    def _check(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise SchemaMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict_values(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> list:
        X = self._check(X)
        if self.task is Task.REGRESSION:
            return [float(v) for v in self.predict_values(X)]
        proba = self.predict_proba(X)
        return [self.classes[j] for j in np.argmax(proba, axis=1)]

    def scores(self, X) -> np.ndarray:
        """Per-row score: P(positive class) for two classes, else P(predicted class)."""
        proba = self.predict_proba(self._check(X))
        if len(self.classes) == 2:
            return proba[:, 1]
        return proba.max(axis=1)

    def predict_one(self, vector):
        """``(value, score)``; the score is ``None`` for regression."""
        X = self._check(vector)
        if self.task is Task.REGRESSION:
            return float(self.predict_values(X)[0]), None
        return self.predict(X)[0], float(self.scores(X)[0])

    # serialization hooks
    def params(self) -> dict:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# ZeroR

@dataclass
class ZeroRModel(TrainedModel):
    task: Task
    n_features: int
    classes: list = field(default_factory=list)
    priors: list = field(default_factory=list)
    mean: float = 0.0
    kind = "zeror"

    def predict_proba(self, X):
        X = self._check(X)
        return np.tile(np.asarray(self.priors, dtype=float), (X.shape[0], 1))

    def predict(self, X):
        X = self._check(X)
        if self.task is Task.REGRESSION:
            return [self.mean] * X.shape[0]
        # modal label; ties go to the smallest label
        return [self.classes[int(np.argmax(self.priors))]] * X.shape[0]

    def predict_values(self, X):
        return np.full(self._check(X).shape[0], self.mean)

    def params(self):
        return {"priors": list(self.priors), "mean": self.mean}


def _train_zeror(X, targets, task):
    if task is Task.REGRESSION:
        return ZeroRModel(task, X.shape[1], mean=float(np.mean(np.asarray(targets, dtype=float))))
    classes = _sorted_classes(targets)
    keys = [value_key(c) for c in classes]
    counts = np.zeros(len(classes))
    index = {k: j for j, k in enumerate(keys)}
    for t in targets:
        counts[index[value_key(t)]] += 1
    return ZeroRModel(task, X.shape[1], classes, list(counts / counts.sum()))


# ---------------------------------------------------------------------------
# CART

_TOL = 1e-12


def _best_split(X, y, n_classes, min_leaf):
    """Return ``(feature, threshold, child_impurity, parent_impurity)`` or None.

    Impurity is summed over samples: Gini times count for classification,
    sum of squared errors for regression.
    """
    m, d = X.shape
    if m < 2 * min_leaf:
        return None
    if n_classes:
        onehot = np.zeros((m, n_classes))
        onehot[np.arange(m), y] = 1.0
        total = onehot.sum(axis=0)
        parent = m - (total ** 2).sum() / m
    else:
        y = y - y.mean()  # SSE is shift-invariant; centring limits cancellation
        parent = float((y ** 2).sum())
    tol = _TOL * max(1.0, parent)
    if parent <= tol:
        return None
    n_left = np.arange(1, m)
    n_right = m - n_left
    valid_count = (n_left >= min_leaf) & (n_right >= min_leaf)
    best = None
    varying = np.flatnonzero(X.max(axis=0) > X.min(axis=0))
    for j in varying:
        j = int(j)
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        distinct = xs[1:] > xs[:-1]
        ok = distinct & valid_count
        if not ok.any():
            continue
        if n_classes:
            left = np.cumsum(onehot[order], axis=0)[:-1]
            right = total - left
            child = (m - (left ** 2).sum(axis=1) / n_left - (right ** 2).sum(axis=1) / n_right)
        else:
            ys = y[order]
            cs = np.cumsum(ys)[:-1]
            cs2 = np.cumsum(ys * ys)[:-1]
            tot, tot2 = ys.sum(), (ys * ys).sum()
            child = (cs2 - cs * cs / n_left) + ((tot2 - cs2) - (tot - cs) ** 2 / n_right)
        child = np.where(ok, child, np.inf)
        i = int(np.argmin(child))
        score = float(child[i])
        if best is None or score < best[2] - tol:
            lo, hi = xs[i], xs[i + 1]
            thr = lo + (hi - lo) / 2.0
            if not (lo <= thr < hi):
                thr = lo
            best = (j, float(thr), score, parent)
    # an impure node splits even at zero gain (the XOR case needs it)
    return best


@dataclass
class TreeModel(TrainedModel):
    task: Task
    n_features: int
    classes: list
    feature: list  # -1 marks a leaf
    threshold: list
    left: list
    right: list
    value: list  # class fractions (classification) or [mean] (regression)
    notes: list = field(default_factory=list)
    kind = "tree"

    def _leaves(self, X):
        feat = np.asarray(self.feature)
        thr = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        while True:
            f = feat[node]
            inner = f >= 0
            if not inner.any():
                return node
            idx = rows[inner]
            go_left = X[idx, f[inner]] <= thr[node[inner]]
            node[idx] = np.where(go_left, left[node[inner]], right[node[inner]])

    def predict_proba(self, X):
        X = self._check(X)
        values = np.asarray(self.value, dtype=float)
        return values[self._leaves(X)]

    def predict_values(self, X):
        X = self._check(X)
        values = np.asarray(self.value, dtype=float)
        return values[self._leaves(X), 0]

    def depth(self) -> int:
        def rec(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(rec(self.left[i]), rec(self.right[i]))
        return rec(0)

    def params(self):
        return {"feature": self.feature, "threshold": self.threshold, "left": self.left,
                "right": self.right, "value": self.value}


def _train_tree(X, targets, task, spec: TreeSpec):
    if task is Task.REGRESSION:
        classes = []
        y = np.asarray(targets, dtype=float)
        n_classes = 0
    else:
        classes = _sorted_classes(targets)
        index = {value_key(c): j for j, c in enumerate(classes)}
        y = np.array([index[value_key(t)] for t in targets], dtype=int)
        n_classes = len(classes)
    feature, threshold, left, right, value = [], [], [], [], []

    def leaf_value(rows):
        if n_classes:
            counts = np.bincount(y[rows], minlength=n_classes).astype(float)
            return list(counts / counts.sum())
        return [float(y[rows].mean())]

    def grow(rows, depth):
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(leaf_value(rows))
        if depth >= spec.max_depth:
            return node
        split = _best_split(X[rows], y[rows], n_classes, spec.min_samples_leaf)
        if split is None:
            return node
        j, thr = split[0], split[1]
        mask = X[rows, j] <= thr
        feature[node] = j
        threshold[node] = thr
        left[node] = grow(rows[mask], depth + 1)
        right[node] = grow(rows[~mask], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    notes = []
    if n_classes == 1:
        notes.append("single training class: tree is a constant predictor")
    return TreeModel(task, X.shape[1], classes, feature, threshold, left, right, value, notes)


# ---------------------------------------------------------------------------
# linear regression

@dataclass
class LinearModel(TrainedModel):
    task: Task
    n_features: int
    coef: list
    intercept: float
    classes: list = field(default_factory=list)
    kind = "linear"

    def predict_values(self, X):
        X = self._check(X)
        return X @ np.asarray(self.coef, dtype=float) + self.intercept

    def params(self):
        return {"coef": self.coef, "intercept": self.intercept}


def _train_linear(X, targets, spec: LinearSpec):
    y = np.asarray(targets, dtype=float)
    mu = X.mean(axis=0)
    ybar = y.mean()
    Xc = X - mu
    d = X.shape[1]
    if spec.ridge > 0:
        A = np.vstack([Xc, np.sqrt(spec.ridge) * np.eye(d)])
        b = np.concatenate([y - ybar, np.zeros(d)])
    else:
        A, b = Xc, y - ybar
    w = np.linalg.lstsq(A, b, rcond=None)[0]
    return LinearModel(Task.REGRESSION, d, [float(v) for v in w], float(ybar - mu @ w))


# ---------------------------------------------------------------------------
# logistic regression

def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_grad(w, b, X, y, l2):
    """Mean log-loss plus ``l2/2 * |w|^2`` and its gradient ``(loss, dw, db)``."""
    z = X @ w + b
    # log(1 + exp(-z)) for y=1 and log(1 + exp(z)) for y=0, computed stably
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * float(w @ w)
    r = (_sigmoid(z) - y) / X.shape[0]
    return float(loss), X.T @ r + l2 * w, float(r.sum())


def _fit_binary(X, y, spec: LogisticSpec, rng):
    w = rng.normal(0.0, 0.01, X.shape[1])
    b = 0.0
    for _ in range(spec.iterations):
        _, gw, gb = logistic_loss_grad(w, b, X, y, spec.l2)
        w = w - spec.learning_rate * gw
        b = b - spec.learning_rate * gb
    return w, b


@dataclass
class LogisticModel(TrainedModel):
    task: Task
    n_features: int
    classes: list
    mean: list
    scale: list
    weights: list  # one row per binary problem
    intercepts: list
    kind = "logistic"

    def predict_proba(self, X):
        X = self._check(X)
        Z = (X - np.asarray(self.mean)) / np.asarray(self.scale)
        W = np.asarray(self.weights, dtype=float).reshape(len(self.intercepts), self.n_features)
        raw = np.column_stack([_sigmoid(Z @ W[i] + self.intercepts[i]) for i in range(len(self.intercepts))]) \
            if self.intercepts else np.ones((X.shape[0], 1))
        if len(self.classes) == 2:
            return np.column_stack([1.0 - raw[:, 0], raw[:, 0]])
        if len(self.classes) == 1:
            return np.ones((X.shape[0], 1))
        total = raw.sum(axis=1, keepdims=True)
        total[total == 0] = 1.0
        return raw / total

    def params(self):
        return {"mean": self.mean, "scale": self.scale, "weights": self.weights,
                "intercepts": self.intercepts}


def _train_logistic(X, targets, spec: LogisticSpec):
    classes = _sorted_classes(targets)
    index = {value_key(c): j for j, c in enumerate(classes)}
    y = np.array([index[value_key(t)] for t in targets])
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (X - mu) / sd
    rng = np.random.default_rng(spec.seed)
    weights, intercepts = [], []
    if len(classes) == 2:
        problems = [1]
    elif len(classes) > 2:
        problems = list(range(len(classes)))
    else:
        problems = []
    for c in problems:
        w, b = _fit_binary(Z, (y == c).astype(float), spec, rng)
        weights.append([float(v) for v in w])
        intercepts.append(float(b))
    return LogisticModel(Task.CLASSIFICATION, X.shape[1], classes, [float(v) for v in mu],
                         [float(v) for v in sd], weights, intercepts)


# ---------------------------------------------------------------------------
# training entry point

def train(dataset, spec, targets=None, task: Task | None = None) -> TrainedModel:
    """Train on a :class:`LabeledDataset` (or on a matrix plus ``targets``/``task``)."""
    if isinstance(dataset, LabeledDataset):
        X, targets, task = dataset.rows, dataset.targets, dataset.task
    else:
        X = dataset
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training data must be a non-empty matrix")
    if len(targets) != X.shape[0]:
        raise ValueError("targets and rows differ in length")
    if isinstance(spec, ZeroRSpec):
        return _train_zeror(X, targets, task)
    if isinstance(spec, TreeSpec):
        return _train_tree(X, targets, task, spec)
    if isinstance(spec, LinearSpec):
        if task is not Task.REGRESSION:
            raise TaskMismatch("linear regression needs a numeric target")
        return _train_linear(X, targets, spec)
    if isinstance(spec, LogisticSpec):
        if task is not Task.CLASSIFICATION:
            raise TaskMismatch("logistic regression needs a non-numeric target")
        return _train_logistic(X, targets, spec)
    raise TypeError(f"unknown model spec {spec!r}")


# ---------------------------------------------------------------------------
# persistence

HEADER = "foe-predict-model v1"
_KINDS = {"zeror": ZeroRModel, "tree": TreeModel, "linear": LinearModel, "logistic": LogisticModel}


def _dump_label(v):
    kind, raw = value_key(v)
    return [kind, raw]


def _load_label(item):
    kind, raw = item
    if kind == "num":
        return float(raw)
    if kind == "time":
        return Timestamp(int(raw))
    if kind == "bool":
        return bool(raw)
    return raw


def save_model(model: TrainedModel, path, encoder=None, metadata: dict | None = None) -> None:
    """Write a versioned text file: header line, then ``key = <json>`` lines."""
    fields_ = {
        "task": model.task.value,
        "n_features": model.n_features,
        "classes": [_dump_label(c) for c in model.classes],
        "params": model.params(),
    }
    if encoder is not None:
        fields_["encoder"] = encoder.to_dict()
    if metadata:
        fields_["metadata"] = metadata
    lines = [f"{HEADER} {model.kind}"]
    lines += [f"{key} = {json.dumps(value, sort_keys=True)}" for key, value in fields_.items()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> TrainedModel:
    """Inverse of :func:`save_model`.  The encoder (if stored) is attached as
    ``model.encoder`` and metadata as ``model.metadata``."""
    from ..encoding import encoder_from_dict

    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or not lines[0].startswith(HEADER + " "):
        raise VersionMismatch(f"{path}: not a '{HEADER}' model file")
    kind = lines[0][len(HEADER) + 1:].strip()
    if kind not in _KINDS:
        raise VersionMismatch(f"{path}: unknown model kind {kind!r}")
    try:
        data = {}
        for line in lines[1:]:
            if not line.strip():
                continue
            key, _, raw = line.partition(" = ")
            data[key] = json.loads(raw)
        task = Task(data["task"])
        classes = [_load_label(c) for c in data["classes"]]
        params = data["params"]
        n = int(data["n_features"])
        if kind == "zeror":
            model = ZeroRModel(task, n, classes, params["priors"], params["mean"])
        elif kind == "tree":
            model = TreeModel(task, n, classes, params["feature"], params["threshold"],
                              params["left"], params["right"], params["value"])
        elif kind == "linear":
            model = LinearModel(task, n, params["coef"], params["intercept"])
        else:
            model = LogisticModel(task, n, classes, params["mean"], params["scale"],
                                  params["weights"], params["intercepts"])
        model.encoder = encoder_from_dict(data["encoder"]) if "encoder" in data else None
        model.metadata = data.get("metadata", {})
    except (KeyError, ValueError, TypeError, IndexError) as exc:
        raise VersionMismatch(f"{path}: corrupt model file ({exc})") from None
    return model
