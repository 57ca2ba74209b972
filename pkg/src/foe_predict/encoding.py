"""Fixed-width feature encoders for trace prefixes.

Every encoder looks at the last ``n`` events of a prefix.  Blocks are laid
out oldest first, so the most recent event always occupies the final block;
shorter prefixes are left-padded with zero blocks.  Offsets in feature names
count back from the most recent event (``@-1``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .event_log import UNDEFINED, Timestamp, value_key


class EmptyTrainingSet(ValueError):
    pass


# ---------------------------------------------------------------------------
# configurations

@dataclass(frozen=True)
class LastNOneHot:
    attributes: tuple
    n: int | None = None


@dataclass(frozen=True)
class LastNNumeric:
    attributes: tuple
    n: int | None = None


@dataclass(frozen=True)
class TimeDeltas:
    n: int | None = None
    timestamp: str = "time:timestamp"


@dataclass(frozen=True)
class Composite:
    parts: tuple


def _check_n(n):
    if n is not None and (not isinstance(n, int) or n < 1):
        raise ValueError(f"window size must be a positive integer, got {n!r}")


# ---------------------------------------------------------------------------
# value helpers

def _numeric(value) -> float:
    if isinstance(value, bool) or value is UNDEFINED:
        return 0.0
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, Timestamp):
        return float(value.ms)
    return 0.0


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Timestamp):
        return value.isoformat()
    return str(value)


def _dump_value(value):
    kind, v = value_key(value)
    return [kind, v]


def _load_value(item):
    kind, v = item
    if kind == "time":
        return Timestamp(int(v))
    if kind == "num":
        return float(v)
    if kind == "bool":
        return bool(v)
    return v


# ---------------------------------------------------------------------------
# fitted encoders

class FittedEncoder:
    width: int
    feature_names: list

    def encode(self, prefix) -> np.ndarray:
        out = np.zeros(self.width)
        self._fill(prefix, out)
        return out

    def encode_many(self, prefixes) -> np.ndarray:
        out = np.zeros((len(prefixes), self.width))
        for r, prefix in enumerate(prefixes):
            self._fill(prefix, out[r])
        return out

    def _fill(self, prefix, out):
        raise NotImplementedError


@dataclass
class FittedOneHot(FittedEncoder):
    attributes: tuple
    n: int
    vocabulary: dict  # attribute -> tuple of values, sorted

    def __post_init__(self):
        self._lookup = {}
        offset = 0
        for attr in self.attributes:
            self._lookup[attr] = {value_key(v): offset + j for j, v in enumerate(self.vocabulary[attr])}
            offset += len(self.vocabulary[attr])
        self.block = offset
        self.width = self.block * self.n
        names = []
        for back in range(self.n, 0, -1):
            for attr in self.attributes:
                names.extend(f"{attr}@-{back}={_render(v)}" for v in self.vocabulary[attr])
        self.feature_names = names

    def _fill(self, prefix, out):
        recent = prefix[-self.n:]
        base = (self.n - len(recent)) * self.block
        for ev in recent:
            attrs = ev.attributes
            for attr, table in self._lookup.items():
                value = attrs.get(attr, UNDEFINED)
                if value is UNDEFINED:
                    continue
                col = table.get(value_key(value))
                if col is not None:
                    out[base + col] = 1.0
            base += self.block

    def to_dict(self):
        return {"type": "onehot", "n": self.n, "attributes": list(self.attributes),
                "vocabulary": {a: [_dump_value(v) for v in vals] for a, vals in self.vocabulary.items()}}


@dataclass
class FittedNumeric(FittedEncoder):
    attributes: tuple
    n: int

    def __post_init__(self):
        self.width = len(self.attributes) * self.n
        self.feature_names = [f"{a}@-{back}" for back in range(self.n, 0, -1) for a in self.attributes]

    def _fill(self, prefix, out):
        recent = prefix[-self.n:]
        m = len(self.attributes)
        base = (self.n - len(recent)) * m
        for ev in recent:
            for j, attr in enumerate(self.attributes):
                out[base + j] = _numeric(ev.attributes.get(attr, UNDEFINED))
            base += m

    def to_dict(self):
        return {"type": "numeric", "n": self.n, "attributes": list(self.attributes)}


@dataclass
class FittedDeltas(FittedEncoder):
    n: int
    timestamp: str = "time:timestamp"

    def __post_init__(self):
        self.width = self.n
        self.feature_names = [f"dt@-{back}" for back in range(self.n, 0, -1)]

    def _fill(self, prefix, out):
        start = max(0, len(prefix) - self.n)
        pos = self.n - (len(prefix) - start)
        for i in range(start, len(prefix)):
            if i > 0:
                cur = prefix[i].attributes.get(self.timestamp, UNDEFINED)
                prev = prefix[i - 1].attributes.get(self.timestamp, UNDEFINED)
                if isinstance(cur, Timestamp) and isinstance(prev, Timestamp):
                    out[pos] = float(cur.ms - prev.ms)
            pos += 1

    def to_dict(self):
        return {"type": "deltas", "n": self.n, "timestamp": self.timestamp}


@dataclass
class FittedComposite(FittedEncoder):
    parts: list = field(default_factory=list)

    def __post_init__(self):
        self.width = sum(p.width for p in self.parts)
        self.feature_names = [name for p in self.parts for name in p.feature_names]

    def _fill(self, prefix, out):
        offset = 0
        for p in self.parts:
            p._fill(prefix, out[offset:offset + p.width])
            offset += p.width

    def to_dict(self):
        return {"type": "composite", "parts": [p.to_dict() for p in self.parts]}


def encoder_from_dict(d) -> FittedEncoder:
    kind = d["type"]
    if kind == "onehot":
        vocab = {a: tuple(_load_value(v) for v in vals) for a, vals in d["vocabulary"].items()}
        return FittedOneHot(tuple(d["attributes"]), d["n"], vocab)
    if kind == "numeric":
        return FittedNumeric(tuple(d["attributes"]), d["n"])
    if kind == "deltas":
        return FittedDeltas(d["n"], d.get("timestamp", "time:timestamp"))
    if kind == "composite":
        return FittedComposite([encoder_from_dict(p) for p in d["parts"]])
    raise ValueError(f"unknown encoder type {kind!r}")


# ---------------------------------------------------------------------------
# fitting

def fit(config, prefixes: Sequence, default_n: int | None = None) -> FittedEncoder:
    """Freeze an encoder on training prefixes.

    A config without an explicit ``n`` uses ``default_n``, or the longest
    training prefix when that is not given either.
    """
    prefixes = list(prefixes)
    if not prefixes:
        raise EmptyTrainingSet("cannot fit an encoder without training prefixes")
    if default_n is None:
        default_n = max(len(p) for p in prefixes)
    return _fit(config, prefixes, default_n)


def _fit(config, prefixes, default_n):
    if isinstance(config, Composite):
        if not config.parts:
            raise ValueError("composite encoder needs at least one part")
        return FittedComposite([_fit(c, prefixes, default_n) for c in config.parts])
    n = getattr(config, "n", None)
    _check_n(n)
    n = n or default_n
    if isinstance(config, LastNOneHot):
        seen = {a: {} for a in config.attributes}
        for prefix in prefixes:
            for ev in prefix:
                attrs = ev.attributes
                for a in config.attributes:
                    v = attrs.get(a, UNDEFINED)
                    if v is not UNDEFINED:
                        seen[a].setdefault(value_key(v), v)
        vocab = {a: tuple(seen[a][key] for key in sorted(seen[a])) for a in config.attributes}
        return FittedOneHot(tuple(config.attributes), n, vocab)
    if isinstance(config, LastNNumeric):
        return FittedNumeric(tuple(config.attributes), n)
    if isinstance(config, TimeDeltas):
        return FittedDeltas(n, config.timestamp)
    raise TypeError(f"unknown encoder config {config!r}")


def config_from_dict(d):
    """Build an encoder config from a plain mapping (as read from TOML)."""
    kind = d.get("type")
    n = d.get("n")
    if kind == "onehot":
        return LastNOneHot(tuple(d["attributes"]), n)
    if kind == "numeric":
        return LastNNumeric(tuple(d["attributes"]), n)
    if kind == "deltas":
        return TimeDeltas(n, d.get("timestamp", "time:timestamp"))
    if kind == "composite":
        return Composite(tuple(config_from_dict(p) for p in d["parts"]))
    raise ValueError(f"unknown encoder type {kind!r}")
