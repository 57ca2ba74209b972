"""Event logs: traces of events carrying typed attributes.

Attribute values are plain Python values:

* ``str`` for text, ``float`` for numbers, ``bool`` for booleans,
* :class:`Timestamp` (integer milliseconds since the Unix epoch, UTC),
* :data:`UNDEFINED` for missing or out-of-range values.

Logs are loaded from XES (optionally gzipped) or CSV and are treated as
immutable afterwards.
"""
from __future__ import annotations

import csv
import gzip
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union
from xml.parsers import expat
from xml.sax.saxutils import quoteattr


class _Undefined:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNDEFINED"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (_Undefined, ())


UNDEFINED = _Undefined()


@dataclass(frozen=True, order=True)
class Timestamp:
    """Point in time as integer milliseconds since 1970-01-01T00:00:00Z."""

    ms: int

    def isoformat(self) -> str:
        dt = _EPOCH + timedelta(milliseconds=self.ms)
        return dt.isoformat(timespec="milliseconds")


AttributeValue = Union[str, float, bool, Timestamp, _Undefined]

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class FormatError(ValueError):
    """Malformed log input; carries the 1-based position when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


@dataclass(frozen=True)
class Event:
    ordinal: int
    attributes: Mapping[str, AttributeValue] = field(default_factory=dict)

    def get(self, name: str) -> AttributeValue:
        return self.attributes.get(name, UNDEFINED)


@dataclass(frozen=True)
class Trace:
    id: str
    events: tuple[Event, ...]
    attributes: Mapping[str, AttributeValue] = field(default_factory=dict)

    def __post_init__(self):
        if not self.events:
            raise ValueError(f"trace {self.id!r} has no events")
        for pos, ev in enumerate(self.events, start=1):
            if ev.ordinal != pos:
                raise ValueError(
                    f"trace {self.id!r}: event at position {pos} has ordinal {ev.ordinal}"
                )

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def event(self, index: int) -> Event:
        """Event at 1-based ``index``; raises ``IndexError`` outside 1..len."""
        if index < 1 or index > len(self.events):
            raise IndexError(index)
        return self.events[index - 1]

    def prefix(self, k: int) -> tuple[Event, ...]:
        """The first ``k`` events."""
        if k < 1 or k > len(self.events):
            raise ValueError(f"prefix length {k} outside 1..{len(self.events)}")
        return self.events[:k]


@dataclass(frozen=True)
class EventLog:
    traces: tuple[Trace, ...]

    def __post_init__(self):
        seen = set()
        for tr in self.traces:
            if tr.id in seen:
                raise ValueError(f"duplicate trace id {tr.id!r}")
            seen.add(tr.id)

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def trace(self, trace_id: str) -> Trace:
        for tr in self.traces:
            if tr.id == trace_id:
                return tr
        raise KeyError(trace_id)

    @property
    def n_events(self) -> int:
        return sum(len(t) for t in self.traces)


def make_trace(trace_id: str, events: Iterable[Mapping[str, AttributeValue]],
               attributes: Mapping[str, AttributeValue] | None = None) -> Trace:
    """Build a trace from attribute dicts, numbering events from 1."""
    evs = tuple(Event(i, dict(attrs)) for i, attrs in enumerate(events, start=1))
    return Trace(trace_id, evs, dict(attributes or {}))


def value_key(value: AttributeValue) -> tuple:
    """Total-order key that keeps kinds apart (``True`` is not ``1.0``)."""
    if isinstance(value, bool):
        return ("bool", value)
    if isinstance(value, (int, float)):
        return ("num", float(value))
    if isinstance(value, Timestamp):
        return ("time", value.ms)
    return ("text", value)


def attribute(trace: Trace, index: int, name: str) -> AttributeValue:
    """Total attribute access: UNDEFINED when out of range or missing."""
    if index < 1 or index > len(trace.events):
        return UNDEFINED
    return trace.events[index - 1].attributes.get(name, UNDEFINED)


# ---------------------------------------------------------------------------
# timestamps

_ISO_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2})(?::(\d{2})(?:[.,](\d+))?)?"
    r"\s*(Z|[+-]\d{2}(?::?\d{2})?)?$"
)


def parse_iso_ms(text: str) -> int:
    """ISO-8601 date-time to UTC milliseconds; sub-millisecond digits are truncated.

    A missing offset is read as UTC.
    """
    m = _ISO_RE.match(text.strip())
    if not m:
        raise ValueError(f"unparsable date {text!r}")
    year, month, day, hour, minute, second, frac, tz = m.groups()
    if tz is None or tz == "Z":
        offset = timedelta(0)
    else:
        sign = -1 if tz[0] == "-" else 1
        digits = tz[1:].replace(":", "")
        hours = int(digits[:2])
        minutes = int(digits[2:4]) if len(digits) > 2 else 0
        offset = sign * timedelta(hours=hours, minutes=minutes)
    dt = datetime(int(year), int(month), int(day), int(hour), int(minute),
                  int(second or 0), tzinfo=timezone(offset))
    delta = dt - _EPOCH
    ms = (delta.days * 86_400 + delta.seconds) * 1000
    if frac:
        ms += int((frac + "000")[:3])
    return ms


# ---------------------------------------------------------------------------
# XES

_ATTRIBUTE_KINDS = {"string", "date", "int", "float", "boolean", "id"}
_IGNORED_KINDS = {"list", "container"}


def _local(tag: str) -> str:
    return tag.rsplit(":", 1)[-1]


def _xes_value(kind: str, raw: str) -> AttributeValue:
    if kind in ("string", "id"):
        return raw
    if kind == "int":
        return float(int(raw.strip()))
    if kind == "float":
        return float(raw)
    if kind == "boolean":
        low = raw.strip().lower()
        if low not in ("true", "false"):
            raise ValueError(f"bad boolean {raw!r}")
        return low == "true"
    if kind == "date":
        return Timestamp(parse_iso_ms(raw))
    raise ValueError(f"unknown attribute kind {kind!r}")


def _open_bytes(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def load_xes(path) -> EventLog:
    """Read an XES file (``.xes`` or ``.xes.gz``) into an :class:`EventLog`.

    Only top-level trace and event attributes are kept; meta-attributes
    nested inside attributes, ``list``/``container`` values and log-level
    attributes are skipped.
    """
    path = Path(path)
    parser = expat.ParserCreate()
    traces: list[Trace] = []
    # each frame: (kind, payload) where kind is an element role
    stack: list[tuple[str, object]] = []
    trace_ids: set[str] = set()

    def pos():
        return parser.CurrentLineNumber, parser.CurrentColumnNumber + 1

    def fail(msg):
        line, col = pos()
        raise FormatError(msg, line, col)

    def start(tag, attrs):
        name = _local(tag)
        parent = stack[-1][0] if stack else None
        if parent in ("attr", "skip"):
            stack.append(("skip", None))
            return
        if name == "log":
            stack.append(("log", None))
        elif name == "trace":
            if parent != "log":
                fail("<trace> outside <log>")
            stack.append(("trace", ({}, [])))
        elif name == "event":
            if parent != "trace":
                fail("<event> outside <trace>")
            stack.append(("event", {}))
        elif name in ("extension", "classifier"):
            stack.append(("skip", None))
        elif name == "global":
            stack.append(("skip", None))
        elif name in _IGNORED_KINDS:
            stack.append(("skip", None))
        elif name in _ATTRIBUTE_KINDS:
            if parent in ("trace", "event"):
                if "key" not in attrs:
                    fail(f"<{name}> without key")
                raw = attrs.get("value")
                if raw is None:
                    fail(f"<{name} key={attrs['key']!r}> without value")
                try:
                    value = _xes_value(name, raw)
                except ValueError as exc:
                    fail(str(exc))
                target = stack[-1][1]
                store = target if parent == "event" else target[0]
                store[attrs["key"]] = value
            stack.append(("attr", None))
        else:
            fail(f"unknown element <{name}>")

    def end(tag):
        kind, payload = stack.pop()
        if kind == "event":
            events = stack[-1][1][1]
            events.append(Event(len(events) + 1, payload))
        elif kind == "trace":
            attrs, events = payload
            if not events:
                return
            tid = attrs.get("concept:name")
            tid = str(len(traces) + 1) if tid is UNDEFINED or tid is None else str(tid)
            if tid in trace_ids:
                fail(f"duplicate trace id {tid!r}")
            trace_ids.add(tid)
            traces.append(Trace(tid, tuple(events), attrs))

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    with _open_bytes(path) as fh:
        try:
            parser.ParseFile(fh)
        except expat.ExpatError as exc:
            raise FormatError(f"malformed XML: {expat.errors.messages[exc.code]}",
                              exc.lineno, exc.offset + 1) from None
    return EventLog(tuple(traces))


def _xes_attr(key: str, value: AttributeValue) -> str:
    if isinstance(value, bool):
        return f"<boolean key={quoteattr(key)} value=\"{'true' if value else 'false'}\"/>"
    if isinstance(value, float):
        return f"<float key={quoteattr(key)} value=\"{value!r}\"/>"
    if isinstance(value, Timestamp):
        return f"<date key={quoteattr(key)} value=\"{value.isoformat()}\"/>"
    if isinstance(value, str):
        return f"<string key={quoteattr(key)} value={quoteattr(value)}/>"
    raise TypeError(f"cannot write {value!r}")


def write_xes(log: EventLog, path) -> None:
    """Write a log as XES.  Meant for fixtures and round-trip tests."""
    lines = ['<?xml version="1.0" encoding="UTF-8"?>',
             '<log xes.version="1.0" xmlns="http://www.xes-standard.org/">']
    for tr in log.traces:
        lines.append("  <trace>")
        tattrs = dict(tr.attributes)
        tattrs.setdefault("concept:name", tr.id)
        for key, value in tattrs.items():
            lines.append("    " + _xes_attr(key, value))
        for ev in tr.events:
            lines.append("    <event>")
            for key, value in ev.attributes.items():
                lines.append("      " + _xes_attr(key, value))
            lines.append("    </event>")
        lines.append("  </trace>")
    lines.append("</log>")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# CSV

@dataclass
class CsvMapping:
    """Column roles for CSV ingestion.

    ``timestamp_format`` is ``"iso"``, ``"ms"`` (integer epoch millis) or a
    :func:`datetime.strptime` pattern (naive results are read as UTC).
    Columns listed in ``text_columns`` are never converted to numbers.
    """

    case_column: str
    timestamp_column: str
    timestamp_format: str = "iso"
    timestamp_key: str = "time:timestamp"
    rename: dict[str, str] = field(default_factory=dict)
    text_columns: Sequence[str] = ()


def _parse_ts(raw: str, fmt: str) -> int:
    if fmt == "iso":
        return parse_iso_ms(raw)
    if fmt == "ms":
        return int(raw.strip())
    dt = datetime.strptime(raw.strip(), fmt)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    delta = dt - _EPOCH
    return (delta.days * 86_400 + delta.seconds) * 1000 + delta.microseconds // 1000


def _csv_value(raw: str, as_text: bool) -> AttributeValue:
    if as_text:
        return raw
    try:
        return float(raw.replace("_", "x"))  # reject "1_000"-style strings
    except ValueError:
        return raw


def load_csv(path, mapping: CsvMapping) -> EventLog:
    """Read a CSV event table, one row per event.

    Rows are grouped by case id (first-appearance order) and sorted by
    timestamp within each case; ties keep file order.  Empty cells are
    treated as missing attributes.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (mapping.case_column, mapping.timestamp_column):
            if col not in header:
                raise FormatError(f"missing mapped column {col!r}", 1)
        groups: dict[str, list[tuple[int, dict]]] = {}
        text_cols = set(mapping.text_columns)
        for row in reader:
            line = reader.line_num
            case = row[mapping.case_column]
            raw_ts = row[mapping.timestamp_column]
            try:
                ts = _parse_ts(raw_ts, mapping.timestamp_format)
            except (ValueError, TypeError):
                raise FormatError(f"unparsable timestamp {raw_ts!r}", line) from None
            attrs: dict[str, AttributeValue] = {}
            for col, raw in row.items():
                if col in (mapping.case_column, mapping.timestamp_column) or col is None:
                    continue
                if raw is None or raw == "":
                    continue
                attrs[mapping.rename.get(col, col)] = _csv_value(raw, col in text_cols)
            attrs[mapping.timestamp_key] = Timestamp(ts)
            groups.setdefault(case, []).append((ts, attrs))
    traces = []
    for case, rows in groups.items():
        rows.sort(key=lambda r: r[0])  # stable
        traces.append(make_trace(case, (a for _, a in rows)))
    return EventLog(tuple(traces))
