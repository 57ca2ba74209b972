"""Synthetic logs with planted structure, used by tests and experiment scripts."""
from __future__ import annotations

import numpy as np

from .event_log import EventLog, Timestamp, make_trace

HOUR_MS = 3_600_000

# A task bounced back to its previous owner inside one group, anywhere in the trace.
BOUNCE_RULE = """
rule {
    exists i . (i + 2 <= last
                and e[i].org:resource != e[i + 1].org:resource
                and e[i].org:resource == e[i + 2].org:resource
                and e[i].org:group == e[i + 1].org:group) => "Ping-Pong";
    default "Not Ping-Pong"
}
"""

REMAINING_TIME_RULE = """
rule {
    curr < last => e[last].time:timestamp - e[curr].time:timestamp;
    default 0
}
"""

_RESOURCES = ("R1", "R2", "R3", "R4", "R5", "R6")
_GROUP = {"R1": "G1", "R2": "G1", "R3": "G1", "R4": "G2", "R5": "G2", "R6": "G2"}
_ACTIVITIES = ("Accepted", "Queued", "Completed", "Updated", "Resolved")


def has_bounce(resources) -> bool:
    """Direct check of the pattern in ``BOUNCE_RULE`` on a resource sequence."""
    for i in range(len(resources) - 2):
        a, b, c = resources[i], resources[i + 1], resources[i + 2]
        if a != b and a == c and _GROUP[a] == _GROUP[b]:
            return True
    return False


def _normal_resources(rng, length):
    while True:
        seq = [str(rng.choice(_RESOURCES)) for _ in range(length)]
        if not has_bounce(seq):
            return seq


def _bounce_resources(rng, length):
    seq = _normal_resources(rng, length)
    pos = int(rng.integers(0, length - 2))
    group = _RESOURCES[:3] if rng.random() < 0.5 else _RESOURCES[3:]
    a, b = rng.choice(group, size=2, replace=False)
    seq[pos:pos + 3] = [str(a), str(b), str(a)]
    return seq


def pingpong_log(n_traces: int = 1000, positive_rate: float = 0.3, seed: int = 0,
                 min_len: int = 4, max_len: int = 10, signal: float = 0.95,
                 early_events: int = 2) -> EventLog:
    """Traces where a planted bounce-back pattern correlates with early ``impact`` values.

    Exactly ``round(positive_rate * n_traces)`` traces contain the pattern.
    The first ``early_events`` events of such a trace have ``impact == "high"``
    with probability ``signal``, those of other traces with ``1 - signal``;
    later events draw ``impact`` uniformly.
    """
    rng = np.random.default_rng(seed)
    n_pos = int(round(positive_rate * n_traces))
    positive = np.zeros(n_traces, dtype=bool)
    positive[rng.choice(n_traces, size=n_pos, replace=False)] = True
    traces = []
    for t in range(n_traces):
        length = int(rng.integers(min_len, max_len + 1))
        res = _bounce_resources(rng, length) if positive[t] else _normal_resources(rng, length)
        p_high = signal if positive[t] else 1.0 - signal
        clock = int(rng.integers(0, 10**9))
        events = []
        for pos, r in enumerate(res):
            p = p_high if pos < early_events else 0.5
            clock += int(rng.integers(60_000, 4 * HOUR_MS))
            events.append({
                "concept:name": str(rng.choice(_ACTIVITIES)),
                "org:resource": r,
                "org:group": _GROUP[r],
                "impact": "high" if rng.random() < p else "low",
                "time:timestamp": Timestamp(clock),
            })
        traces.append(make_trace(f"case{t + 1}", events))
    return EventLog(tuple(traces))


def stage_times(n_stages: int = 8) -> dict:
    """Time-to-completion (ms) of each stage; the final stage has 0."""
    return {f"S{s}": (n_stages - 1 - s) * 5 * HOUR_MS for s in range(n_stages)}


def staged_log(n_traces: int = 600, seed: int = 0, n_stages: int = 8) -> EventLog:
    """Traces visiting an increasing subset of stages and always ending in the
    last one, so the remaining time at any event depends on its stage only."""
    rng = np.random.default_rng(seed)
    to_end = stage_times(n_stages)
    names = list(to_end)
    traces = []
    for t in range(n_traces):
        k = int(rng.integers(2, n_stages))
        chosen = sorted(rng.choice(n_stages - 1, size=k, replace=False).tolist())
        end = int(rng.integers(10**9, 2 * 10**9))
        events = [{"concept:name": names[s], "time:timestamp": Timestamp(end - to_end[names[s]])}
                  for s in chosen + [n_stages - 1]]
        traces.append(make_trace(f"case{t + 1}", events))
    return EventLog(tuple(traces))


def random_log(rng, n_traces: int = 5, min_len: int = 1, max_len: int = 8,
               missing_rate: float = 0.1) -> EventLog:
    """Small random log with text, numeric and timestamp attributes."""
    traces = []
    for t in range(n_traces):
        length = int(rng.integers(min_len, max_len + 1))
        clock = int(rng.integers(0, 10**6))
        events = []
        for _ in range(length):
            clock += int(rng.integers(0, 10_000))
            ev = {"time:timestamp": Timestamp(clock)}
            if rng.random() >= missing_rate:
                ev["concept:name"] = str(rng.choice(["a", "b", "c"]))
            if rng.random() >= missing_rate:
                ev["org:resource"] = str(rng.choice(["x", "y"]))
            if rng.random() >= missing_rate:
                ev["cost"] = float(rng.integers(0, 5))
            events.append(ev)
        traces.append(make_trace(f"t{t + 1}", events))
    return EventLog(tuple(traces))
