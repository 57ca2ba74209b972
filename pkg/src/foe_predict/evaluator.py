"""Interpretation of expressions and formulas over a trace and a prefix length.

Every evaluation happens under ``(trace, k, valuation)``: ``curr`` is ``k``,
``last`` is the trace length and the valuation maps index variables to
positive integers.  Quantifiers range over the whole trace, not only the
prefix.
"""
from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import Mapping

from . import ast as A
from .event_log import UNDEFINED, EventLog, Timestamp, Trace, value_key


class UnboundVariable(NameError):
    pass


class NotClosed(ValueError):
    pass


@dataclass
class EvalContext:
    trace: Trace
    k: int
    valuation: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.k <= len(self.trace):
            raise ValueError(f"prefix length {self.k} outside 1..{len(self.trace)}")
        for name, value in self.valuation.items():
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"valuation of {name} must be a positive integer")


_CMP = {
    "==": operator.eq, "!=": operator.ne, "<": operator.lt,
    ">": operator.gt, "<=": operator.le, ">=": operator.ge,
}


# ---------------------------------------------------------------------------
# internal evaluators; `ctx` is an EvalContext whose valuation may be mutated
# temporarily by quantifiers and aggregates (always restored).

def _index(node, ctx) -> int:
    t = type(node)
    if t is A.Var:
        try:
            return ctx.valuation[node.name]
        except KeyError:
            raise UnboundVariable(node.name) from None
    if t is A.IConst:
        return node.value
    if t is A.Curr:
        return ctx.k
    if t is A.Last:
        return len(ctx.trace.events)
    if t is A.IndexOp:
        left = _index(node.left, ctx)
        right = _index(node.right, ctx)
        return left + right if node.op == "+" else left - right
    raise TypeError(f"not an index expression: {node!r}")


def _raw_attr(ctx, index_node, name):
    i = _index(index_node, ctx)
    events = ctx.trace.events
    if i < 1 or i > len(events):
        return UNDEFINED
    return events[i - 1].attributes.get(name, UNDEFINED)


def _as_number(value):
    if isinstance(value, bool):
        return UNDEFINED
    if isinstance(value, (float, int)):
        return float(value)
    if isinstance(value, Timestamp):
        return float(value.ms)
    return UNDEFINED


def _as_nonnum(value):
    if isinstance(value, (str, bool)):
        return value
    return UNDEFINED


def _with_var(ctx, var, values, fn):
    """Yield ``(d, fn())`` with ``var`` bound to each ``d``; restores the valuation."""
    val = ctx.valuation
    had = var in val
    old = val.get(var)
    try:
        for d in values:
            val[var] = d
            yield d, fn()
    finally:
        if had:
            val[var] = old
        else:
            val.pop(var, None)


def _bounds(node, ctx):
    return max(1, _index(node.start, ctx)), _index(node.end, ctx)


def _idx_set(node, ctx, need_source: bool) -> list[int]:
    st, ed = _bounds(node, ctx)
    out = []
    cond = node.cond
    for d, ok in _with_var(ctx, node.var, range(st, ed + 1), lambda: _formula(cond, ctx)):
        if ok:
            out.append(d)
    if need_source:
        src = node.source
        out = [d for d, v in _with_var(ctx, node.var, out, lambda: _num(src, ctx)) if v is not UNDEFINED]
    return out


def _aggregate(node, ctx):
    src = node.source
    values = []
    st, ed = _bounds(node, ctx)
    cond = node.cond
    var = node.var

    def step():
        if not _formula(cond, ctx):
            return UNDEFINED
        return _num(src, ctx)

    for _, v in _with_var(ctx, var, range(st, ed + 1), step):
        if v is not UNDEFINED:
            values.append(v)
    if not values:
        return UNDEFINED
    func = node.func
    if func == "sum":
        return sum(values, 0.0)
    if func == "avg":
        return sum(values, 0.0) / len(values)
    if func == "min":
        return min(values)
    if func == "max":
        return max(values)
    raise ValueError(f"unknown aggregate {func!r}")


def _count(node, ctx):
    st, ed = _bounds(node, ctx)
    cond = node.cond
    return float(sum(1 for _, ok in _with_var(ctx, node.var, range(st, ed + 1),
                                               lambda: _formula(cond, ctx)) if ok))


def _countval(node, ctx):
    st, ed = _bounds(node, ctx)
    events = ctx.trace.events
    seen = set()
    for d in range(st, min(ed, len(events)) + 1):
        value = events[d - 1].attributes.get(node.attr, UNDEFINED)
        if value is not UNDEFINED:
            seen.add(value_key(value))
    return float(len(seen))


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return value


def _concat(node, ctx):
    st, ed = _bounds(node, ctx)
    src = node.source
    cond = node.cond

    def step():
        if not _formula(cond, ctx):
            return ""
        v = _nonnum(src, ctx)
        return "" if v is UNDEFINED else _render(v)

    return "".join(part for _, part in _with_var(ctx, node.var, range(st, ed + 1), step))


def _num(node, ctx):
    t = type(node)
    if t is A.NumberLit:
        return node.value
    if t is A.NumAttr:
        return _as_number(_raw_attr(ctx, node.index, node.name))
    if t is A.IndexNum:
        return float(_index(node.index, ctx))
    if t is A.NumOp:
        left = _num(node.left, ctx)
        if left is UNDEFINED:
            return UNDEFINED
        right = _num(node.right, ctx)
        if right is UNDEFINED:
            return UNDEFINED
        return left + right if node.op == "+" else left - right
    if t is A.Aggregate:
        return _aggregate(node, ctx)
    if t is A.Count:
        return _count(node, ctx)
    if t is A.CountVal:
        return _countval(node, ctx)
    if t is A.Pairwise:
        left = _num(node.left, ctx)
        right = _num(node.right, ctx)
        if left is UNDEFINED or right is UNDEFINED:
            return UNDEFINED
        return min(left, right) if node.func == "min2" else max(left, right)
    raise TypeError(f"not a numeric expression: {node!r}")


def _nonnum(node, ctx):
    t = type(node)
    if t is A.StringLit or t is A.BoolLit:
        return node.value
    if t is A.NonNumAttr:
        return _as_nonnum(_raw_attr(ctx, node.index, node.name))
    if t is A.Concat:
        return _concat(node, ctx)
    raise TypeError(f"not a non-numeric expression: {node!r}")


def _same_nonnum(a, b) -> bool:
    return type(a) is type(b) and a == b


def _attr_kind(value):
    if isinstance(value, bool):
        return "bool", value
    if isinstance(value, (int, float)):
        return "num", float(value)
    if isinstance(value, Timestamp):
        return "num", float(value.ms)
    return "text", value


def _formula(node, ctx) -> bool:
    t = type(node)
    if t is A.NumCompare:
        left = _num(node.left, ctx)
        if left is UNDEFINED:
            return False
        right = _num(node.right, ctx)
        if right is UNDEFINED:
            return False
        return _CMP[node.op](left, right)
    if t is A.AttrCompare:
        left = _raw_attr(ctx, node.left.index, node.left.name)
        if left is UNDEFINED:
            return False
        right = _raw_attr(ctx, node.right.index, node.right.name)
        if right is UNDEFINED:
            return False
        lk, lv = _attr_kind(left)
        rk, rv = _attr_kind(right)
        if lk != rk:
            return False
        return (lv == rv) if node.op == "==" else (lv != rv)
    if t is A.And:
        return _formula(node.left, ctx) and _formula(node.right, ctx)
    if t is A.Or:
        return _formula(node.left, ctx) or _formula(node.right, ctx)
    if t is A.Not:
        return not _formula(node.operand, ctx)
    if t is A.Implies:
        return (not _formula(node.left, ctx)) or _formula(node.right, ctx)
    if t is A.NonNumCompare:
        left = _nonnum(node.left, ctx)
        if left is UNDEFINED:
            return False
        right = _nonnum(node.right, ctx)
        if right is UNDEFINED:
            return False
        eq = _same_nonnum(left, right)
        return eq if node.op == "==" else not eq
    if t is A.BoolLit:
        return node.value
    if t is A.Exists or t is A.Forall:
        body = node.body
        want = t is A.Exists
        val = ctx.valuation
        var = node.var
        had = var in val
        old = val.get(var)
        try:
            for c in range(1, len(ctx.trace.events) + 1):
                val[var] = c
                if _formula(body, ctx) is want:
                    return want
            return not want
        finally:
            if had:
                val[var] = old
            else:
                del val[var]
    raise TypeError(f"not a formula: {node!r}")


# ---------------------------------------------------------------------------
# public surface

def eval_index(expr, ctx: EvalContext) -> int:
    return _index(expr, ctx)


def eval_num(expr, ctx: EvalContext):
    """Number (float) or UNDEFINED."""
    return _num(expr, ctx)


def eval_nonnum(expr, ctx: EvalContext):
    """Text, boolean or UNDEFINED."""
    return _nonnum(expr, ctx)


def eval_target(expr, ctx: EvalContext):
    if A.kind_of(expr) is A.Kind.NUMERIC:
        return _num(expr, ctx)
    return _nonnum(expr, ctx)


def eval_event_expr(expr, ctx: EvalContext) -> bool:
    return _formula(expr, ctx)


def eval_formula(formula, ctx: EvalContext) -> bool:
    """Truth of a possibly open formula under ``ctx.valuation``."""
    return _formula(formula, ctx)


def valid_agg_indices(agg, ctx: EvalContext) -> list[int]:
    """Ascending indices in range where the condition holds (and, for
    sum/avg/min/max, the source is defined)."""
    if isinstance(agg, A.Aggregate):
        return _idx_set(agg, ctx, need_source=True)
    if isinstance(agg, (A.Count, A.Concat)):
        return _idx_set(agg, ctx, need_source=False)
    raise TypeError(f"no index set for {type(agg).__name__}")


def eval_aggregate(agg, ctx: EvalContext):
    if isinstance(agg, A.Concat):
        return _concat(agg, ctx)
    return _num(agg, ctx)


def satisfies(formula, trace: Trace, k: int) -> bool:
    """Whether the prefix of length ``k`` satisfies a closed formula."""
    open_vars = A.free_vars(formula)
    if open_vars:
        raise NotClosed(f"free variables: {', '.join(sorted(open_vars))}")
    return _formula(formula, EvalContext(trace, k, {}))


def apply_rule(rule: A.AnalyticRule, trace: Trace, k: int):
    """Target of the first satisfied case, or the default target."""
    ctx = EvalContext(trace, k, {})
    for cond, target in rule.cases:
        if _formula(cond, ctx):
            return eval_target(target, ctx)
    return eval_target(rule.default, ctx)


def values_equal(a, b) -> bool:
    if a is UNDEFINED or b is UNDEFINED:
        return a is b
    return type(a) is type(b) and a == b


@dataclass(frozen=True)
class Violation:
    trace_id: str
    k: int
    cases: tuple[int, int]
    values: tuple

    def __str__(self):
        i, j = self.cases
        return (f"trace {self.trace_id} k={self.k}: cases {i + 1} and {j + 1} "
                f"give {self.values[0]!r} vs {self.values[1]!r}")


@dataclass
class WellDefinednessReport:
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def check_well_defined(rule: A.AnalyticRule, log: EventLog | Mapping) -> WellDefinednessReport:
    """Find every (trace, k) where two satisfied cases disagree on the target."""
    traces = log.traces if isinstance(log, EventLog) else tuple(log)
    violations = []
    for trace in traces:
        for k in range(1, len(trace) + 1):
            ctx = EvalContext(trace, k, {})
            fired = []
            for i, (cond, target) in enumerate(rule.cases):
                if _formula(cond, ctx):
                    fired.append((i, eval_target(target, ctx)))
            for a in range(len(fired)):
                for b in range(a + 1, len(fired)):
                    (i, vi), (j, vj) = fired[a], fired[b]
                    if not values_equal(vi, vj):
                        violations.append(Violation(trace.id, k, (i, j), (vi, vj)))
    return WellDefinednessReport(violations)
