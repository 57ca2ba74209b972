"""Abstract syntax of event expressions, formulas and analytic rules.

All nodes are frozen dataclasses, so structural equality and hashing come
for free.  Static checks (closedness, coherence, aggregate restrictions)
live here as well; the concrete syntax is in :mod:`foe_predict.parser`.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from enum import Enum
from typing import Iterator, Union


class Node:
    __slots__ = ()

    def children(self) -> Iterator["Node"]:
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Node):
                yield value


# ---------------------------------------------------------------------------
# index expressions

@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class IConst(Node):
    value: int

    def __post_init__(self):
        if not isinstance(self.value, int) or self.value < 1:
            raise ValueError(f"index constant must be a positive integer, got {self.value!r}")


@dataclass(frozen=True)
class Curr(Node):
    pass


@dataclass(frozen=True)
class Last(Node):
    pass


@dataclass(frozen=True)
class IndexOp(Node):
    op: str  # "+" or "-"
    left: "IndexExpr"
    right: "IndexExpr"


IndexExpr = Union[Var, IConst, Curr, Last, IndexOp]


# ---------------------------------------------------------------------------
# numeric expressions

@dataclass(frozen=True)
class NumberLit(Node):
    value: float


@dataclass(frozen=True)
class IndexNum(Node):
    """An index expression used as a number."""

    index: IndexExpr


@dataclass(frozen=True)
class NumAttr(Node):
    index: IndexExpr
    name: str


@dataclass(frozen=True)
class NumOp(Node):
    op: str  # "+" or "-"
    left: "NumExpr"
    right: "NumExpr"


AGGREGATE_FUNCS = ("sum", "avg", "min", "max")


@dataclass(frozen=True)
class Aggregate(Node):
    """sum / avg / min / max of ``source`` over ``var`` in ``start..end`` where ``cond``."""

    func: str
    source: "NumExpr"
    var: str
    start: IndexExpr
    end: IndexExpr
    cond: "Formula"


@dataclass(frozen=True)
class Pairwise(Node):
    func: str  # "min2" or "max2"
    left: "NumExpr"
    right: "NumExpr"


@dataclass(frozen=True)
class Count(Node):
    cond: "Formula"
    var: str
    start: IndexExpr
    end: IndexExpr


@dataclass(frozen=True)
class CountVal(Node):
    attr: str
    start: IndexExpr
    end: IndexExpr


NumExpr = Union[NumberLit, IndexNum, NumAttr, NumOp, Aggregate, Pairwise, Count, CountVal]


# ---------------------------------------------------------------------------
# non-numeric expressions

@dataclass(frozen=True)
class BoolLit(Node):
    value: bool


@dataclass(frozen=True)
class StringLit(Node):
    value: str


@dataclass(frozen=True)
class NonNumAttr(Node):
    index: IndexExpr
    name: str


@dataclass(frozen=True)
class Concat(Node):
    source: "NonNumExpr"
    var: str
    start: IndexExpr
    end: IndexExpr
    cond: "Formula"


NonNumExpr = Union[BoolLit, StringLit, NonNumAttr, Concat]


# ---------------------------------------------------------------------------
# event expressions and formulas

NUM_OPS = ("==", "!=", "<", ">", "<=", ">=")
EQ_OPS = ("==", "!=")


@dataclass(frozen=True)
class NumCompare(Node):
    op: str
    left: NumExpr
    right: NumExpr


@dataclass(frozen=True)
class NonNumCompare(Node):
    op: str
    left: NonNumExpr
    right: NonNumExpr


@dataclass(frozen=True)
class Accessor(Node):
    index: IndexExpr
    name: str


@dataclass(frozen=True)
class AttrCompare(Node):
    """Equality between two accessors whose kind is only known at run time."""

    op: str
    left: Accessor
    right: Accessor


@dataclass(frozen=True)
class Not(Node):
    operand: "Formula"


@dataclass(frozen=True)
class And(Node):
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or(Node):
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies(Node):
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Forall(Node):
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Exists(Node):
    var: str
    body: "Formula"


EventExpr = Union[BoolLit, NumCompare, NonNumCompare, AttrCompare]
Formula = Union[EventExpr, Not, And, Or, Implies, Forall, Exists]
Quantifier = (Forall, Exists)
AGGREGATE_NODES = (Aggregate, Count, CountVal, Concat)


# ---------------------------------------------------------------------------
# rules

class Kind(Enum):
    NUMERIC = "numeric"
    NON_NUMERIC = "non-numeric"


_NUMERIC_NODES = (NumberLit, IndexNum, NumAttr, NumOp, Aggregate, Pairwise, Count, CountVal)
_NON_NUMERIC_NODES = (BoolLit, StringLit, NonNumAttr, Concat)

TargetExpr = Union[NumExpr, NonNumExpr]


def kind_of(target) -> Kind:
    if isinstance(target, _NUMERIC_NODES):
        return Kind.NUMERIC
    if isinstance(target, _NON_NUMERIC_NODES):
        return Kind.NON_NUMERIC
    raise TypeError(f"not a target expression: {target!r}")


@dataclass(frozen=True)
class AnalyticRule(Node):
    cases: tuple  # of (condition, target) pairs
    default: TargetExpr

    @property
    def kind(self) -> Kind:
        return kind_of(self.default)

    def targets(self):
        return [t for _, t in self.cases] + [self.default]

    def children(self):
        for cond, target in self.cases:
            yield cond
            yield target
        yield self.default


# ---------------------------------------------------------------------------
# traversal helpers

def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal."""
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(reversed(list(cur.children())))


def free_vars(node: Node) -> set[str]:
    """Index variables occurring free.

    Aggregates bind their own variable in source and condition only; a
    variable in a range bound is free.
    """
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Quantifier):
        return free_vars(node.body) - {node.var}
    if isinstance(node, (Aggregate, Concat)):
        inner = (free_vars(node.source) | free_vars(node.cond)) - {node.var}
        return inner | free_vars(node.start) | free_vars(node.end)
    if isinstance(node, Count):
        return (free_vars(node.cond) - {node.var}) | free_vars(node.start) | free_vars(node.end)
    out: set[str] = set()
    for child in node.children():
        out |= free_vars(child)
    return out


def all_var_names(node: Node) -> set[str]:
    names = set()
    for n in walk(node):
        if isinstance(n, Var):
            names.add(n.name)
        elif isinstance(n, Quantifier) or isinstance(n, (Aggregate, Count, Concat)):
            names.add(n.var)
    return names


def is_closed(formula: Node) -> bool:
    return not free_vars(formula)


# ---------------------------------------------------------------------------
# standardizing apart

def _rename(node, env: dict[str, str], taken: set[str], used: set[str], counters: dict[str, int]):
    if isinstance(node, Var):
        return Var(env.get(node.name, node.name))
    if isinstance(node, Quantifier):
        name = node.var
        if name in taken:
            n = counters.get(name, 0)
            while True:
                n += 1
                candidate = f"{name}__{n}"
                if candidate not in used and candidate not in taken:
                    break
            counters[name] = n
            new = candidate
        else:
            new = name
        taken.add(new)
        body = _rename(node.body, {**env, name: new}, taken, used, counters)
        return type(node)(new, body)
    if isinstance(node, (Aggregate, Count, Concat)):
        inner_env = {k: v for k, v in env.items() if k != node.var}
        kwargs = {}
        for f in fields(node):
            value = getattr(node, f.name)
            if f.name in ("source", "cond"):
                kwargs[f.name] = _rename(value, inner_env, taken, used, counters)
            elif isinstance(value, Node):
                kwargs[f.name] = _rename(value, env, taken, used, counters)
            else:
                kwargs[f.name] = value
        return type(node)(**kwargs)
    if not any(True for _ in node.children()):
        return node
    kwargs = {}
    for f in fields(node):
        value = getattr(node, f.name)
        kwargs[f.name] = _rename(value, env, taken, used, counters) if isinstance(value, Node) else value
    return type(node)(**kwargs)


def standardize_apart(formula: Node) -> Node:
    """Rename quantified variables so that every binder is unique.

    A binder is renamed to ``<name>__<n>`` when its name is free in the
    formula, is bound by an earlier quantifier (pre-order), or is used as an
    aggregation variable.  The result is alpha-equivalent; a formula that is
    already apart is returned unchanged.
    """
    taken = set(free_vars(formula))
    for n in walk(formula):
        if isinstance(n, (Aggregate, Count, Concat)):
            taken.add(n.var)
    used = all_var_names(formula)
    return _rename(formula, {}, taken, used, {})


def standardize_rule(rule: AnalyticRule) -> AnalyticRule:
    cases = tuple((standardize_apart(c), t) for c, t in rule.cases)
    return AnalyticRule(cases, rule.default)


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Finding:
    kind: str
    case: int | None  # None for the default target
    names: tuple = ()
    detail: str = ""

    def __str__(self):
        where = "default" if self.case is None else f"case {self.case + 1}"
        extra = f" [{', '.join(map(str, self.names))}]" if self.names else ""
        return f"{self.kind} at {where}{extra}: {self.detail}"


@dataclass
class ValidationReport:
    findings: list

    @property
    def ok(self) -> bool:
        return not self.findings

    def kinds(self) -> set[str]:
        return {f.kind for f in self.findings}

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(f) for f in self.findings)


def _check_aggregates(node, case, findings, enclosing=None):
    """``enclosing`` is the aggregate whose source/condition we are inside."""
    if isinstance(node, AGGREGATE_NODES):
        if enclosing is not None:
            findings.append(Finding("NestedAggregate", case, (type(node).__name__,),
                                    "aggregate inside another aggregate"))
        for bound in (node.start, node.end):
            bad = sorted(free_vars(bound))
            if bad:
                findings.append(Finding("ForeignVariableInAggregate", case, tuple(bad),
                                        "range bounds must not contain variables"))
        inner = []
        if isinstance(node, (Aggregate, Concat)):
            inner = [node.source, node.cond]
        elif isinstance(node, Count):
            inner = [node.cond]
        for part in inner:
            foreign = sorted(free_vars(part) - {node.var})
            if foreign:
                findings.append(Finding("ForeignVariableInAggregate", case, tuple(foreign),
                                        f"aggregate over {node.var} refers to other variables"))
            for n in walk(part):
                if isinstance(n, Quantifier):
                    findings.append(Finding("ForeignVariableInAggregate", case, (n.var,),
                                            "quantifier inside an aggregation condition"))
            _check_aggregates(part, case, findings, node)
        return
    if isinstance(node, Quantifier):
        for n in walk(node.body):
            if isinstance(n, (Aggregate, Count, Concat)) and n.var == node.var:
                findings.append(Finding("QuantifiedAggregationVariable", case, (node.var,),
                                        "variable is both quantified and aggregated"))
                break
    for child in node.children():
        _check_aggregates(child, case, findings, enclosing)


def validate(rule: AnalyticRule) -> ValidationReport:
    findings: list[Finding] = []
    for i, (cond, target) in enumerate(rule.cases):
        open_vars = sorted(free_vars(cond))
        if open_vars:
            findings.append(Finding("OpenCondition", i, tuple(open_vars), "condition is not closed"))
        _check_aggregates(cond, i, findings)
    entries = list(enumerate(t for _, t in rule.cases)) + [(None, rule.default)]
    for i, target in entries:
        target_vars = sorted(free_vars(target))
        if target_vars:
            findings.append(Finding("FreeVariableInTarget", i, tuple(target_vars),
                                    "targets must not contain index variables"))
        _check_aggregates(target, i, findings)
    kinds = [kind_of(t) for _, t in entries]
    if len(set(kinds)) > 1:
        found = tuple(sorted({k.value for k in kinds}))
        findings.append(Finding("IncoherentTargets", None, found,
                                "targets mix numeric and non-numeric kinds"))
    return ValidationReport(findings)
