"""Independent reference implementations used as test oracles.

The reference evaluator only handles ground formulas: every bound variable
is eliminated by substituting index constants, so quantifiers become finite
conjunctions or disjunctions and aggregates become explicit loops over
substituted copies.  Nothing here short-circuits.
"""
import dataclasses
import itertools
import math

import numpy as np

from foe_predict import ast as A
from foe_predict.event_log import UNDEFINED, EventLog, Timestamp, make_trace

BINDERS = (A.Aggregate, A.Count, A.Concat)


def subst(node, var, value):
    """Replace free occurrences of index variable ``var`` by ``IConst(value)``."""
    if isinstance(node, A.Var):
        return A.IConst(value) if node.name == var else node
    if isinstance(node, (A.Forall, A.Exists)) and node.var == var:
        return node
    if isinstance(node, BINDERS) and node.var == var:
        return dataclasses.replace(node, start=subst(node.start, var, value),
                                   end=subst(node.end, var, value))
    if not isinstance(node, A.Node):
        return node
    changes = {}
    for f in dataclasses.fields(node):
        child = getattr(node, f.name)
        if isinstance(child, A.Node):
            changes[f.name] = subst(child, var, value)
    return dataclasses.replace(node, **changes) if changes else node


class Ref:
    """Reference semantics of ground expressions on a trace at prefix length k."""

    def __init__(self, trace, k):
        self.events = [e.attributes for e in trace.events]
        self.n = len(self.events)
        self.k = k

    def idx(self, node):
        if isinstance(node, A.IConst):
            return node.value
        if isinstance(node, A.Curr):
            return self.k
        if isinstance(node, A.Last):
            return self.n
        if isinstance(node, A.IndexOp):
            l, r = self.idx(node.left), self.idx(node.right)
            return l + r if node.op == "+" else l - r
        raise AssertionError(f"not ground: {node!r}")

    def raw(self, index, name):
        i = self.idx(index)
        if 1 <= i <= self.n:
            return self.events[i - 1].get(name, UNDEFINED)
        return UNDEFINED

    def num(self, node):
        if isinstance(node, A.NumberLit):
            return node.value
        if isinstance(node, A.IndexNum):
            return float(self.idx(node.index))
        if isinstance(node, A.NumAttr):
            v = self.raw(node.index, node.name)
            if isinstance(v, Timestamp):
                return float(v.ms)
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                return float(v)
            return UNDEFINED
        if isinstance(node, A.NumOp):
            l, r = self.num(node.left), self.num(node.right)
            if l is UNDEFINED or r is UNDEFINED:
                return UNDEFINED
            return l + r if node.op == "+" else l - r
        if isinstance(node, A.Pairwise):
            l, r = self.num(node.left), self.num(node.right)
            if l is UNDEFINED or r is UNDEFINED:
                return UNDEFINED
            return min(l, r) if node.func == "min2" else max(l, r)
        if isinstance(node, A.Aggregate):
            picked = [self.num(subst(node.source, node.var, d)) for d in self.index_set(node)]
            if not picked:
                return UNDEFINED
            return {"sum": lambda v: math.fsum(v), "avg": lambda v: math.fsum(v) / len(v),
                    "min": min, "max": max}[node.func](picked)
        if isinstance(node, A.Count):
            return float(len(self.index_set(node)))
        if isinstance(node, A.CountVal):
            st, ed = max(1, self.idx(node.start)), self.idx(node.end)
            seen = set()
            for d in range(st, ed + 1):
                v = self.raw(A.IConst(d), node.attr)
                if v is not UNDEFINED:
                    seen.add((type(v).__name__ if not isinstance(v, (int, float)) or isinstance(v, bool)
                              else "num", v))
            return float(len(seen))
        raise AssertionError(f"unexpected numeric node {node!r}")

    def index_set(self, node):
        """Valid aggregation indices, by direct reading of the definition."""
        st, ed = max(1, self.idx(node.start)), self.idx(node.end)
        out = []
        for d in range(st, ed + 1):
            if not self.formula(subst(node.cond, node.var, d)):
                continue
            if isinstance(node, A.Aggregate) and self.num(subst(node.source, node.var, d)) is UNDEFINED:
                continue
            out.append(d)
        return out

    def nonnum(self, node):
        if isinstance(node, (A.StringLit, A.BoolLit)):
            return node.value
        if isinstance(node, A.NonNumAttr):
            v = self.raw(node.index, node.name)
            return v if isinstance(v, (str, bool)) else UNDEFINED
        if isinstance(node, A.Concat):
            parts = []
            for d in self.index_set(node):
                v = self.nonnum(subst(node.source, node.var, d))
                if v is not UNDEFINED:
                    parts.append(("true" if v else "false") if isinstance(v, bool) else v)
            return "".join(parts)
        raise AssertionError(f"unexpected non-numeric node {node!r}")

    def formula(self, node):
        if isinstance(node, A.BoolLit):
            return node.value
        if isinstance(node, A.NumCompare):
            l, r = self.num(node.left), self.num(node.right)
            if l is UNDEFINED or r is UNDEFINED:
                return False
            return {"==": l == r, "!=": l != r, "<": l < r, ">": l > r,
                    "<=": l <= r, ">=": l >= r}[node.op]
        if isinstance(node, A.NonNumCompare):
            l, r = self.nonnum(node.left), self.nonnum(node.right)
            if l is UNDEFINED or r is UNDEFINED:
                return False
            same = type(l) is type(r) and l == r
            return same if node.op == "==" else not same
        if isinstance(node, A.AttrCompare):
            l = self.raw(node.left.index, node.left.name)
            r = self.raw(node.right.index, node.right.name)
            if l is UNDEFINED or r is UNDEFINED:
                return False
            kl, kr = _kind(l), _kind(r)
            if kl[0] != kr[0]:
                return False
            return (kl[1] == kr[1]) if node.op == "==" else (kl[1] != kr[1])
        if isinstance(node, A.Not):
            return not self.formula(node.operand)
        if isinstance(node, (A.And, A.Or, A.Implies)):
            l, r = self.formula(node.left), self.formula(node.right)
            if isinstance(node, A.And):
                return l and r
            if isinstance(node, A.Or):
                return l or r
            return (not l) or r
        if isinstance(node, A.Forall):
            return all([self.formula(subst(node.body, node.var, c)) for c in range(1, self.n + 1)])
        if isinstance(node, A.Exists):
            return any([self.formula(subst(node.body, node.var, c)) for c in range(1, self.n + 1)])
        raise AssertionError(f"unexpected formula node {node!r}")


def _kind(v):
    if isinstance(v, bool):
        return "bool", v
    if isinstance(v, Timestamp):
        return "num", float(v.ms)
    if isinstance(v, (int, float)):
        return "num", float(v)
    return "text", v


# ---------------------------------------------------------------------------
# random generation

ATTR_TEXT = ("act", "res")
ATTR_NUM = "cost"


def random_trace(rng, max_len=6, tid="t", missing=0.15):
    events = []
    for _ in range(int(rng.integers(1, max_len + 1))):
        ev = {}
        if rng.random() >= missing:
            ev["act"] = str(rng.choice(["a", "b", "c"]))
        if rng.random() >= missing:
            ev["res"] = str(rng.choice(["a", "x"]))
        if rng.random() >= missing:
            ev["cost"] = float(rng.integers(0, 4))
        events.append(ev)
    return make_trace(tid, events)


def random_log_for_rules(rng, n_traces=6, max_len=6):
    return EventLog(tuple(random_trace(rng, max_len, f"t{i}") for i in range(n_traces)))


class FormulaGen:
    """Random closed formulas of bounded depth with at most ``max_quant`` quantifiers."""

    def __init__(self, rng, max_depth=3, max_quant=2):
        self.rng = rng
        self.max_depth = max_depth
        self.max_quant = max_quant
        self._fresh = itertools.count()

    def pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def coin(self, p=0.5):
        return self.rng.random() < p

    def index(self, scope):
        r = self.rng.random()
        if scope and r < 0.5:
            base = A.Var(self.pick(scope))
        elif r < 0.7:
            base = A.IConst(int(self.rng.integers(1, 8)))
        elif r < 0.85:
            base = A.Curr()
        else:
            base = A.Last()
        if self.coin(0.25):
            return A.IndexOp(self.pick(["+", "-"]), base, A.IConst(int(self.rng.integers(1, 3))))
        return base

    def bound(self):
        return self.index(())

    def aggregate(self, scope):
        x = f"x{next(self._fresh)}"
        cond = self.agg_cond(x)
        st, ed = self.bound(), self.bound()
        r = self.rng.random()
        if r < 0.45:
            src = A.NumAttr(A.Var(x), ATTR_NUM)
            if self.coin(0.2):
                src = A.NumOp("+", src, A.IndexNum(A.Var(x)))
            return A.Aggregate(self.pick(["sum", "avg", "min", "max"]), src, x, st, ed, cond)
        if r < 0.7:
            return A.Count(cond, x, st, ed)
        if r < 0.85:
            return A.CountVal(self.pick(["act", "res", "cost"]), st, ed)
        return A.Pairwise(self.pick(["min2", "max2"]), self.num(scope, False), self.num(scope, False))

    def agg_cond(self, x):
        r = self.rng.random()
        acc = A.NonNumAttr(A.Var(x), self.pick(ATTR_TEXT))
        if r < 0.2:
            return A.BoolLit(True)
        if r < 0.6:
            return A.NonNumCompare(self.pick(["==", "!="]), acc, A.StringLit(self.pick(["a", "b", "x"])))
        if r < 0.8:
            return A.NumCompare(self.pick(["<", ">=", "=="]), A.NumAttr(A.Var(x), ATTR_NUM),
                                A.NumberLit(float(self.rng.integers(0, 4))))
        return A.Not(A.NonNumCompare("==", acc, A.StringLit("a")))

    def num(self, scope, allow_agg=True):
        r = self.rng.random()
        if allow_agg and r < 0.3:
            return self.aggregate(scope)
        if r < 0.55:
            return A.NumAttr(self.index(scope), ATTR_NUM)
        if r < 0.7:
            return A.IndexNum(self.index(scope))
        if r < 0.85:
            return A.NumberLit(float(self.rng.integers(0, 6)))
        return A.NumOp(self.pick(["+", "-"]), self.num(scope, allow_agg), self.num(scope, False))

    def atom(self, scope):
        r = self.rng.random()
        if r < 0.45:
            return A.NumCompare(self.pick(["==", "!=", "<", ">", "<=", ">="]),
                                self.num(scope), self.num(scope))
        if r < 0.75:
            right = (A.StringLit(self.pick(["a", "b", "x"])) if self.coin()
                     else A.NonNumAttr(self.index(scope), self.pick(ATTR_TEXT)))
            return A.NonNumCompare(self.pick(["==", "!="]),
                                   A.NonNumAttr(self.index(scope), self.pick(ATTR_TEXT)), right)
        if r < 0.9:
            return A.AttrCompare(self.pick(["==", "!="]),
                                 A.Accessor(self.index(scope), self.pick(ATTR_TEXT + (ATTR_NUM,))),
                                 A.Accessor(self.index(scope), self.pick(ATTR_TEXT + (ATTR_NUM,))))
        return A.BoolLit(self.coin())

    def formula(self, depth=None, scope=(), quant=None):
        depth = self.max_depth if depth is None else depth
        quant = self.max_quant if quant is None else quant
        return self._formula(depth, tuple(scope), [quant])

    def _formula(self, depth, scope, budget):
        if depth == 0:
            return self.atom(scope)
        r = self.rng.random()
        if budget[0] > 0 and r < 0.35:
            budget[0] -= 1
            var = self.pick(["i", "j"]) if self.coin(0.8) or not scope else self.pick(scope)
            body = self._formula(depth - 1, scope + (var,), budget)
            return (A.Forall if self.coin() else A.Exists)(var, body)
        if r < 0.45:
            return A.Not(self._formula(depth - 1, scope, budget))
        if r < 0.85:
            cls = self.pick([A.And, A.Or, A.Implies])
            return cls(self._formula(depth - 1, scope, budget), self._formula(depth - 1, scope, budget))
        return self.atom(scope)


def quantifier_count(node):
    return sum(1 for n in A.walk(node) if isinstance(n, (A.Forall, A.Exists)))


def formula_depth(node):
    if isinstance(node, (A.Forall, A.Exists)):
        return 1 + formula_depth(node.body)
    if isinstance(node, A.Not):
        return 1 + formula_depth(node.operand)
    if isinstance(node, (A.And, A.Or, A.Implies)):
        return 1 + max(formula_depth(node.left), formula_depth(node.right))
    return 0


# ---------------------------------------------------------------------------
# metric oracles

def pairwise_auc(labels, scores):
    """Probability that a random positive outscores a random negative; ties count half."""
    pos = [s for l, s in zip(labels, scores) if l]
    neg = [s for l, s in zip(labels, scores) if not l]
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


def numeric_grad(f, w, eps=1e-6):
    g = np.zeros_like(w)
    for i in range(len(w)):
        d = np.zeros_like(w)
        d[i] = eps
        g[i] = (f(w + d) - f(w - d)) / (2 * eps)
    return g
