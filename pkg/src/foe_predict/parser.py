"""Concrete syntax for formulas and analytic rules, plus a pretty-printer.

Example::

    rule {
        exists i . (i > curr and i + 1 <= last
                    and e[i].org:resource != e[i + 1].org:resource) => "Ping-Pong";
        default "Not Ping-Pong"
    }

Precedence from loosest to tightest: ``->`` (right-assoc), ``or``, ``and``,
``not``, comparisons, ``+``/``-`` (left-assoc).  A quantifier body extends
as far to the right as possible.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

from . import ast as A

KEYWORDS = frozenset({
    "forall", "exists", "and", "or", "not", "curr", "last", "true", "false",
    "default", "rule", "where", "within", "if",
})
AGGREGATES = frozenset({"sum", "avg", "min", "max", "concat", "count", "countval", "min2", "max2"})
COMPARISONS = ("==", "!=", "<=", ">=", "<", ">")

_PUNCT = ("=>", "->", "==", "!=", "<=", ">=", "<", ">", "=", "+", "-", "(", ")",
          "[", "]", "{", "}", ".", ",", ";", ":")
_WS_RE = re.compile(r"(?:\s+|//[^\n]*)*")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ATTR_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_:]*")
_NUM_RE = re.compile(r"\d[\d_]*(?:\.\d[\d_]*)?(?:[eE][+-]?\d+)?")


class ParseError(ValueError):
    def __init__(self, line: int, column: int, expected, found: str, offset: int = 0):
        self.line = line
        self.column = column
        self.expected = frozenset(expected)
        self.found = found
        self.offset = offset
        exp = ", ".join(sorted(self.expected))
        super().__init__(f"line {line}, column {column}: expected {exp}; found {found}")


@dataclass(frozen=True)
class Token:
    kind: str  # "kw", "ident", "num", "str", "op", "eof"
    text: str
    value: object
    start: int
    end: int


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self._cache: dict[int, Token] = {}

    def position(self, offset: int) -> tuple[int, int]:
        line = self.text.count("\n", 0, offset) + 1
        col = offset - (self.text.rfind("\n", 0, offset) + 1) + 1
        return line, col

    def error(self, offset: int, expected, found: str) -> ParseError:
        line, col = self.position(offset)
        return ParseError(line, col, expected, found, offset)

    def skip_ws(self, pos: int) -> int:
        return _WS_RE.match(self.text, pos).end()

    def token_at(self, pos: int) -> Token:
        tok = self._cache.get(pos)
        if tok is None:
            tok = self._lex(pos)
            self._cache[pos] = tok
        return tok

    def _lex(self, pos: int) -> Token:
        text = self.text
        start = self.skip_ws(pos)
        if start >= len(text):
            return Token("eof", "end of input", None, start, start)
        ch = text[start]
        if ch == '"':
            return self._string(start)
        if ch.isdigit():
            m = _NUM_RE.match(text, start)
            end = m.end()
            if end < len(text) and text[end] == "." and end + 1 < len(text) and text[end + 1].isdigit():
                raise self.error(start, {"number"}, f"dotted number {text[start:end + 2]}...")
            raw = m.group().replace("_", "")
            is_int = not any(c in raw for c in ".eE")
            return Token("num", m.group(), (int(raw) if is_int else float(raw)), start, end)
        m = _IDENT_RE.match(text, start)
        if m:
            word = m.group()
            kind = "kw" if word in KEYWORDS else "ident"
            return Token(kind, word, word, start, m.end())
        for p in _PUNCT:
            if text.startswith(p, start):
                return Token("op", p, p, start, start + len(p))
        raise self.error(start, {"token"}, repr(ch))

    def _string(self, start: int) -> Token:
        text = self.text
        out = []
        i = start + 1
        while i < len(text):
            c = text[i]
            if c == "\\":
                if i + 1 < len(text) and text[i + 1] in '"\\':
                    out.append(text[i + 1])
                    i += 2
                    continue
                raise self.error(i, {'\\"', "\\\\"}, repr(text[i:i + 2]))
            if c == '"':
                return Token("str", text[start:i + 1], "".join(out), start, i + 1)
            out.append(c)
            i += 1
        raise self.error(start, {'"'}, "unterminated string")

    def attr_name(self, pos: int) -> tuple[str, int] | None:
        start = self.skip_ws(pos)
        m = _ATTR_RE.match(self.text, start)
        if m:
            return m.group(), m.end()
        if start < len(self.text) and self.text[start] == '"':
            tok = self._string(start)
            return tok.value, tok.end
        return None


def _describe(tok: Token) -> str:
    if tok.kind == "eof":
        return "end of input"
    return repr(tok.text)


# Untyped accessor produced while parsing an operand; resolved by context.
@dataclass(frozen=True)
class _Acc:
    index: object
    name: str


_NUM_TYPES = (A.NumberLit, A.IndexNum, A.NumAttr, A.NumOp, A.Aggregate, A.Pairwise, A.Count, A.CountVal)
_NONNUM_TYPES = (A.BoolLit, A.StringLit, A.NonNumAttr, A.Concat)


class _Parser:
    def __init__(self, text: str):
        self.lx = _Lexer(text)
        self.pos = 0

    # -- token plumbing ----------------------------------------------------
    def peek(self, ahead: int = 0) -> Token:
        pos = self.pos
        tok = self.lx.token_at(pos)
        for _ in range(ahead):
            tok = self.lx.token_at(tok.end)
        return tok

    def advance(self) -> Token:
        tok = self.peek()
        self.pos = tok.end
        return tok

    def fail(self, expected, tok: Token | None = None) -> ParseError:
        tok = tok or self.peek()
        err = self.lx.error(tok.start, expected, _describe(tok))
        return err

    def check(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("op", "kw") and tok.text == text

    def accept(self, text: str) -> bool:
        if self.check(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.check(text):
            raise self.fail({repr(text)})
        return self.advance()

    def expect_ident(self, what="variable") -> str:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.fail({what})
        self.advance()
        return tok.text

    def expect_end(self):
        tok = self.peek()
        if tok.kind != "eof":
            raise self.fail({"end of input"})

    # -- rules ---------------------------------------------------------------
    def rule(self) -> A.AnalyticRule:
        self.expect("rule")
        self.expect("{")
        raw_cases = []
        while not self.check("default"):
            cond = self.formula()
            self.expect("=>")
            target = self.operand()
            raw_cases.append((cond, target))
            if not self.accept(";"):
                raise self.fail({"';'"})
        self.expect("default")
        default = self.operand()
        self.accept(";")
        self.expect("}")
        self.expect_end()

        raws = [t for _, t in raw_cases] + [default]
        numeric = False
        for t in raws:
            k = self.kind(t)
            if k != "acc":
                numeric = k == "num"
                break
        cases = tuple((c, self._target(t, numeric)) for c, t in raw_cases)
        return A.AnalyticRule(cases, self._target(default, numeric))

    def _target(self, raw, numeric: bool):
        k = self.kind(raw)
        if k == "num" or (k == "acc" and numeric):
            return self.as_num(raw)
        return self.as_nonnum(raw)

    # -- formulas ----------------------------------------------------------
    def formula(self, in_agg: bool = False):
        left = self.disjunction(in_agg)
        if self.check("->"):
            if in_agg:
                raise self.fail({"')'", "';'", "'and'", "'or'"})
            self.advance()
            right = self.formula(in_agg)
            return A.Implies(left, right)
        return left

    def disjunction(self, in_agg):
        left = self.conjunction(in_agg)
        while self.accept("or"):
            left = A.Or(left, self.conjunction(in_agg))
        return left

    def conjunction(self, in_agg):
        left = self.unary(in_agg)
        while self.accept("and"):
            left = A.And(left, self.unary(in_agg))
        return left

    def unary(self, in_agg):
        if self.accept("not"):
            return A.Not(self.unary(in_agg))
        if self.check("forall") or self.check("exists"):
            if in_agg:
                raise self.fail({"event expression"})
            quant = self.advance().text
            var = self.expect_ident()
            self.expect(".")
            body = self.formula()
            return (A.Forall if quant == "forall" else A.Exists)(var, body)
        return self.atom(in_agg)

    def atom(self, in_agg):
        if self.check("("):
            saved = self.pos
            try:
                return self.comparison(require=True)
            except ParseError as first:
                self.pos = saved
                try:
                    self.expect("(")
                    inner = self.formula(in_agg)
                    self.expect(")")
                    return inner
                except ParseError as second:
                    raise max(first, second, key=lambda e: e.offset) from None
        return self.comparison(require=False)

    def comparison(self, require: bool):
        start_tok = self.peek()
        left = self.operand()
        tok = self.peek()
        if tok.kind == "op" and tok.text in COMPARISONS:
            self.advance()
            right = self.operand()
            return self.make_compare(tok, left, right)
        node = left[0]
        if not require and isinstance(node, A.BoolLit) and left[1] == "lit":
            return node
        raise self.fail({"comparison operator"}, tok)

    def make_compare(self, op_tok: Token, left, right):
        op = op_tok.text
        lk, rk = self.kind(left), self.kind(right)
        if lk == "acc" and rk == "acc":
            if op in A.EQ_OPS:
                return A.AttrCompare(op, A.Accessor(left[0].index, left[0].name),
                                     A.Accessor(right[0].index, right[0].name))
            return A.NumCompare(op, self.as_num(left), self.as_num(right))
        if "num" in (lk, rk) and "nonnum" not in (lk, rk):
            return A.NumCompare(op, self.as_num(left), self.as_num(right))
        if "nonnum" in (lk, rk) and "num" not in (lk, rk):
            if op not in A.EQ_OPS:
                raise self.fail({"'=='", "'!='"}, op_tok)
            return A.NonNumCompare(op, self.as_nonnum(left), self.as_nonnum(right))
        raise self.lx.error(op_tok.start, {"operands of the same kind"}, "numeric vs non-numeric comparison")

    # -- expressions -------------------------------------------------------
    # operands are (node, tag) pairs; tag records the syntactic origin so the
    # literal `true` can be told apart from `(true)` and so errors can point
    # at the operand.
    def kind(self, operand) -> str:
        node = operand[0]
        if isinstance(node, _Acc):
            return "acc"
        if isinstance(node, (A.Var, A.Curr, A.Last)) or isinstance(node, _NUM_TYPES):
            return "num"
        return "nonnum"

    def as_num(self, operand):
        node, start = operand[0], operand[2]
        if isinstance(node, _Acc):
            return A.NumAttr(node.index, node.name)
        if isinstance(node, (A.Var, A.Curr, A.Last)):
            return A.IndexNum(node)
        if isinstance(node, _NUM_TYPES):
            return node
        raise self.lx.error(start, {"numeric expression"}, "non-numeric expression")

    def as_nonnum(self, operand):
        node, start = operand[0], operand[2]
        if isinstance(node, _Acc):
            return A.NonNumAttr(node.index, node.name)
        if isinstance(node, _NONNUM_TYPES):
            return node
        raise self.lx.error(start, {"non-numeric expression"}, "numeric expression")

    def operand(self):
        start = self.peek().start
        left = self.term()
        while self.peek().kind == "op" and self.peek().text in ("+", "-"):
            op = self.advance().text
            right = self.term()
            left = (A.NumOp(op, self.as_num(left), self.as_num(right)), "op", start)
        return left

    def term(self):
        tok = self.peek()
        start = tok.start
        if tok.kind == "num":
            self.advance()
            return (A.NumberLit(float(tok.value)), "lit", start)
        if tok.kind == "op" and tok.text == "-":
            nxt = self.peek(1)
            if nxt.kind == "num":
                self.advance()
                self.advance()
                return (A.NumberLit(-float(nxt.value)), "lit", start)
            raise self.fail({"number"}, nxt)
        if tok.kind == "str":
            self.advance()
            return (A.StringLit(tok.value), "lit", start)
        if tok.kind == "kw" and tok.text in ("true", "false"):
            self.advance()
            return (A.BoolLit(tok.text == "true"), "lit", start)
        if tok.kind == "kw" and tok.text == "curr":
            self.advance()
            return (A.Curr(), "idx", start)
        if tok.kind == "kw" and tok.text == "last":
            self.advance()
            return (A.Last(), "idx", start)
        if tok.kind == "ident":
            nxt = self.peek(1)
            if tok.text == "e" and nxt.kind == "op" and nxt.text == "[":
                return (self.accessor(), "acc", start)
            if tok.text in AGGREGATES and nxt.kind == "op" and nxt.text == "(":
                return (self.aggregate(), "agg", start)
            self.advance()
            return (A.Var(tok.text), "idx", start)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.operand()
            self.expect(")")
            return (inner[0], "paren", start)
        raise self.fail({"expression"})

    def accessor(self) -> _Acc:
        self.advance()  # e
        self.expect("[")
        idx = self.index_expr()
        self.expect("]")
        self.expect(".")
        name = self.attribute_name()
        return _Acc(idx, name)

    def attribute_name(self) -> str:
        got = self.lx.attr_name(self.pos)
        if got is None:
            raise self.fail({"attribute name"})
        name, end = got
        self.pos = end
        return name

    def index_expr(self):
        left = self.index_term()
        while self.peek().kind == "op" and self.peek().text in ("+", "-"):
            op = self.advance().text
            left = A.IndexOp(op, left, self.index_term())
        return left

    def index_term(self):
        tok = self.peek()
        if tok.kind == "num":
            if not isinstance(tok.value, int) or tok.value < 1:
                raise self.fail({"positive integer"})
            self.advance()
            return A.IConst(tok.value)
        if tok.kind == "kw" and tok.text == "curr":
            self.advance()
            return A.Curr()
        if tok.kind == "kw" and tok.text == "last":
            self.advance()
            return A.Last()
        if tok.kind == "ident":
            self.advance()
            return A.Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.index_expr()
            self.expect(")")
            return inner
        raise self.fail({"index expression"})

    def range_clause(self, keyword: str):
        self.expect(keyword)
        var = None
        if keyword == "where":
            var = self.expect_ident()
            self.expect("=")
        start = self.index_expr()
        self.expect(":")
        end = self.index_expr()
        return var, start, end

    def aggregate(self):
        name = self.advance().text
        self.expect("(")
        if name in ("min2", "max2"):
            a = self.as_num(self.operand())
            self.expect(",")
            b = self.as_num(self.operand())
            self.expect(")")
            return A.Pairwise(name, a, b)
        if name == "countval":
            attr = self.attribute_name()
            self.expect(";")
            _, start, end = self.range_clause("within")
            self.expect(")")
            return A.CountVal(attr, start, end)
        if name == "count":
            cond = self.formula(in_agg=True)
            self.expect(";")
            var, start, end = self.range_clause("where")
            self.expect(")")
            return A.Count(cond, var, start, end)
        src = self.operand()
        source = self.as_nonnum(src) if name == "concat" else self.as_num(src)
        self.expect(";")
        var, start, end = self.range_clause("where")
        cond = A.BoolLit(True)
        if self.accept(";"):
            self.expect("if")
            cond = self.formula(in_agg=True)
        self.expect(")")
        if name == "concat":
            return A.Concat(source, var, start, end, cond)
        return A.Aggregate(name, source, var, start, end, cond)


def parse_rule(text: str) -> A.AnalyticRule:
    """Parse a ``rule { ... }`` block; quantified variables are standardized apart."""
    p = _Parser(text)
    return A.standardize_rule(p.rule())


def parse_formula(text: str):
    p = _Parser(text)
    f = p.formula()
    p.expect_end()
    return A.standardize_apart(f)


def parse_expression(text: str):
    """Parse a numeric or non-numeric expression; a bare accessor is non-numeric."""
    p = _Parser(text)
    raw = p.operand()
    p.expect_end()
    if p.kind(raw) == "num":
        return p.as_num(raw)
    return p.as_nonnum(raw)


# ---------------------------------------------------------------------------
# printing

def _fmt_number(v: float) -> str:
    if math.isfinite(v) and v == int(v) and abs(v) < 1e15 and not (v == 0 and str(v).startswith("-")):
        return str(int(v))
    return repr(v)


def _fmt_string(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _fmt_attr(name: str) -> str:
    if _ATTR_RE.fullmatch(name):
        return name
    return _fmt_string(name)


def _idx(node, nested=False) -> str:
    if isinstance(node, A.Var):
        return node.name
    if isinstance(node, A.IConst):
        return str(node.value)
    if isinstance(node, A.Curr):
        return "curr"
    if isinstance(node, A.Last):
        return "last"
    if isinstance(node, A.IndexOp):
        s = f"{_idx(node.left)} {node.op} {_idx(node.right, True)}"
        return f"({s})" if nested else s
    raise TypeError(node)


def _range(var, start, end) -> str:
    prefix = f"where {var} = " if var is not None else "within "
    return f"{prefix}{_idx(start)}:{_idx(end)}"


def format_expr(node, nested=False) -> str:
    if isinstance(node, A.NumberLit):
        return _fmt_number(node.value)
    if isinstance(node, A.IndexNum):
        return _idx(node.index, nested)
    if isinstance(node, (A.NumAttr, A.NonNumAttr, A.Accessor)):
        return f"e[{_idx(node.index)}].{_fmt_attr(node.name)}"
    if isinstance(node, A.NumOp):
        s = f"{format_expr(node.left)} {node.op} {format_expr(node.right, True)}"
        return f"({s})" if nested else s
    if isinstance(node, A.Aggregate):
        s = f"{node.func}({format_expr(node.source)} ; {_range(node.var, node.start, node.end)}"
        if node.cond != A.BoolLit(True):
            s += f" ; if {format_formula(node.cond)}"
        return s + ")"
    if isinstance(node, A.Concat):
        s = f"concat({format_expr(node.source)} ; {_range(node.var, node.start, node.end)}"
        if node.cond != A.BoolLit(True):
            s += f" ; if {format_formula(node.cond)}"
        return s + ")"
    if isinstance(node, A.Pairwise):
        return f"{node.func}({format_expr(node.left)}, {format_expr(node.right)})"
    if isinstance(node, A.Count):
        return f"count({format_formula(node.cond)} ; {_range(node.var, node.start, node.end)})"
    if isinstance(node, A.CountVal):
        return f"countval({_fmt_attr(node.attr)} ; {_range(None, node.start, node.end)})"
    if isinstance(node, A.BoolLit):
        return "true" if node.value else "false"
    if isinstance(node, A.StringLit):
        return _fmt_string(node.value)
    raise TypeError(f"not an expression: {node!r}")


_PREC = {A.Implies: 1, A.Or: 2, A.And: 3, A.Not: 4}


def format_formula(node, ctx: int = 0) -> str:
    if isinstance(node, (A.Forall, A.Exists)):
        q = "forall" if isinstance(node, A.Forall) else "exists"
        body = format_formula(node.body)
        if isinstance(node.body, (A.And, A.Or, A.Implies)):
            body = f"({body})"
        s = f"{q} {node.var} . {body}"
        return f"({s})" if ctx > 0 else s
    if isinstance(node, A.Implies):
        s = f"{format_formula(node.left, 2)} -> {format_formula(node.right, 1)}"
        return f"({s})" if ctx > 1 else s
    if isinstance(node, A.Or):
        s = f"{format_formula(node.left, 2)} or {format_formula(node.right, 3)}"
        return f"({s})" if ctx > 2 else s
    if isinstance(node, A.And):
        s = f"{format_formula(node.left, 3)} and {format_formula(node.right, 4)}"
        return f"({s})" if ctx > 3 else s
    if isinstance(node, A.Not):
        return f"not {format_formula(node.operand, 4)}"
    if isinstance(node, A.BoolLit):
        return "true" if node.value else "false"
    if isinstance(node, (A.NumCompare, A.NonNumCompare, A.AttrCompare)):
        return f"{format_expr(node.left)} {node.op} {format_expr(node.right)}"
    raise TypeError(f"not a formula: {node!r}")


def format_rule(rule: A.AnalyticRule) -> str:
    lines = ["rule {"]
    for cond, target in rule.cases:
        lines.append(f"    {format_formula(cond)} => {format_expr(target)};")
    lines.append(f"    default {format_expr(rule.default)}")
    lines.append("}")
    return "\n".join(lines)
