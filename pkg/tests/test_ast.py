import numpy as np
import pytest
from hypothesis import given, strategies as st

from foe_predict import ast as A
from foe_predict.evaluator import satisfies
from foe_predict.parser import parse_formula, parse_rule

from oracles import FormulaGen, random_trace


def acc(i, name):
    return A.NonNumAttr(A.Var(i) if isinstance(i, str) else A.IConst(i), name)


def test_kind_of():
    assert A.kind_of(A.NumberLit(1.0)) is A.Kind.NUMERIC
    assert A.kind_of(A.CountVal("a", A.IConst(1), A.Last())) is A.Kind.NUMERIC
    assert A.kind_of(A.StringLit("x")) is A.Kind.NON_NUMERIC
    assert A.kind_of(A.BoolLit(True)) is A.Kind.NON_NUMERIC
    rule = A.AnalyticRule(((A.BoolLit(True), A.StringLit("a")),), A.StringLit("b"))
    assert rule.kind is A.Kind.NON_NUMERIC


def test_iconst_must_be_positive():
    with pytest.raises(ValueError):
        A.IConst(0)


def test_free_vars():
    body = A.NonNumCompare("==", acc("i", "a"), acc("j", "a"))
    assert A.free_vars(body) == {"i", "j"}
    assert A.free_vars(A.Exists("i", body)) == {"j"}
    assert A.is_closed(A.Forall("j", A.Exists("i", body)))
    agg = A.Aggregate("sum", A.NumAttr(A.Var("x"), "c"), "x", A.IConst(1), A.Var("k"),
                      A.NonNumCompare("==", acc("x", "a"), acc("m", "a")))
    assert A.free_vars(agg) == {"k", "m"}


def test_standardize_apart_renames_clashes():
    inner = A.Forall("i", A.NonNumCompare("==", acc("i", "a"), A.StringLit("x")))
    f = A.Exists("i", A.And(inner, A.NonNumCompare("==", acc("i", "a"), A.StringLit("y"))))
    g = A.standardize_apart(f)
    binders = [n.var for n in A.walk(g) if isinstance(n, (A.Forall, A.Exists))]
    assert len(set(binders)) == 2
    assert g.body.right == f.body.right
    assert A.standardize_apart(g) == g


def test_standardize_apart_avoids_free_and_aggregation_names():
    agg = A.Count(A.BoolLit(True), "x", A.IConst(1), A.Last())
    f = A.And(A.Exists("x", A.NumCompare(">", A.IndexNum(A.Var("x")), agg)),
              A.NumCompare(">", A.IndexNum(A.Var("x")), A.NumberLit(0.0)))
    g = A.standardize_apart(f)
    assert g.left.var not in {"x"}
    assert g.right == f.right


@given(st.integers(0, 2**32 - 1))
def test_standardize_apart_idempotent_and_preserves_truth(seed):
    rng = np.random.default_rng(seed)
    f = FormulaGen(rng).formula()
    g = A.standardize_apart(f)
    assert A.standardize_apart(g) == g
    binders = [n.var for n in A.walk(g) if isinstance(n, (A.Forall, A.Exists))]
    assert len(binders) == len(set(binders))
    trace = random_trace(rng)
    for k in range(1, len(trace) + 1):
        assert satisfies(f, trace, k) == satisfies(g, trace, k)


@pytest.mark.parametrize("text, kind", [
    ('rule { e[i].a == "x" => 1; default 0 }', "OpenCondition"),
    ('rule { curr > 1 => e[i].cost; default 0 }', "FreeVariableInTarget"),
    ('rule { true => "a"; default 0 }', "IncoherentTargets"),
    ('rule { curr > 1 => sum(count(true ; where y = 1:last) ; where x = 1:last); default 0 }',
     "NestedAggregate"),
    ('rule { exists i . sum(e[x].cost ; where x = 1:last ; if e[i].a == "b") > 2 => 1; default 0 }',
     "ForeignVariableInAggregate"),
    ('rule { exists i . sum(e[x].cost ; where x = 1:i) > 2 => 1; default 0 }',
     "ForeignVariableInAggregate"),
])
def test_validation_findings(text, kind):
    report = A.validate(parse_rule(text))
    assert not report.ok
    assert kind in report.kinds()


def test_quantified_aggregation_variable():
    agg = A.Aggregate("sum", A.NumAttr(A.Var("x"), "cost"), "x", A.IConst(1), A.Last(), A.BoolLit(True))
    cond = A.Exists("x", A.NumCompare(">", agg, A.IndexNum(A.Var("x"))))
    rule = A.AnalyticRule(((cond, A.NumberLit(1.0)),), A.NumberLit(0.0))
    assert "QuantifiedAggregationVariable" in A.validate(rule).kinds()
    # after renaming the quantifier the clash is gone
    assert A.validate(A.standardize_rule(rule)).ok


def test_quantifier_inside_aggregation_condition():
    cond = A.Exists("i", A.NonNumCompare("==", acc("x", "a"), acc("i", "a")))
    agg = A.Count(cond, "x", A.IConst(1), A.Last())
    rule = A.AnalyticRule(((A.BoolLit(True), agg),), A.NumberLit(0.0))
    assert "ForeignVariableInAggregate" in A.validate(rule).kinds()


def test_findings_name_the_case():
    report = A.validate(parse_rule('rule { true => 1; e[j].a == "x" => 2; default 0 }'))
    (finding,) = report.findings
    assert finding.case == 1 and finding.names == ("j",)


def test_clean_rule():
    rule = parse_rule('rule { exists i . (i > curr and e[i].a == "x") => 1; default 0 }')
    assert A.validate(rule).ok
    assert str(A.validate(rule)) == "ok"


def test_walk_visits_every_node():
    f = parse_formula('forall i . (e[i].a == "x" or not e[i].cost > 2)')
    kinds = {type(n).__name__ for n in A.walk(f)}
    assert {"Forall", "Or", "NonNumCompare", "Not", "NumCompare", "NumAttr", "NumberLit"} <= kinds
