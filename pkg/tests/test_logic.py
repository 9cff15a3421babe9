from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cinorms.errors import ParseError
from cinorms.logic import (
    ArityError,
    DatalogSyntaxError,
    FragmentError,
    UnknownPredicateError,
    UnsafeRuleError,
    compile_norms,
    evaluate,
    format_program,
    holds,
    iff_completion,
    parse_program,
    parse_query,
    query,
)
from cinorms.logic.formula import disj, evaluate_formula
from cinorms.logic.engine import naive_fixpoint, seminaive_fixpoint

from helpers import make_schema, norm, random_fragment_program


def test_parse_facts_rules_queries():
    p = parse_program(
        """
        % a comment
        inrole(c, alice, student).
        inrole(c, 'Dr. Who', professor).
        % @label rule1
        allowed(c, S, R, U, grade, none) :- inrole(c, S, professor), inrole(c, R, student), U = R.
        ?- allowed(c, X, alice, alice, grade, none).
        """
    )
    assert len(p.facts) == 2 and p.rules[0].label == "rule1"
    assert p.facts[1].values() == ("c", "Dr. Who", "professor")
    assert query(p, p.queries[0]) == [{"X": "Dr. Who"}]


def test_duplicate_facts_collapse():
    p = parse_program("inrole(c, a, r). inrole(c, a, r).")
    assert len(p.facts) == 1


def test_syntax_error_position():
    with pytest.raises(DatalogSyntaxError) as info:
        parse_program("inrole(c, a, r).\ninrole(c, a r).")
    assert info.value.line == 2
    assert isinstance(info.value, ParseError)


@pytest.mark.parametrize(
    "text, error",
    [
        ("allowed(c, S, R, U, a, t) :- inrole(c, S, r).", UnsafeRuleError),
        ("inrole(c, a).", ArityError),
        ("p(a). p(a, b).", ArityError),
        ("inrole(c, X, r).", FragmentError),
        ("allowed(c, S, R, U, a, t) :- allowed(c, S, R, U, a, t).", FragmentError),
        ("p(X) :- q(X), \\+ r(X).", FragmentError),
        ("p(f(a)).", FragmentError),
    ],
)
def test_rejections(text, error):
    with pytest.raises(error):
        parse_program(text)


def test_recursion_outside_fragment():
    text = """
    edge(a, b). edge(b, c). edge(c, d).
    path(X, Y) :- edge(X, Y).
    path(X, Z) :- path(X, Y), edge(Y, Z).
    """
    with pytest.raises(FragmentError):
        parse_program(text)
    p = parse_program(text, fragment=False)
    for method in ("naive", "seminaive"):
        m = evaluate(p, method=method)
        assert len(m.relation("path")) == 6
    assert holds(p, parse_query("path(a, d)"))
    assert not holds(p, parse_query("path(d, a)"))


def test_unknown_predicate_in_query():
    p = parse_program("inrole(c, a, r).")
    with pytest.raises(UnknownPredicateError):
        query(p, parse_query("mystery(a)"))


def test_query_with_equalities():
    p = parse_program("inrole(c, a, r). inrole(c, b, r).")
    assert query(p, parse_query("inrole(c, X, r), inrole(c, Y, r), X = Y")) == [
        {"X": "a", "Y": "a"},
        {"X": "b", "Y": "b"},
    ]
    assert query(p, parse_query("inrole(c, X, r), X = b")) == [{"X": "b"}]


def test_compiled_norms_round_trip():
    s = make_schema(
        ["student", "professor"],
        relations=("subject_is_recipient", "subject_is_sender", "unconstrained", "subject_in_role(student)"),
    )
    norms = [norm(s, "professor", "student", str(r)) for r in s.subject_relations]
    rules = compile_norms(norms, s)
    from cinorms.logic import DatalogProgram

    text = format_program(DatalogProgram((), tuple(rules)))
    again = parse_program(text)
    assert [r.label for r in again.rules] == [n.norm_id for n in norms]
    assert format_program(again) == text


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_seminaive_equals_naive(seed):
    program = random_fragment_program(random.Random(seed))
    assert seminaive_fixpoint(program) == naive_fixpoint(program)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_format_parse_round_trip(seed):
    program = random_fragment_program(random.Random(seed))
    again = parse_program(format_program(program))
    assert evaluate(again) == evaluate(program)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_completion_agrees_with_fixpoint(seed):
    rng = random.Random(seed)
    program = random_fragment_program(rng)
    allowed = [r for r in program.rules if r.head.pred == "allowed"]
    if not allowed:
        return
    model = evaluate(program)
    comp = iff_completion(allowed)
    body = disj(d.formula() for d in comp.disjuncts)
    relations = {p: set(model.relation(p)) for p in model.predicates()}
    domain = sorted({v for rows in relations.values() for row in rows for v in row})
    derived = model.relation("allowed")
    names = [v.name for v in comp.head_vars]
    for row in derived:
        assert evaluate_formula(body, relations, domain, dict(zip(names, row)))
    for _ in range(30 if domain else 0):
        row = tuple(rng.choice(domain) for _ in names)
        assert evaluate_formula(body, relations, domain, dict(zip(names, row))) == (row in derived)


def test_empty_completion_is_false():
    comp = iff_completion([], "allowed")
    assert comp.disjuncts == ()
    assert len(comp.head_vars) == 6
