from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cinorms.errors import ParseError, ValidationError
from cinorms.responses import (
    NONSTRICT,
    STRICT,
    AnswerKind,
    ResponseError,
    ResponseMatrix,
    divergence,
    ingest_responses,
    metrics_report,
    norm_approval,
    norm_disapproval,
    percent_thresholds,
    quarantine_dms,
    select_norms,
    sweep_divergence,
    sweep_report,
    user_approval,
)

TOKENS = [k.value for k in AnswerKind]


@st.composite
def tables(draw):
    """Raw answer tables as {respondent: {question: token}}, every respondent answering something."""
    nq = draw(st.integers(1, 7))
    nr = draw(st.integers(1, 6))
    questions = [f"q{i}" for i in range(nq)]
    table = {}
    for j in range(nr):
        answers = draw(st.dictionaries(st.sampled_from(questions), st.sampled_from(TOKENS), min_size=1))
        table[f"u{j}"] = answers
    return questions, table


def to_matrix(questions, table):
    rows = [(r, q, AnswerKind(t)) for r, a in table.items() for q, t in a.items()]
    return ResponseMatrix.from_rows(rows, questions)


def oracle(questions, table, threshold, strict):
    """Direct counting over the raw table, written independently of the library."""
    ge = (lambda a, b: a > b) if strict else (lambda a, b: a >= b)
    approved, disapproved, undecided = set(), set(), set()
    for q in questions:
        given_ = [a[q] for a in table.values() if q in a]
        if not given_:
            undecided.add(q)
        elif ge(Fraction(given_.count("Y"), len(given_)), threshold):
            approved.add(q)
        elif ge(Fraction(given_.count("N"), len(given_)), threshold):
            disapproved.add(q)
        else:
            undecided.add(q)
    ds = {r: sum(1 for q, t in a.items() if (q in approved) != (t == "Y")) for r, a in table.items()}
    return approved, disapproved, undecided, ds


thresholds = st.fractions(min_value=0, max_value=1, max_denominator=100)


@settings(max_examples=150, deadline=None)
@given(tables(), thresholds, st.booleans())
def test_selection_matches_oracle(data, threshold, strict):
    questions, table = data
    m = to_matrix(questions, table)
    sel = select_norms(m, threshold, STRICT if strict else NONSTRICT)
    approved, disapproved, undecided, ds = oracle(questions, table, threshold, strict)
    assert (sel.approved, sel.disapproved, sel.undecided) == (approved, disapproved, undecided)
    assert {r: divergence(m, sel, r) for r in table} == ds
    (t, norm_ds), = sweep_divergence(m, [threshold], sel.mode)
    assert norm_ds == Fraction(sum(ds.values()), len(table))


@settings(max_examples=100, deadline=None)
@given(tables())
def test_partition_and_monotonicity(data):
    questions, table = data
    m = to_matrix(questions, table)
    previous = {STRICT: None, NONSTRICT: None}
    for t in percent_thresholds(5):
        strict, loose = select_norms(m, t, STRICT), select_norms(m, t, NONSTRICT)
        for sel in (strict, loose):
            parts = [sel.approved, sel.disapproved, sel.undecided]
            assert set().union(*parts) == set(questions)
            assert sum(map(len, parts)) == len(questions)
            if previous[sel.mode] is not None:
                assert sel.approved <= previous[sel.mode].approved
            previous[sel.mode] = sel
        assert strict.approved <= loose.approved


@settings(max_examples=100, deadline=None)
@given(tables())
def test_ratios_in_unit_interval(data):
    questions, table = data
    m = to_matrix(questions, table)
    for q in questions:
        if m.tally(q).total:
            assert 0 <= norm_approval(m, q) + norm_disapproval(m, q) <= 1
    for r in table:
        assert 0 <= user_approval(m, r) <= 1


def test_ties_and_unanswered():
    m = ResponseMatrix.from_rows(
        [("a", "q1", AnswerKind.YES), ("b", "q1", AnswerKind.NO)], ["q1", "q2"]
    )
    sel = select_norms(m, Fraction(1, 2), NONSTRICT)
    assert sel.ties == {"q1"} and sel.approved == {"q1"}
    assert "q2" in sel.undecided
    with pytest.raises(ResponseError):
        norm_approval(m, "q2")


def test_threshold_bounds():
    m = ResponseMatrix.from_rows([("a", "q", AnswerKind.YES)], ["q"])
    for bad in (Fraction(-1, 100), Fraction(101, 100)):
        with pytest.raises(ValidationError):
            select_norms(m, bad)


def test_ingest_errors():
    with pytest.raises(ParseError):
        ingest_responses("who,what\n", ["q"])
    with pytest.raises(ResponseError, match="line 2"):
        ingest_responses("respondent_id,norm_id,answer\na,q,maybe\n", ["q"])
    with pytest.raises(ResponseError, match="unknown"):
        ingest_responses("respondent_id,norm_id,answer\na,zz,Y\n", ["q"])
    with pytest.raises(ResponseError, match="duplicate"):
        ingest_responses("respondent_id,norm_id,answer\na,q,Y\na,q,N\n", ["q"])


def test_ingest_and_reports():
    text = "respondent_id,norm_id,answer\na,q1,Y\nb,q1,DMS2\na,q2,N\nb,q2,N\n"
    m = ingest_responses(text, ["q1", "q2"])
    sel = select_norms(m, Fraction(1, 2), NONSTRICT)
    questions_csv, respondents_csv = metrics_report(m, sel)
    assert questions_csv.splitlines() == [
        "norm_id,yes,no,dms,na,nd,status,tie",
        "q1,1,0,1,0.500000,0.000000,approved,0",
        "q2,0,2,0,0.000000,1.000000,disapproved,0",
    ]
    assert respondents_csv.splitlines()[1:] == ["a,2,1,0.500000,0", "b,2,0,0.000000,1"]
    sweep = sweep_report(sweep_divergence(m, percent_thresholds(50)))
    assert sweep.splitlines() == ["threshold,normalized_ds", "0.00,0.500000", "0.50,0.500000", "1.00,0.500000"]


def test_quarantine_dms():
    rows = [("a", "q1", AnswerKind.DMS1), ("b", "q1", AnswerKind.DMS3), ("a", "q2", AnswerKind.YES)]
    m = ResponseMatrix.from_rows(rows, ["q1", "q2"])
    kept = quarantine_dms(m, Fraction(1, 2))
    assert kept.questions == ("q2",)
    assert kept.respondents == ("a",)
    assert quarantine_dms(m, 1).questions == ("q1", "q2")
