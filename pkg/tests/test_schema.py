from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cinorms.errors import InputError, ParseError
from cinorms.schema import (
    SchemaError,
    SubjectRelation,
    load_schema,
    profile_consistent,
    role_closure,
    with_ontology,
)

from helpers import CLASSROOM, make_schema


def base_doc(**extra):
    doc = {
        "context": "c",
        "roles": ["a", "b", "c"],
        "attributes": ["x"],
        "transmission_principles": [{"id": "t", "text": ""}],
    }
    doc.update(extra)
    return doc


def test_classroom_fixture_loads():
    s = load_schema(CLASSROOM.read_text())
    assert s.context_id == "classroom"
    assert s.role_ids == ("student", "professor", "ta", "registrar", "chair")
    assert s.role_text("ta") == "TA"
    assert s.tp("consent").control == "consent"
    assert s.role_closure({"ta"}) == {"ta", "student"}
    assert s.role_closure({"chair"}) == {"chair", "professor"}
    assert not s.ontology.consistent({"student", "professor"})


def test_invalid_json_is_parse_error():
    with pytest.raises(ParseError):
        load_schema("{nope")


@pytest.mark.parametrize(
    "patch",
    [
        {"roles": ["a", "a"]},
        {"ontology": {"implications": [["a", "zz"]]}},
        {"ontology": {"implications": [["a", "b"], ["b", "a"]]}},
        {"ontology": {"implications": [["a", "b"], ["a", "c"]], "disjoint": [["b", "c"]]}},
        {"ontology": {"disjoint": [["a"]]}},
        {"subject_relations": ["subject_in_role(zz)"]},
        {"transmission_principles": [{"id": "t"}]},
        {"transmission_principles": [{"id": "t", "text": "", "control": "magic"}]},
        {"sender_roles": ["zz"]},
    ],
)
def test_schema_rejections(patch):
    with pytest.raises(SchemaError) as info:
        load_schema(json.dumps(base_doc(**patch)))
    assert isinstance(info.value, InputError)


def test_missing_key():
    doc = base_doc()
    del doc["attributes"]
    with pytest.raises(SchemaError, match="attributes"):
        load_schema(json.dumps(doc))


def test_subject_relation_round_trip():
    for text in ("subject_is_recipient", "subject_is_sender", "unconstrained", "subject_in_role(student)"):
        assert str(SubjectRelation.parse(text)) == text
    assert SubjectRelation.parse("subject_in_role(student)").role == "student"


def test_with_ontology_replaces_only_ontology():
    s = make_schema(["a", "b"], implications=[("a", "b")])
    t = with_ontology(s, [], [["a", "b"]])
    assert t.role_ids == s.role_ids
    assert t.role_closure({"a"}) == {"a"}
    assert not t.ontology.consistent({"a", "b"})


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_closure_properties(data):
    n = data.draw(st.integers(2, 6))
    roles = [f"r{i}" for i in range(n)]
    edges = data.draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))))
    implications = [(roles[i], roles[j]) for i, j in edges if i > j]  # acyclic by construction
    s = make_schema(roles, implications=implications)
    base = data.draw(st.sets(st.sampled_from(roles)))
    c = role_closure(s.ontology, base)
    assert set(base) <= c
    assert role_closure(s.ontology, c) == c
    for sub, sup in implications:
        if sub in c:
            assert sup in c
    assert profile_consistent(s.ontology, c)
