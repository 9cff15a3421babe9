"""Random instance builders shared by the property and acceptance tests."""

from __future__ import annotations

import random
from pathlib import Path

from cinorms.logic.terms import Atom, Const, DatalogProgram, Equality, Rule, Var
from cinorms.normgen import CandidateNorm
from cinorms.responses import AnswerKind, ResponseMatrix
from cinorms.schema import ContextSchema, SchemaError, SubjectRelation, schema_from_dict

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "cinorms" / "fixtures"
CLASSROOM = FIXTURES / "classroom.json"
CLASSROOM_RESTRICTIONS = FIXTURES / "classroom_restrictions.json"
CLASSROOM_RESPONSES = FIXTURES / "classroom_responses.csv"


def make_schema(
    roles,
    *,
    attributes=("a0",),
    tps=("t0",),
    relations=("subject_is_recipient",),
    implications=(),
    disjoint=(),
    context="ctx",
    consent_tps=(),
) -> ContextSchema:
    doc = {
        "context": context,
        "roles": list(roles),
        "attributes": list(attributes),
        "transmission_principles": [
            {"id": t, "text": "", **({"control": "consent"} if t in consent_tps else {})} for t in tps
        ],
        "subject_relations": list(relations),
        "ontology": {"implications": [list(p) for p in implications], "disjoint": [list(g) for g in disjoint]},
    }
    return schema_from_dict(doc)


def norm(schema: ContextSchema, sender, recipient, relation, attribute=None, tp=None) -> CandidateNorm:
    return CandidateNorm(
        schema.context_id,
        sender,
        recipient,
        SubjectRelation.parse(relation),
        attribute or schema.attribute_ids[0],
        tp or schema.tp_ids[0],
    )


def random_ontology_schema(rng: random.Random, max_roles: int = 6, disjoint_all: bool = False) -> ContextSchema:
    """Random roles with an acyclic, contradiction-free ontology."""
    while True:
        n = rng.randint(2, max_roles)
        roles = [f"r{i}" for i in range(n)]
        relations = ["subject_is_recipient", "subject_is_sender", "unconstrained"] + [
            f"subject_in_role({r})" for r in roles
        ]
        if disjoint_all:
            implications, disjoint = [], [roles]
        else:
            implications = [(roles[i], roles[j]) for i in range(n) for j in range(i) if rng.random() < 0.2]
            disjoint = [(roles[i], roles[j]) for i in range(n) for j in range(i) if rng.random() < 0.2]
        try:
            return make_schema(
                roles,
                attributes=("a0", "a1"),
                tps=("t0", "t1"),
                relations=relations,
                implications=implications,
                disjoint=disjoint,
            )
        except SchemaError:
            continue


def random_norms(rng: random.Random, schema: ContextSchema, count: int) -> list[CandidateNorm]:
    relations = [str(r) for r in schema.subject_relations]
    found = {}
    for _ in range(count):
        n = norm(
            schema,
            rng.choice(schema.role_ids),
            rng.choice(schema.role_ids),
            rng.choice(relations),
            rng.choice(schema.attribute_ids),
            rng.choice(schema.tp_ids),
        )
        found[n.norm_id] = n
    return [found[k] for k in sorted(found)]


def random_fragment_program(rng: random.Random, max_actors: int = 8, max_rules: int = 10) -> DatalogProgram:
    """Facts over inrole/post/consent plus rules for allowed and canView."""
    actors = [f"u{i}" for i in range(rng.randint(1, max_actors))]
    roles = ["ra", "rb", "rc"]
    attrs, tps = ["x", "y"], ["p", "q"]
    facts = {Atom.ground("inrole", ("c", a, rl)) for a in actors for rl in roles if rng.random() < 0.4}
    for i in range(rng.randint(0, 4)):
        facts.add(
            Atom.ground(
                "post", ("c", f"m{i}", rng.choice(actors), rng.choice(actors), rng.choice(attrs), rng.choice(tps))
            )
        )
        if rng.random() < 0.5:
            facts.add(Atom.ground("consent", ("c", rng.choice(actors), f"m{i}")))
    rules = []
    s, r, su = Var("S"), Var("R"), Var("U")
    for _ in range(rng.randint(1, max_rules)):
        kind = rng.random()
        if kind < 0.75 or not rules:
            body = [
                Atom("inrole", (Const("c"), s, Const(rng.choice(roles)))),
                Atom("inrole", (Const("c"), r, Const(rng.choice(roles)))),
            ]
            pick = rng.random()
            if pick < 0.3:
                body.append(Equality(su, r))
            elif pick < 0.6:
                body.append(Equality(su, s))
            else:
                body.append(Atom("inrole", (Const("c"), su, Const(rng.choice(roles)))))
            head = Atom("allowed", (Const("c"), s, r, su, Const(rng.choice(attrs)), Const(rng.choice(tps))))
            rules.append(Rule(head, tuple(body)))
        else:
            v, p, a, sj, at, t = (Var(n) for n in ("V", "P", "A", "J", "At", "T"))
            body = [Atom("post", (Const("c"), p, a, sj, at, t)), Atom("allowed", (Const("c"), a, v, sj, at, t))]
            if rng.random() < 0.5:
                body.append(Atom("consent", (Const("c"), sj, p)))
            rules.append(Rule(Atom("canView", (Const("c"), v, p)), tuple(body)))
    return DatalogProgram(tuple(sorted(facts, key=str)), tuple(rules))


def random_matrix(rng: random.Random, n_questions: int | None = None, n_respondents: int | None = None, density: float = 0.8) -> ResponseMatrix:
    nq = n_questions or rng.randint(1, 8)
    nr = n_respondents or rng.randint(1, 6)
    questions = [f"q{i}" for i in range(nq)]
    kinds = list(AnswerKind)
    rows = []
    for j in range(nr):
        for q in questions:
            if rng.random() < density:
                rows.append((f"u{j}", q, rng.choice(kinds)))
    if not rows:
        rows.append(("u0", questions[0], AnswerKind.YES))
    return ResponseMatrix.from_rows(rows, questions)
