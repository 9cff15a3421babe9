"""Definitional checks over a fully grounded universe, used to cross-check the symbolic search."""

from __future__ import annotations

from collections import defaultdict
from typing import Sequence

from cinorms.errors import ValidationError
from cinorms.logic.engine import evaluate
from cinorms.logic.terms import Atom, DatalogProgram, Rule
from cinorms.normgen import CandidateNorm
from cinorms.schema import SUBJECT_IN_ROLE, SUBJECT_IS_RECIPIENT, SUBJECT_IS_SENDER, ContextSchema
from cinorms.verifier.checks import (
    BOUND_RECIPIENT,
    BOUND_SENDER,
    SEMANTIC,
    SEPARATE,
    TP_EXACT,
    TP_IGNORE,
    TRANSITIVITY,
    FlowPattern,
    Hop,
    Violation,
    _check_norm,
    _check_rules,
    _shortest_chain,
    sort_violations,
)
from cinorms.verifier.profiles import ProfileSpace

COPIES = 3
DEFAULT_MAX_ACTORS = 150


class UniverseTooLarge(ValidationError):
    pass


def _universe(space: ProfileSpace, max_actors: int) -> dict[str, frozenset]:
    size = COPIES * len(space)
    if size > max_actors:
        raise UniverseTooLarge(f"oracle universe of {size} actors exceeds the limit of {max_actors}")
    return {f"p{i}_{c}": p for i, p in enumerate(space.profiles) for c in range(COPIES)}


def ground_flows(approved: Sequence[Rule], schema: ContextSchema, actors: dict[str, frozenset]) -> set[tuple]:
    """Every derivable ``allowed`` tuple in the schema's context over ``actors``."""
    ctx = schema.context_id
    facts = tuple(Atom.ground("inrole", (ctx, a, r)) for a, prof in actors.items() for r in sorted(prof))
    model = evaluate(DatalogProgram(facts, tuple(approved)))
    return {row for row in model.relation("allowed") if row[0] == ctx and row[1] in actors and row[2] in actors and row[3] in actors}


def _matches(norm: CandidateNorm, row, actors) -> bool:
    _, s, r, su, attr, tp = row
    if s == r or attr != norm.attribute or tp != norm.transmission_principle:
        return False
    if norm.sender_role not in actors[s] or norm.recipient_role not in actors[r]:
        return False
    kind = norm.subject_relation.kind
    if kind == SUBJECT_IS_RECIPIENT:
        return su == r
    if kind == SUBJECT_IS_SENDER:
        return su == s
    if su in (s, r):
        return False
    return kind != SUBJECT_IN_ROLE or norm.subject_relation.role in actors[su]


def oracle_semantic(approved, disapproved, schema, space, flows, actors) -> list[Violation]:
    found = []
    ordered = sorted(flows)
    for norm in disapproved:
        row = next((row for row in ordered if _matches(norm, row, actors)), None)
        if row is None:
            continue
        _, s, r, su, attr, tp = row
        names = {s: "sender", r: "recipient"}
        names.setdefault(su, "subject")
        hop = Hop(names[s], names[r], tp)
        binding = BOUND_RECIPIENT if su == r else BOUND_SENDER if su == s else SEPARATE
        found.append(
            Violation(
                kind=SEMANTIC,
                context=schema.context_id,
                attribute=attr,
                transmission_principle=tp,
                subject=names[su],
                actors=tuple(sorted((names[a], actors[a]) for a in {s, r, su})),
                chain=(hop,),
                direct=hop,
                pattern=FlowPattern(actors[s], actors[r], binding, actors[su], attr, tp),
                norm_id=norm.norm_id,
            )
        )
    return sort_violations(found)


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def oracle_transitivity(schema, flows, actors, tp_match) -> list[Violation]:
    names = sorted(actors)
    pos = {a: i for i, a in enumerate(names)}
    graphs: dict[tuple, list[int]] = defaultdict(lambda: [0] * len(names))
    for _, s, r, su, attr, tp in flows:
        if s == r:
            continue
        key = (su, attr, tp if tp_match == TP_EXACT else None)
        graphs[key][pos[s]] |= 1 << pos[r]
    found: dict[tuple, Violation] = {}
    for (su, attr, tp), adj in sorted(graphs.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or "")):
        reach = list(adj)
        for k in range(len(reach)):
            bit, rk = 1 << k, reach[k]
            for i in range(len(reach)):
                if reach[i] & bit:
                    reach[i] |= rk
        for x in range(len(names)):
            for z in _bits(reach[x] & ~adj[x] & ~(1 << x)):
                a, b = names[x], names[z]
                path = _shortest_chain(adj, x, z)
                binding = BOUND_SENDER if a == su else BOUND_RECIPIENT if b == su else SEPARATE
                pattern = FlowPattern(actors[a], actors[b], binding, actors[su], attr, tp)
                v = Violation(
                    kind=TRANSITIVITY,
                    context=schema.context_id,
                    attribute=attr,
                    transmission_principle=tp,
                    subject=su,
                    actors=(),
                    chain=tuple(Hop(names[p], names[q], tp or "*") for p, q in zip(path, path[1:])),
                    direct=Hop(a, b, tp or "*"),
                    pattern=pattern,
                )
                found.setdefault(v.key, v)
    return sort_violations(found.values())


def brute_force_oracle(
    approved: Sequence[Rule],
    schema: ContextSchema,
    prop: str,
    *,
    disapproved: Sequence[CandidateNorm] = (),
    k: int = 2,
    tp_match: str = TP_EXACT,
    max_actors: int = DEFAULT_MAX_ACTORS,
    space: ProfileSpace | None = None,
) -> list[Violation]:
    """Ground every profile as ``COPIES`` named actors and check ``prop`` by definition.

    ``prop`` is ``"semantic"`` or ``"transitivity"``.  Violations are compared
    with the symbolic checks by ``Violation.key``.
    """
    if prop not in (SEMANTIC, TRANSITIVITY):
        raise ValueError(f"unknown property {prop!r}")
    if tp_match not in (TP_EXACT, TP_IGNORE):
        raise ValueError(f"unknown tp_match policy {tp_match!r}")
    _check_rules(approved, schema)
    for norm in disapproved:
        _check_norm(norm, schema)
    space = space or ProfileSpace(schema, k)
    actors = _universe(space, max_actors)
    flows = ground_flows(approved, schema, actors)
    if prop == SEMANTIC:
        return oracle_semantic(approved, disapproved, schema, space, flows, actors)
    return oracle_transitivity(schema, flows, actors, tp_match)
