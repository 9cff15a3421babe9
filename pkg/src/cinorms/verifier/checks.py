"""Semantic-consistency and transitivity checks by exhaustive profile search."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from cinorms.errors import ValidationError
from cinorms.logic.engine import Model, evaluate
from cinorms.logic.terms import Atom, Const, DatalogProgram, Rule
from cinorms.normgen import CandidateNorm
from cinorms.schema import (
    SUBJECT_IN_ROLE,
    SUBJECT_IS_RECIPIENT,
    SUBJECT_IS_SENDER,
    ContextSchema,
)
from cinorms.verifier.profiles import ProfileSpace
from cinorms.verifier.shapes import RECIPIENT, SENDER, SUBJECT, RuleShape, World, rule_shapes, shape_holds

SEMANTIC = "semantic"
TRANSITIVITY = "transitivity"
TP_EXACT = "exact"
TP_IGNORE = "ignore"

BOUND_SENDER = "sender"
BOUND_RECIPIENT = "recipient"
SEPARATE = "separate"


class SchemaMismatchError(ValidationError):
    pass


def _sorted_roles(profile: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(profile))


@dataclass(frozen=True)
class FlowPattern:
    """A flow between profiled actors, abstracted from actor names."""

    sender_profile: frozenset
    recipient_profile: frozenset
    subject_binding: str
    subject_profile: frozenset
    attribute: str
    transmission_principle: str | None

    def key(self) -> tuple:
        return (
            _sorted_roles(self.sender_profile),
            _sorted_roles(self.recipient_profile),
            self.subject_binding,
            _sorted_roles(self.subject_profile),
            self.attribute,
            self.transmission_principle or "*",
        )


@dataclass(frozen=True)
class Hop:
    sender: str
    recipient: str
    transmission_principle: str
    rules: tuple[str, ...] = ()


@dataclass(frozen=True)
class Violation:
    """A property failure plus a concrete witness.

    ``chain`` holds the derivable hops: for a semantic violation one hop,
    the disapproved flow itself; for a transitivity violation two or more
    hops from ``direct.sender`` to ``direct.recipient``.  ``direct`` is the
    offending flow: derivable for semantic violations, underivable for
    transitivity violations.
    """

    kind: str
    context: str
    attribute: str
    transmission_principle: str | None
    subject: str
    actors: tuple[tuple[str, frozenset], ...]
    chain: tuple[Hop, ...]
    direct: Hop
    pattern: FlowPattern
    norm_id: str | None = None
    implicated: tuple[str, ...] = ()

    @property
    def key(self) -> tuple:
        if self.kind == SEMANTIC:
            return (SEMANTIC, self.norm_id or "")
        p = self.pattern
        if p.subject_binding == BOUND_SENDER:
            src = ("subject",)
        else:
            src = ("actor", _sorted_roles(p.sender_profile))
        if p.subject_binding == BOUND_RECIPIENT:
            dst = ("subject",)
        else:
            dst = ("actor", _sorted_roles(p.recipient_profile))
        return (TRANSITIVITY, p.attribute, p.transmission_principle or "*", _sorted_roles(p.subject_profile), src, dst)

    def profile_of(self, actor: str) -> frozenset:
        return dict(self.actors)[actor]

    def facts(self) -> list[Atom]:
        """``inrole`` facts instantiating the witness actors."""
        return [
            Atom.ground("inrole", (self.context, name, role))
            for name, prof in self.actors
            for role in sorted(prof)
        ]

    def hop_atom(self, hop: Hop) -> Atom:
        return Atom.ground(
            "allowed", (self.context, hop.sender, hop.recipient, self.subject, self.attribute, hop.transmission_principle)
        )


def _label(shape: RuleShape) -> str:
    return shape.label or f"rule{shape.index + 1}"


def _bystanders(space: ProfileSpace) -> dict[str, frozenset]:
    return {f"p{i}_{c}": p for i, p in enumerate(space.profiles) for c in range(3)}


def _check_rules(rules: Sequence[Rule], schema: ContextSchema) -> None:
    for rule in rules:
        if rule.head.pred != "allowed":
            continue
        args = rule.head.args
        if isinstance(args[0], Const) and args[0].value != schema.context_id:
            raise SchemaMismatchError(
                f"approved rule {rule.label or rule.head} is for context {args[0].value!r}, not {schema.context_id!r}"
            )
        if isinstance(args[4], Const) and args[4].value not in schema.attribute_ids:
            raise SchemaMismatchError(f"approved rule {rule.label or rule.head} uses unknown attribute {args[4].value!r}")
        if isinstance(args[5], Const) and args[5].value not in schema.tp_ids:
            raise SchemaMismatchError(
                f"approved rule {rule.label or rule.head} uses unknown transmission principle {args[5].value!r}"
            )


def _check_norm(norm: CandidateNorm, schema: ContextSchema) -> None:
    if norm.context != schema.context_id:
        raise SchemaMismatchError(f"norm {norm.norm_id} is for context {norm.context!r}, not {schema.context_id!r}")
    roles = set(schema.role_ids)
    for role in (norm.sender_role, norm.recipient_role, norm.subject_relation.role):
        if role is not None and role not in roles:
            raise SchemaMismatchError(f"norm {norm.norm_id} uses unknown role {role!r}")
    if norm.attribute not in schema.attribute_ids or norm.transmission_principle not in schema.tp_ids:
        raise SchemaMismatchError(f"norm {norm.norm_id} uses vocabulary outside the schema")


# -- semantic consistency -------------------------------------------------

def _binding(norm: CandidateNorm):
    """Actor ids per slot plus per-actor role requirements for a norm's flow."""
    rel = norm.subject_relation
    need = {"sender": {norm.sender_role}, "recipient": {norm.recipient_role}}
    if rel.kind == SUBJECT_IS_RECIPIENT:
        su = "recipient"
    elif rel.kind == SUBJECT_IS_SENDER:
        su = "sender"
    else:
        su = "subject"
        need["subject"] = {rel.role} if rel.kind == SUBJECT_IN_ROLE else set()
    slots = {SENDER: "sender", RECIPIENT: "recipient", SUBJECT: su}
    return slots, need


def _fast_witness(shape: RuleShape, slots, need, space: ProfileSpace):
    for group in shape.same:
        if len({slots[g] for g in group}) > 1:
            return None
    req = {actor: set(roles) for actor, roles in need.items()}
    for slot in (SENDER, RECIPIENT, SUBJECT):
        req[slots[slot]] |= shape.roles_for(slot)
    chosen = {}
    for actor, roles in req.items():
        prof = space.smallest_containing(roles)
        if prof is None:
            return None
        chosen[actor] = prof
    return chosen


def _generic_witness(shape: RuleShape, flow, need, space: ProfileSpace, bystanders):
    actors = sorted(need)
    for combo in itertools.product(*(space.containing(need[a]) for a in actors)):
        profiles = dict(zip(actors, combo))
        world = World(space.schema, profiles, bystanders)
        if shape_holds(shape, flow, profiles, world):
            return profiles
    return None


def check_semantic_consistency(
    approved: Sequence[Rule],
    disapproved: Sequence[CandidateNorm],
    schema: ContextSchema,
    k: int = 2,
    *,
    space: ProfileSpace | None = None,
) -> list[Violation]:
    """Disapproved norms whose flow some profile assignment makes derivable."""
    _check_rules(approved, schema)
    for norm in disapproved:
        _check_norm(norm, schema)
    space = space or ProfileSpace(schema, k)
    _, shapes = rule_shapes(approved, schema.context_id)
    bystanders = _bystanders(space) if any(s.generic for s in shapes) else {}
    ctx = schema.context_id
    found = []
    for norm in disapproved:
        slots, need = _binding(norm)
        flow = (ctx, slots[SENDER], slots[RECIPIENT], slots[SUBJECT], norm.attribute, norm.transmission_principle)
        witness = None
        for shape in shapes:
            if not shape.applies_to(norm.attribute, norm.transmission_principle):
                continue
            if shape.generic:
                witness = _generic_witness(shape, flow, need, space, bystanders)
            else:
                witness = _fast_witness(shape, slots, need, space)
            if witness is not None:
                break
        if witness is None:
            continue
        world = World(schema, witness, bystanders) if bystanders else None
        implicated = tuple(sorted({_label(s) for s in shapes if s.satisfiable and shape_holds(s, flow, witness, world)}))
        hop = Hop(flow[1], flow[2], norm.transmission_principle, implicated)
        su_binding = {"sender": BOUND_SENDER, "recipient": BOUND_RECIPIENT}.get(slots[SUBJECT], SEPARATE)
        pattern = FlowPattern(
            witness["sender"], witness["recipient"], su_binding, witness[slots[SUBJECT]],
            norm.attribute, norm.transmission_principle,
        )
        found.append(
            Violation(
                kind=SEMANTIC,
                context=ctx,
                attribute=norm.attribute,
                transmission_principle=norm.transmission_principle,
                subject=slots[SUBJECT],
                actors=tuple(sorted(witness.items())),
                chain=(hop,),
                direct=hop,
                pattern=pattern,
                norm_id=norm.norm_id,
                implicated=implicated,
            )
        )
    return sort_violations(found)


# -- transitivity ---------------------------------------------------------

def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _edges_for(shapes: Sequence[RuleShape], attr: str, tp: str, u: int, space: ProfileSpace, bystanders) -> list[int]:
    """Adjacency bitmasks over abstract nodes for subject profile ``u``.

    Node ``i < n`` stands for a non-subject actor with profile ``i``; node ``n``
    is the subject itself.
    """
    n = len(space)
    subj = space.profiles[u]
    adj = [0] * (n + 1)
    sbit = 1 << n
    for shape in shapes:
        if not shape.applies_to(attr, tp):
            continue
        if shape.generic:
            _generic_edges(shape, attr, tp, u, space, bystanders, adj)
            continue
        if shape.same_actor(SENDER, RECIPIENT):
            continue
        su_r, su_s = shape.same_actor(SUBJECT, RECIPIENT), shape.same_actor(SUBJECT, SENDER)
        ms = space.mask_containing(shape.roles_for(SENDER))
        mr = space.mask_containing(shape.roles_for(RECIPIENT))
        need_su = shape.roles_for(SUBJECT)
        if not su_r and not su_s and need_su <= subj:
            for i in _bits(ms):
                adj[i] |= mr
        if not su_s and (shape.roles_for(RECIPIENT) | need_su) <= subj:
            for i in _bits(ms):
                adj[i] |= sbit
        if not su_r and (shape.roles_for(SENDER) | need_su) <= subj:
            adj[n] |= mr
    return adj


def _generic_edges(shape, attr, tp, u, space: ProfileSpace, bystanders, adj) -> None:
    n = len(space)
    ctx = space.schema.context_id
    for x in range(n + 1):
        for y in range(n + 1):
            if x == n and y == n:
                continue
            profiles = {"subject": space.profiles[u]}
            s = "subject" if x == n else "a"
            r = "subject" if y == n else "b"
            if x < n:
                profiles["a"] = space.profiles[x]
            if y < n:
                profiles["b"] = space.profiles[y]
            flow = (ctx, s, r, "subject", attr, tp)
            if shape_holds(shape, flow, profiles, World(space.schema, profiles, bystanders)):
                adj[x] |= 1 << y


def _closure(adj: Sequence[int]) -> list[int]:
    reach = list(adj)
    for k in range(len(reach)):
        bit = 1 << k
        rk = reach[k]
        for i in range(len(reach)):
            if reach[i] & bit:
                reach[i] |= rk
    return reach


def _shortest_chain(adj: Sequence[int], src: int, dst: int) -> list[int]:
    prev: dict[int, int] = {}
    queue = deque()
    for y in _bits(adj[src]):
        if y not in prev:
            prev[y] = src
            queue.append(y)
    while queue:
        node = queue.popleft()
        if node == dst:
            break
        for y in _bits(adj[node]):
            if y not in prev:
                prev[y] = node
                queue.append(y)
    path = [dst]
    while True:
        p = prev[path[-1]]
        path.append(p)
        if p == src and len(path) > 1:
            break
    return path[::-1]


def check_transitivity(
    approved: Sequence[Rule],
    schema: ContextSchema,
    k: int = 2,
    *,
    tp_match: str = TP_EXACT,
    space: ProfileSpace | None = None,
) -> list[Violation]:
    """Composite flows reachable through permitted hops but not permitted directly.

    The subject is fixed along a chain.  With ``tp_match="exact"`` every hop
    and the direct flow share one transmission principle; with ``"ignore"``
    hops may use any principle and any principle suffices for the direct flow.
    """
    if tp_match not in (TP_EXACT, TP_IGNORE):
        raise ValueError(f"unknown tp_match policy {tp_match!r}")
    _check_rules(approved, schema)
    space = space or ProfileSpace(schema, k)
    _, shapes = rule_shapes(approved, schema.context_id)
    shapes = [s for s in shapes if s.satisfiable]
    bystanders = _bystanders(space) if any(s.generic for s in shapes) else {}
    n = len(space)
    ctx = schema.context_id
    found: list[Violation] = []
    for attr in schema.attribute_ids:
        relevant = [s for s in shapes if s.generic or s.attribute == attr]
        if not relevant:
            continue
        groups = [(tp,) for tp in schema.tp_ids] if tp_match == TP_EXACT else [schema.tp_ids]
        for tps in groups:
            if not any(s.applies_to(attr, t) for s in relevant for t in tps):
                continue
            for u in range(n):
                per_tp = {t: _edges_for(relevant, attr, t, u, space, bystanders) for t in tps}
                adj = [0] * (n + 1)
                for edges in per_tp.values():
                    adj = [a | b for a, b in zip(adj, edges)]
                reach = _closure(adj)
                for x in range(n + 1):
                    missing = reach[x] & ~adj[x]
                    if x == n:
                        missing &= ~(1 << n)
                    for z in _bits(missing):
                        path = _shortest_chain(adj, x, z)
                        found.append(
                            _transitivity_violation(
                                ctx, attr, None if tp_match == TP_IGNORE else tps[0],
                                u, path, per_tp, tps, relevant, space, bystanders,
                            )
                        )
    return sort_violations(found)


def _transitivity_violation(ctx, attr, tp, u, path, per_tp, tps, shapes, space: ProfileSpace, bystanders) -> Violation:
    n = len(space)
    names, actors, counter = [], {"subject": space.profiles[u]}, itertools.count(1)
    for node in path:
        if node == n:
            names.append("subject")
        else:
            name = f"actor{next(counter)}"
            names.append(name)
            actors[name] = space.profiles[node]
    world = World(space.schema, actors, bystanders) if bystanders else None
    hops = []
    for (a, b), (na, nb) in zip(zip(path, path[1:]), zip(names, names[1:])):
        hop_tp = next(t for t in tps if per_tp[t][a] >> b & 1)
        flow = (ctx, na, nb, "subject", attr, hop_tp)
        labels = tuple(sorted({_label(s) for s in shapes if shape_holds(s, flow, actors, world)}))
        hops.append(Hop(na, nb, hop_tp, labels))
    src, dst = path[0], path[-1]
    binding = BOUND_SENDER if src == n else BOUND_RECIPIENT if dst == n else SEPARATE
    pattern = FlowPattern(
        space.profiles[u] if src == n else space.profiles[src],
        space.profiles[u] if dst == n else space.profiles[dst],
        binding,
        space.profiles[u],
        attr,
        tp,
    )
    implicated = tuple(sorted({label for h in hops for label in h.rules}))
    return Violation(
        kind=TRANSITIVITY,
        context=ctx,
        attribute=attr,
        transmission_principle=tp,
        subject="subject",
        actors=tuple(sorted(actors.items())),
        chain=tuple(hops),
        direct=Hop(names[0], names[-1], tp or "*"),
        pattern=pattern,
        implicated=implicated,
    )


# -- ordering and replay --------------------------------------------------

def sort_violations(items: Iterable[Violation]) -> list[Violation]:
    return sorted(items, key=lambda v: v.key)


def replay(violation: Violation, approved: Sequence[Rule], model: Model | None = None) -> bool:
    """Re-derive the witness with the Datalog engine; true iff it still shows the violation."""
    if model is None:
        program = DatalogProgram(tuple(violation.facts()), tuple(approved))
        model = evaluate(program)
    if violation.kind == SEMANTIC:
        return violation.hop_atom(violation.direct) in model
    if not all(violation.hop_atom(h) in model for h in violation.chain):
        return False
    d = violation.direct
    if violation.transmission_principle is not None:
        return violation.hop_atom(d) not in model
    return not any(
        row[1] == d.sender and row[2] == d.recipient and row[3] == violation.subject and row[4] == violation.attribute
        for row in model.relation("allowed")
    )
