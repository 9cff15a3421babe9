"""Normal forms of approved rule bodies over role profiles.

A compiled norm constrains a flow only through constants on the context,
attribute and TP positions, identities among the sender, recipient and
subject, and role memberships of those three actors.  ``RuleShape`` records
exactly that, so a rule can be tested against profiles without grounding.
Bodies outside this pattern are marked ``generic`` and evaluated over a small
finite structure instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from cinorms.logic.formula import Completion, Disjunct, evaluate_formula, iff_completion
from cinorms.logic.terms import Atom, Const, Equality, Rule, Var
from cinorms.schema import ContextSchema

CTX, SENDER, RECIPIENT, SUBJECT, ATTR, TP = range(6)
ACTOR_SLOTS = (SENDER, RECIPIENT, SUBJECT)


@dataclass(frozen=True)
class RuleShape:
    index: int
    label: str | None
    disjunct: Disjunct
    satisfiable: bool = True
    generic: bool = False
    attribute: str | None = None
    tp: str | None = None
    # groups of actor slots forced to denote the same actor
    same: frozenset[frozenset[int]] = frozenset()
    # required roles for sender, recipient, subject
    req: tuple[frozenset[str], frozenset[str], frozenset[str]] = (frozenset(), frozenset(), frozenset())

    def same_actor(self, a: int, b: int) -> bool:
        return any(a in g and b in g for g in self.same)

    def roles_for(self, slot: int) -> frozenset[str]:
        return self.req[slot - 1]

    def applies_to(self, attribute: str, tp: str) -> bool:
        return self.satisfiable and (self.generic or (self.attribute == attribute and self.tp == tp))


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _key(t):
    return ("c", t.value) if isinstance(t, Const) else ("v", t.name)


def shape_of(disjunct: Disjunct, index: int, head_vars: Sequence[Var], context: str) -> RuleShape:
    uf = _UnionFind()
    for v in head_vars:
        uf.find(_key(v))
    atoms = [lit for lit in disjunct.literals if isinstance(lit, Atom)]
    for lit in disjunct.literals:
        if isinstance(lit, Equality):
            uf.union(_key(lit.left), _key(lit.right))
        else:
            for a in lit.args:
                uf.find(_key(a))
    consts: dict = {}
    for node in list(uf.parent):
        if node[0] == "c":
            consts.setdefault(uf.find(node), set()).add(node[1])
    slots: dict = {}
    for i, v in enumerate(head_vars):
        slots.setdefault(uf.find(_key(v)), set()).add(i)

    def make(**kw) -> RuleShape:
        return RuleShape(index, disjunct.label, disjunct, **kw)

    if any(len(vals) > 1 for vals in consts.values()):
        return make(satisfiable=False)

    def const_of(root):
        vals = consts.get(root)
        return next(iter(vals)) if vals else None

    generic = False
    fixed: dict[int, str] = {}
    for root, members in slots.items():
        value = const_of(root)
        actors = members & set(ACTOR_SLOTS)
        others = members - actors
        if actors and (others or value is not None):
            generic = True
        if value is not None:
            for slot in others:
                fixed[slot] = value
        elif others - {CTX}:
            generic = True
    if fixed.get(CTX, context) != context:
        return make(satisfiable=False)

    occurrences: dict = {}
    for atom in atoms:
        for a in atom.args:
            root = uf.find(_key(a))
            occurrences[root] = occurrences.get(root, 0) + 1

    req = {s: set() for s in ACTOR_SLOTS}
    for atom in atoms:
        if atom.pred != "inrole" or atom.arity != 3:
            generic = True
            continue
        c, a, r = (uf.find(_key(t)) for t in atom.args)
        ctx_value = const_of(c)
        if ctx_value is not None:
            if ctx_value != context:
                return make(satisfiable=False)
        elif CTX not in slots.get(c, ()):
            generic = True
        actor_slots = slots.get(a, set()) & set(ACTOR_SLOTS)
        if not actor_slots or const_of(a) is not None:
            generic = True
            continue
        role = const_of(r)
        if role is not None:
            for s in actor_slots:
                req[s].add(role)
        elif r in slots or occurrences.get(r, 0) > 1:
            generic = True
        # otherwise "holds some role", which every profile satisfies

    same = frozenset(
        frozenset(m & set(ACTOR_SLOTS))
        for m in slots.values()
        if len(m & set(ACTOR_SLOTS)) > 1
    )
    return make(
        generic=generic,
        attribute=fixed.get(ATTR),
        tp=fixed.get(TP),
        same=same,
        req=tuple(frozenset(req[s]) for s in ACTOR_SLOTS),
    )


def rule_shapes(rules: Sequence[Rule], context: str) -> tuple[Completion, list[RuleShape]]:
    allowed_rules = [r for r in rules if r.head.pred == "allowed"]
    completion = iff_completion(allowed_rules, "allowed", 6)
    shapes = [
        shape_of(d, i, completion.head_vars, context) for i, d in enumerate(completion.disjuncts)
    ]
    return completion, shapes


class World:
    """A finite structure: named actors with profiles plus optional bystanders."""

    def __init__(self, schema: ContextSchema, actors: Mapping[str, frozenset], bystanders: Mapping[str, frozenset] = {}):
        self.schema = schema
        self.actors = dict(actors)
        self.actors.update(bystanders)
        ctx = schema.context_id
        self.relations = {
            "inrole": {(ctx, name, role) for name, prof in self.actors.items() for role in prof}
        }
        self.base_domain = sorted(set(self.actors) | set(schema.role_ids) | {ctx})

    def holds(self, shape: RuleShape, flow: tuple[str, ...]) -> bool:
        if not shape.satisfiable:
            return False
        consts = {
            a.value
            for lit in shape.disjunct.literals
            for a in (lit.args if isinstance(lit, Atom) else (lit.left, lit.right))
            if isinstance(a, Const)
        }
        domain = sorted(set(self.base_domain) | consts | set(flow))
        names = ("C", "Sn", "R", "Su", "A", "T")
        return evaluate_formula(shape.disjunct.formula(), self.relations, domain, dict(zip(names, flow)))


def shape_holds(
    shape: RuleShape,
    flow: tuple[str, ...],
    profiles: Mapping[str, frozenset],
    world: World | None = None,
) -> bool:
    """Does ``shape`` derive ``allowed(flow)`` when actors hold ``profiles``?"""
    if not shape.satisfiable:
        return False
    if shape.generic:
        if world is None:
            raise ValueError("a generic rule body needs a World to evaluate against")
        return world.holds(shape, flow)
    _, s, r, su, attr, tp = flow
    if shape.attribute != attr or shape.tp != tp:
        return False
    actor = {SENDER: s, RECIPIENT: r, SUBJECT: su}
    for group in shape.same:
        if len({actor[g] for g in group}) > 1:
            return False
    for slot in ACTOR_SLOTS:
        need = shape.roles_for(slot)
        if need and not need <= profiles.get(actor[slot], frozenset()):
            return False
    return True
