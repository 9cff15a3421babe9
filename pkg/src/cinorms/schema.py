"""Context vocabularies and the role ontology.

A schema document is JSON with the keys ``context``, ``roles``,
``attributes``, ``transmission_principles``, ``sender_roles``,
``recipient_roles``, ``subject_relations`` and ``ontology`` (with
``implications`` and ``disjoint``).  See ``README.md`` for the full format.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field, replace
from typing import Iterable

from cinorms.errors import ParseError, ValidationError

IDENT_RE = re.compile(r"^[a-z][a-z0-9_]*$")

SUBJECT_IS_RECIPIENT = "subject_is_recipient"
SUBJECT_IS_SENDER = "subject_is_sender"
SUBJECT_IN_ROLE = "subject_in_role"
UNCONSTRAINED = "unconstrained"

_SUBJECT_RE = re.compile(r"^subject_in_role\(\s*([a-z][a-z0-9_]*)\s*\)$")


class SchemaError(ValidationError):
    pass


@dataclass(frozen=True)
class VocabItem:
    id: str
    text: str


@dataclass(frozen=True)
class TransmissionPrinciple:
    """A transmission principle with its question fragment.

    ``text`` may contain ``{sender}``, ``{recipient}`` and ``{subject}``
    placeholders.  ``control`` names the control fact that must be published
    before a flow under this principle becomes visible (only ``"consent"`` is
    understood by the information space).
    """

    id: str
    text: str | None
    control: str | None = None


@dataclass(frozen=True, order=True)
class SubjectRelation:
    kind: str
    role: str | None = None

    @classmethod
    def parse(cls, text: str) -> SubjectRelation:
        text = text.strip()
        if text in (SUBJECT_IS_RECIPIENT, SUBJECT_IS_SENDER, UNCONSTRAINED):
            return cls(text)
        m = _SUBJECT_RE.match(text)
        if m:
            return cls(SUBJECT_IN_ROLE, m.group(1))
        raise SchemaError(f"unknown subject relation {text!r}")

    def __str__(self) -> str:
        if self.kind == SUBJECT_IN_ROLE:
            return f"{SUBJECT_IN_ROLE}({self.role})"
        return self.kind


@dataclass(frozen=True)
class RoleOntology:
    """Directed role implications plus disjointness over a fixed role set."""

    roles: tuple[str, ...] = ()
    implications: frozenset[tuple[str, str]] = frozenset()
    disjoint_pairs: frozenset[frozenset[str]] = frozenset()
    _supers: dict = field(default=None, compare=False, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        supers: dict[str, set[str]] = {}
        for sub, sup in self.implications:
            supers.setdefault(sub, set()).add(sup)
        object.__setattr__(self, "_supers", supers)

    def closure(self, base: Iterable[str]) -> frozenset[str]:
        result = set(base)
        if self.roles:
            unknown = result.difference(self.roles)
            if unknown:
                raise SchemaError(f"unknown role(s): {', '.join(sorted(unknown))}")
        stack = list(result)
        while stack:
            role = stack.pop()
            for sup in self._supers.get(role, ()):
                if sup not in result:
                    result.add(sup)
                    stack.append(sup)
        return frozenset(result)

    def conflicts(self, roles: Iterable[str]) -> list[tuple[str, str]]:
        roles = set(roles)
        found = []
        for pair in self.disjoint_pairs:
            a, b = sorted(pair)
            if a in roles and b in roles:
                found.append((a, b))
        return sorted(found)

    def consistent(self, roles: Iterable[str]) -> bool:
        roles = frozenset(roles)
        return self.closure(roles) == roles and not self.conflicts(roles)


def role_closure(ontology: RoleOntology, base: Iterable[str]) -> frozenset[str]:
    """Smallest superset of ``base`` closed under the implications."""
    return ontology.closure(base)


def profile_consistent(ontology: RoleOntology, roles: Iterable[str]) -> bool:
    """True iff ``roles`` is implication-closed and has no disjoint pair."""
    return ontology.consistent(roles)


@dataclass(frozen=True)
class ContextSchema:
    context_id: str
    roles: tuple[VocabItem, ...]
    attributes: tuple[VocabItem, ...]
    transmission_principles: tuple[TransmissionPrinciple, ...]
    sender_roles: tuple[str, ...]
    recipient_roles: tuple[str, ...]
    subject_relations: tuple[SubjectRelation, ...]
    ontology: RoleOntology

    @property
    def role_ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.roles)

    @property
    def attribute_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.attributes)

    @property
    def tp_ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.transmission_principles)

    def role_text(self, role: str) -> str:
        return _lookup(self.roles, role, "role").text

    def attribute_text(self, attribute: str) -> str:
        return _lookup(self.attributes, attribute, "attribute").text

    def tp(self, tp_id: str) -> TransmissionPrinciple:
        return _lookup(self.transmission_principles, tp_id, "transmission principle")

    def role_closure(self, base: Iterable[str]) -> frozenset[str]:
        return self.ontology.closure(base)


def _lookup(items, key, what):
    for item in items:
        if item.id == key:
            return item
    raise SchemaError(f"unknown {what} {key!r}")


def _vocab(raw, key) -> tuple[VocabItem, ...]:
    if not isinstance(raw, list):
        raise SchemaError(f"{key!r} must be a list")
    items = []
    for entry in raw:
        if isinstance(entry, str):
            items.append(VocabItem(entry, entry.replace("_", " ")))
        elif isinstance(entry, dict) and "id" in entry:
            items.append(VocabItem(entry["id"], entry.get("text", entry["id"].replace("_", " "))))
        else:
            raise SchemaError(f"bad entry in {key!r}: {entry!r}")
    return tuple(items)


def _check_ids(ids: Iterable[str], what: str) -> None:
    seen = set()
    for ident in ids:
        if not isinstance(ident, str) or not IDENT_RE.match(ident):
            raise SchemaError(f"{what} identifier {ident!r} is not a lowercase token")
        if ident in seen:
            raise SchemaError(f"duplicate {what} identifier {ident!r}")
        seen.add(ident)


def _find_cycle(roles: tuple[str, ...], implications) -> list[str] | None:
    succ: dict[str, list[str]] = {r: [] for r in roles}
    for sub, sup in sorted(implications):
        succ[sub].append(sup)
    state: dict[str, int] = {}
    path: list[str] = []

    def visit(node):
        state[node] = 1
        path.append(node)
        for nxt in succ[node]:
            if state.get(nxt) == 1:
                return path[path.index(nxt):] + [nxt]
            if nxt not in state:
                found = visit(nxt)
                if found:
                    return found
        state[node] = 2
        path.pop()
        return None

    for role in roles:
        if role not in state:
            found = visit(role)
            if found:
                return found
    return None


def build_ontology(roles: tuple[str, ...], implications, disjoint) -> RoleOntology:
    """Validate and assemble a :class:`RoleOntology`.

    ``disjoint`` entries are lists of two or more roles that are pairwise
    disjoint.
    """
    role_set = set(roles)
    pairs = set()
    for entry in implications:
        if len(entry) != 2:
            raise SchemaError(f"implication must be a [subrole, superrole] pair: {entry!r}")
        sub, sup = entry
        for r in (sub, sup):
            if r not in role_set:
                raise SchemaError(f"unknown role {r!r} in ontology implication")
        pairs.add((sub, sup))
    disjoint_pairs = set()
    for group in disjoint:
        if len(group) < 2:
            raise SchemaError(f"disjointness needs at least two roles: {group!r}")
        for r in group:
            if r not in role_set:
                raise SchemaError(f"unknown role {r!r} in ontology disjointness")
        for a, b in itertools.combinations(group, 2):
            if a == b:
                raise SchemaError(f"role {a!r} declared disjoint from itself")
            disjoint_pairs.add(frozenset((a, b)))
    cycle = _find_cycle(roles, pairs)
    if cycle:
        raise SchemaError("cyclic role implication: " + " -> ".join(cycle))
    ontology = RoleOntology(roles, frozenset(pairs), frozenset(disjoint_pairs))
    for role in roles:
        clash = ontology.conflicts(ontology.closure([role]))
        if clash:
            a, b = clash[0]
            raise SchemaError(
                f"contradictory ontology: role {role!r} implies both disjoint roles {a!r} and {b!r}"
            )
    return ontology


def schema_from_dict(doc: dict) -> ContextSchema:
    if not isinstance(doc, dict):
        raise SchemaError("schema document must be a JSON object")
    required = ("context", "roles", "attributes", "transmission_principles")
    for key in required:
        if key not in doc:
            raise SchemaError(f"schema is missing key {key!r}")
    context = doc["context"]
    _check_ids([context], "context")
    roles = _vocab(doc["roles"], "roles")
    attributes = _vocab(doc["attributes"], "attributes")
    role_ids = tuple(r.id for r in roles)
    _check_ids(role_ids, "role")
    _check_ids([a.id for a in attributes], "attribute")

    tps = []
    for entry in doc["transmission_principles"]:
        if not isinstance(entry, dict) or "id" not in entry:
            raise SchemaError(f"transmission principle must be an object with 'id': {entry!r}")
        if "text" not in entry or not isinstance(entry["text"], str):
            raise SchemaError(f"transmission principle {entry['id']!r} has no rendering text")
        control = entry.get("control")
        if control is not None and control != "consent":
            raise SchemaError(f"unsupported control fact {control!r} on {entry['id']!r}")
        tps.append(TransmissionPrinciple(entry["id"], entry["text"], control))
    _check_ids([t.id for t in tps], "transmission principle")

    senders = tuple(doc.get("sender_roles", role_ids))
    recipients = tuple(doc.get("recipient_roles", role_ids))
    for what, subset in (("sender", senders), ("recipient", recipients)):
        _check_ids(subset, f"{what} role")
        for r in subset:
            if r not in role_ids:
                raise SchemaError(f"{what} role {r!r} is not a declared role")

    relations = tuple(
        SubjectRelation.parse(s) for s in doc.get("subject_relations", [SUBJECT_IS_RECIPIENT])
    )
    if len(set(relations)) != len(relations):
        raise SchemaError("duplicate subject relation")
    for rel in relations:
        if rel.role is not None and rel.role not in role_ids:
            raise SchemaError(f"subject relation references unknown role {rel.role!r}")

    onto = doc.get("ontology", {}) or {}
    ontology = build_ontology(role_ids, onto.get("implications", []), onto.get("disjoint", []))
    return ContextSchema(
        context_id=context,
        roles=roles,
        attributes=attributes,
        transmission_principles=tuple(tps),
        sender_roles=senders,
        recipient_roles=recipients,
        subject_relations=relations,
        ontology=ontology,
    )


def load_schema(source_text: str) -> ContextSchema:
    """Parse and validate a schema document."""
    try:
        doc = json.loads(source_text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"schema is not valid JSON: {exc}") from exc
    return schema_from_dict(doc)


def with_ontology(schema: ContextSchema, implications=(), disjoint=()) -> ContextSchema:
    """Copy of ``schema`` with a replacement ontology."""
    return replace(schema, ontology=build_ontology(schema.role_ids, implications, disjoint))
