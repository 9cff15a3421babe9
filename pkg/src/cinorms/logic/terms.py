"""Terms, atoms, rules and programs of the restricted Datalog fragment."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

# Predicates whose arity is fixed by the CI encoding.
KNOWN_ARITIES = {
    "inrole": 3,
    "allowed": 6,
    "post": 6,
    "canView": 3,
    "consent": 3,
}

# Intensional references permitted inside rule bodies: head predicate -> body predicates.
LAYERED_REFERENCES = {"canView": frozenset({"allowed"})}

_BARE_CONST_RE = re.compile(r"^(?:[a-z][A-Za-z0-9_]*|-?[0-9]+)$")


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Const:
    value: str

    def __str__(self) -> str:
        return format_constant(self.value)


Term = Union[Var, Const]


def format_constant(value: str) -> str:
    if _BARE_CONST_RE.match(value):
        return value
    escaped = value.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def term(token) -> Term:
    """Build a term from a Prolog-style token: capitalised or ``_`` means variable."""
    if isinstance(token, (Var, Const)):
        return token
    token = str(token)
    if token[:1].isupper() or token[:1] == "_":
        return Var(token)
    return Const(token)


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...]

    @classmethod
    def of(cls, pred: str, *args) -> Atom:
        return cls(pred, tuple(term(a) for a in args))

    @classmethod
    def ground(cls, pred: str, values: Iterable[str]) -> Atom:
        return cls(pred, tuple(Const(v) for v in values))

    @property
    def arity(self) -> int:
        return len(self.args)

    def is_ground(self) -> bool:
        return all(isinstance(a, Const) for a in self.args)

    def variables(self) -> list[Var]:
        return [a for a in self.args if isinstance(a, Var)]

    def values(self) -> tuple[str, ...]:
        return tuple(a.value for a in self.args)  # type: ignore[union-attr]

    def __str__(self) -> str:
        return f"{self.pred}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Equality:
    left: Term
    right: Term

    def variables(self) -> list[Var]:
        return [t for t in (self.left, self.right) if isinstance(t, Var)]

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


Literal = Union[Atom, Equality]


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[Literal, ...]
    label: str | None = field(default=None, compare=False)

    def atoms(self) -> list[Atom]:
        return [lit for lit in self.body if isinstance(lit, Atom)]

    def equalities(self) -> list[Equality]:
        return [lit for lit in self.body if isinstance(lit, Equality)]

    def __str__(self) -> str:
        return f"{self.head} :- {', '.join(str(b) for b in self.body)}."


@dataclass(frozen=True)
class DatalogProgram:
    facts: tuple[Atom, ...] = ()
    rules: tuple[Rule, ...] = ()
    queries: tuple[tuple[Literal, ...], ...] = ()

    def with_facts(self, facts: Iterable[Atom]) -> DatalogProgram:
        return DatalogProgram(self.facts + tuple(facts), self.rules, self.queries)

    def with_rules(self, rules: Iterable[Rule]) -> DatalogProgram:
        return DatalogProgram(self.facts, self.rules + tuple(rules), self.queries)

    def intensional(self) -> set[str]:
        return {r.head.pred for r in self.rules}

    def predicates(self) -> dict[str, int]:
        found: dict[str, int] = {}
        for fact in self.facts:
            found.setdefault(fact.pred, fact.arity)
        for rule in self.rules:
            found.setdefault(rule.head.pred, rule.head.arity)
            for atom in rule.atoms():
                found.setdefault(atom.pred, atom.arity)
        return found


def format_program(program: DatalogProgram) -> str:
    """Canonical text: facts, then rules (one body literal per line), then queries."""
    lines = [f"{fact}." for fact in program.facts]
    if program.facts and program.rules:
        lines.append("")
    for i, rule in enumerate(program.rules):
        if i:
            lines.append("")
        lines.append(format_rule(rule))
    if program.queries:
        lines.append("")
        for goal in program.queries:
            lines.append(f"?- {', '.join(str(g) for g in goal)}.")
    return "\n".join(lines) + "\n" if lines else ""


def format_rule(rule: Rule) -> str:
    out = []
    if rule.label:
        out.append(f"% @label {rule.label}")
    if not rule.body:
        out.append(f"{rule.head}.")
        return "\n".join(out)
    out.append(f"{rule.head} :-")
    body = [f"  {lit}" for lit in rule.body]
    out.append(",\n".join(body) + ".")
    return "\n".join(out)
