"""First-order formulas over the Datalog vocabulary and the iff-completion."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from cinorms.errors import ValidationError
from cinorms.logic.terms import KNOWN_ARITIES, Atom, Const, Equality, Rule, Var


@dataclass(frozen=True)
class Truth:
    value: bool


TRUE = Truth(True)
FALSE = Truth(False)


@dataclass(frozen=True)
class Not:
    arg: Formula


@dataclass(frozen=True)
class And:
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or:
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Implies:
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Iff:
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Forall:
    vars: tuple[Var, ...]
    body: Formula


@dataclass(frozen=True)
class Exists:
    vars: tuple[Var, ...]
    body: Formula


Formula = Union[Truth, Atom, Equality, Not, And, Or, Implies, Iff, Forall, Exists]


def conj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    if not items:
        return TRUE
    return items[0] if len(items) == 1 else And(items)


def disj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    if not items:
        return FALSE
    return items[0] if len(items) == 1 else Or(items)


def forall(vars: Sequence[Var], body: Formula) -> Formula:
    return Forall(tuple(vars), body) if vars else body


def exists(vars: Sequence[Var], body: Formula) -> Formula:
    return Exists(tuple(vars), body) if vars else body


def neq(a, b) -> Formula:
    return Not(Equality(a, b))


# -- pretty printing -------------------------------------------------------

def _wrap(f: Formula) -> str:
    text = pretty(f)
    if isinstance(f, (And, Or, Implies, Iff, Forall, Exists)):
        return f"({text})"
    return text


def pretty(f: Formula) -> str:
    if isinstance(f, Truth):
        return "true" if f.value else "false"
    if isinstance(f, (Atom, Equality)):
        return str(f)
    if isinstance(f, Not):
        if isinstance(f.arg, Equality):
            return f"{f.arg.left} != {f.arg.right}"
        return f"~{_wrap(f.arg)}"
    if isinstance(f, And):
        return " & ".join(_wrap(a) for a in f.args)
    if isinstance(f, Or):
        return " | ".join(_wrap(a) for a in f.args)
    if isinstance(f, Implies):
        return f"{_wrap(f.lhs)} => {_wrap(f.rhs)}"
    if isinstance(f, Iff):
        return f"{_wrap(f.lhs)} <=> {_wrap(f.rhs)}"
    if isinstance(f, Forall):
        return f"forall {', '.join(v.name for v in f.vars)}. {pretty(f.body)}"
    if isinstance(f, Exists):
        return f"exists {', '.join(v.name for v in f.vars)}. {pretty(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


# -- completion ------------------------------------------------------------

HEAD_NAMES = {
    "allowed": ("C", "Sn", "R", "Su", "A", "T"),
    "canView": ("C", "V", "P"),
}


def head_variables(pred: str, arity: int) -> tuple[Var, ...]:
    names = HEAD_NAMES.get(pred)
    if names is None or len(names) != arity:
        names = tuple(f"X{i + 1}" for i in range(arity))
    return tuple(Var(n) for n in names)


@dataclass(frozen=True)
class Disjunct:
    """One rule body renamed onto the standard head variables."""

    evars: tuple[Var, ...]
    literals: tuple[Atom | Equality, ...]
    label: str | None = None

    def formula(self) -> Formula:
        return exists(self.evars, conj(self.literals))


@dataclass(frozen=True)
class Completion:
    pred: str
    head_vars: tuple[Var, ...]
    disjuncts: tuple[Disjunct, ...]

    @property
    def head(self) -> Atom:
        return Atom(self.pred, self.head_vars)

    def formula(self) -> Formula:
        body = disj(d.formula() for d in self.disjuncts)
        return forall(self.head_vars, Iff(self.head, body))

    def pretty(self) -> str:
        return pretty(self.formula())


def _rename(term, mapping):
    return mapping[term] if isinstance(term, Var) else term


def _standardize(rule: Rule, head_vars: tuple[Var, ...]) -> Disjunct:
    mapping: dict[Var, Var] = {}
    head_eqs: list[Equality] = []
    for hv, arg in zip(head_vars, rule.head.args):
        if isinstance(arg, Const):
            head_eqs.append(Equality(hv, arg))
        elif arg in mapping:
            head_eqs.append(Equality(hv, mapping[arg]))
        else:
            mapping[arg] = hv
    taken = {v.name for v in head_vars}
    evars: list[Var] = []
    counter = itertools.count(1)
    for lit in rule.body:
        for v in lit.variables():
            if v not in mapping:
                name = f"E{next(counter)}"
                while name in taken:
                    name = f"E{next(counter)}"
                mapping[v] = Var(name)
                evars.append(mapping[v])
    literals: list[Atom | Equality] = []
    for lit in rule.body:
        if isinstance(lit, Atom):
            literals.append(Atom(lit.pred, tuple(_rename(a, mapping) for a in lit.args)))
        else:
            literals.append(Equality(_rename(lit.left, mapping), _rename(lit.right, mapping)))
    return Disjunct(tuple(evars), tuple(literals) + tuple(head_eqs), rule.label)


def iff_completion(rules: Sequence[Rule], pred: str = "allowed", arity: int | None = None) -> Completion:
    """The biconditional defining ``pred`` as the disjunction of its rule bodies."""
    rules = list(rules)
    if rules:
        preds = {(r.head.pred, r.head.arity) for r in rules}
        if len(preds) != 1:
            shown = ", ".join(f"{p}/{a}" for p, a in sorted(preds))
            raise ValidationError(f"completion needs a single head predicate, got {shown}")
        pred, arity = preds.pop()
    if arity is None:
        arity = KNOWN_ARITIES.get(pred)
        if arity is None:
            raise ValidationError(f"arity of {pred} unknown for an empty rule set")
    hv = head_variables(pred, arity)
    return Completion(pred, hv, tuple(_standardize(r, hv) for r in rules))


# -- evaluation over a finite structure -----------------------------------

def _value(t, env: Mapping[str, str]):
    if isinstance(t, Const):
        return t.value
    try:
        return env[t.name]
    except KeyError:
        raise ValidationError(f"free variable {t.name} in formula") from None


def evaluate_formula(
    f: Formula,
    relations: Mapping[str, set],
    domain: Sequence[str],
    env: Mapping[str, str] | None = None,
) -> bool:
    """Truth of ``f`` in the finite structure (``domain``, ``relations``).

    Equality is identity of values (unique names).
    """
    env = dict(env or {})
    if isinstance(f, Truth):
        return f.value
    if isinstance(f, Atom):
        return tuple(_value(a, env) for a in f.args) in relations.get(f.pred, ())
    if isinstance(f, Equality):
        return _value(f.left, env) == _value(f.right, env)
    if isinstance(f, Not):
        return not evaluate_formula(f.arg, relations, domain, env)
    if isinstance(f, And):
        return all(evaluate_formula(a, relations, domain, env) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate_formula(a, relations, domain, env) for a in f.args)
    if isinstance(f, Implies):
        return (not evaluate_formula(f.lhs, relations, domain, env)) or evaluate_formula(
            f.rhs, relations, domain, env
        )
    if isinstance(f, Iff):
        return evaluate_formula(f.lhs, relations, domain, env) == evaluate_formula(
            f.rhs, relations, domain, env
        )
    if isinstance(f, (Forall, Exists)):
        names = [v.name for v in f.vars]
        results = (
            evaluate_formula(f.body, relations, domain, {**env, **dict(zip(names, combo))})
            for combo in itertools.product(domain, repeat=len(names))
        )
        return all(results) if isinstance(f, Forall) else any(results)
    raise TypeError(f"not a formula: {f!r}")
