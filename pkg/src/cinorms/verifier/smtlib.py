"""SMT-LIB v2 export of the completion plus negated properties, and a reader for it.

The export is a cross-check for an external solver.  Actors and constants
live in one uninterpreted sort ``Entity``; every predicate becomes a boolean
function over it.  Each property is checked in its own push/pop scope by
asserting its negation: ``unsat`` means the property holds.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from cinorms.errors import ParseError
from cinorms.logic.formula import (
    FALSE,
    TRUE,
    And,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    Truth,
    conj,
    disj,
    forall,
    iff_completion,
    neq,
)
from cinorms.logic.terms import Atom, Const, Equality, Rule, Var
from cinorms.normgen import CandidateNorm
from cinorms.schema import SUBJECT_IN_ROLE, SUBJECT_IS_RECIPIENT, SUBJECT_IS_SENDER, ContextSchema

SORT = "Entity"
_SIMPLE_RE = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*$")
_RESERVED = {
    "and", "or", "not", "=>", "=", "forall", "exists", "let", "true", "false", "distinct",
    "ite", "assert", "par", "_", "!", "as",
}


def symbol(name: str) -> str:
    if _SIMPLE_RE.match(name) and name not in _RESERVED:
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"name {name!r} cannot be written as an SMT-LIB symbol")
    return f"|{name}|"


def _term(t) -> str:
    return symbol(t.value if isinstance(t, Const) else t.name)


def to_sexpr(f: Formula) -> str:
    if isinstance(f, Truth):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        if not f.args:
            return symbol(f.pred)
        return f"({symbol(f.pred)} {' '.join(_term(a) for a in f.args)})"
    if isinstance(f, Equality):
        return f"(= {_term(f.left)} {_term(f.right)})"
    if isinstance(f, Not):
        return f"(not {to_sexpr(f.arg)})"
    if isinstance(f, And):
        return f"(and {' '.join(to_sexpr(a) for a in f.args)})"
    if isinstance(f, Or):
        return f"(or {' '.join(to_sexpr(a) for a in f.args)})"
    if isinstance(f, Implies):
        return f"(=> {to_sexpr(f.lhs)} {to_sexpr(f.rhs)})"
    if isinstance(f, Iff):
        return f"(= {to_sexpr(f.lhs)} {to_sexpr(f.rhs)})"
    if isinstance(f, (Forall, Exists)):
        q = "forall" if isinstance(f, Forall) else "exists"
        binders = " ".join(f"({symbol(v.name)} {SORT})" for v in f.vars)
        return f"({q} ({binders}) {to_sexpr(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def _collect(f: Formula, consts: set, preds: dict) -> None:
    if isinstance(f, Truth):
        return
    if isinstance(f, Atom):
        preds.setdefault(f.pred, f.arity)
        consts.update(a.value for a in f.args if isinstance(a, Const))
    elif isinstance(f, Equality):
        consts.update(t.value for t in (f.left, f.right) if isinstance(t, Const))
    elif isinstance(f, Not):
        _collect(f.arg, consts, preds)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            _collect(a, consts, preds)
    elif isinstance(f, (Implies, Iff)):
        _collect(f.lhs, consts, preds)
        _collect(f.rhs, consts, preds)
    elif isinstance(f, (Forall, Exists)):
        _collect(f.body, consts, preds)


def ontology_axioms(schema: ContextSchema) -> list[Formula]:
    x = Var("X")
    ctx = Const(schema.context_id)
    axioms: list[Formula] = []
    for sub, sup in sorted(schema.ontology.implications):
        axioms.append(forall([x], Implies(Atom("inrole", (ctx, x, Const(sub))), Atom("inrole", (ctx, x, Const(sup))))))
    for pair in sorted(tuple(sorted(p)) for p in schema.ontology.disjoint_pairs):
        a, b = pair
        axioms.append(
            forall([x], Not(And((Atom("inrole", (ctx, x, Const(a))), Atom("inrole", (ctx, x, Const(b)))))))
        )
    return axioms


def export_epr(
    approved: Sequence[Rule],
    properties: Formula | Sequence[tuple[str, Formula]],
    schema: ContextSchema | None = None,
) -> str:
    """Solver input: declarations, the ``allowed`` completion, ontology axioms, then one scope per property."""
    if not isinstance(properties, (list, tuple)):
        properties = [("property", properties)]
    completion = iff_completion([r for r in approved if r.head.pred == "allowed"], "allowed", 6)
    background: list[Formula] = [completion.formula()]
    if schema is not None:
        background.extend(ontology_axioms(schema))
    consts: set = set()
    preds: dict = {"inrole": 3, "allowed": 6}
    if schema is not None:
        consts.add(schema.context_id)
        consts.update(schema.role_ids)
    for f in background + [p for _, p in properties]:
        _collect(f, consts, preds)

    out = ["(set-logic UF)", f"(declare-sort {SORT} 0)"]
    names = sorted(consts)
    for c in names:
        out.append(f"(declare-const {symbol(c)} {SORT})")
    if len(names) > 1:
        out.append(f"(assert (distinct {' '.join(symbol(c) for c in names)}))")
    for pred in sorted(preds):
        sig = " ".join([SORT] * preds[pred])
        out.append(f"(declare-fun {symbol(pred)} ({sig}) Bool)")
    out.append("; completion of allowed")
    out.append(f"(assert {to_sexpr(background[0])})")
    if len(background) > 1:
        out.append("; role ontology")
        for ax in background[1:]:
            out.append(f"(assert {to_sexpr(ax)})")
    for name, prop in properties:
        out.append(f"; property {name}")
        out.append("(push 1)")
        out.append(f"(assert {to_sexpr(Not(prop))})")
        out.append("(check-sat)")
        out.append("(pop 1)")
    return "\n".join(out) + "\n"


# -- property builders ----------------------------------------------------

def semantic_property(norm: CandidateNorm) -> Formula:
    """No flow matching ``norm`` between distinct actors is allowed."""
    ctx = Const(norm.context)
    sn, r, su = Var("Sn"), Var("R"), Var("Su")
    parts: list[Formula] = [
        Atom("inrole", (ctx, sn, Const(norm.sender_role))),
        Atom("inrole", (ctx, r, Const(norm.recipient_role))),
        neq(sn, r),
    ]
    rel = norm.subject_relation
    if rel.kind == SUBJECT_IS_RECIPIENT:
        parts.append(Equality(su, r))
    elif rel.kind == SUBJECT_IS_SENDER:
        parts.append(Equality(su, sn))
    else:
        if rel.kind == SUBJECT_IN_ROLE:
            parts.append(Atom("inrole", (ctx, su, Const(rel.role))))
        parts.extend([neq(su, sn), neq(su, r)])
    parts.append(
        Atom("allowed", (ctx, sn, r, su, Const(norm.attribute), Const(norm.transmission_principle)))
    )
    return forall([sn, r, su], Not(conj(parts)))


def transitivity_property(context: str, tp_match: str = "exact") -> Formula:
    """Two chained flows about one subject imply the direct flow."""
    ctx = Const(context)
    x, m, z, su, a = Var("X"), Var("M"), Var("Z"), Var("Su"), Var("A")
    distinct = [neq(x, m), neq(m, z), neq(x, z)]
    if tp_match == "exact":
        t = Var("T")
        lhs = conj([Atom("allowed", (ctx, x, m, su, a, t)), Atom("allowed", (ctx, m, z, su, a, t))] + distinct)
        return forall([x, m, z, su, a, t], Implies(lhs, Atom("allowed", (ctx, x, z, su, a, t))))
    t1, t2, t3 = Var("T1"), Var("T2"), Var("T3")
    lhs = conj([Atom("allowed", (ctx, x, m, su, a, t1)), Atom("allowed", (ctx, m, z, su, a, t2))] + distinct)
    return forall([x, m, z, su, a, t1, t2], Implies(lhs, Exists((t3,), Atom("allowed", (ctx, x, z, su, a, t3)))))


# -- reader ---------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s+|;[^\n]*|\(|\)|\|[^|]*\||[^\s()|;]+")


def _tokens(text: str) -> list[str]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r} in SMT-LIB text")
        tok = m.group(0)
        pos = m.end()
        if tok.isspace() or tok.startswith(";"):
            continue
        out.append(tok)
    return out


def _sexprs(tokens: list[str]) -> list:
    stack: list[list] = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')' in SMT-LIB text")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(_Sym(tok[1:-1] if tok.startswith("|") else tok))
    if len(stack) != 1:
        raise ParseError("unbalanced '(' in SMT-LIB text")
    return stack[0]


class _Sym(str):
    pass


@dataclass
class SmtScript:
    constants: list[str] = field(default_factory=list)
    functions: dict[str, int] = field(default_factory=dict)
    assertions: list[Formula] = field(default_factory=list)
    checks: list[Formula] = field(default_factory=list)
    logic: str | None = None


class _Reader:
    def __init__(self, script: SmtScript):
        self.script = script

    def term(self, x, bound: set[str]):
        if not isinstance(x, str):
            raise ParseError(f"expected a term, found {x!r}")
        if x in bound:
            return Var(x)
        if x in self.script.constants:
            return Const(x)
        raise ParseError(f"undeclared symbol {x!r}")

    def is_term(self, x, bound) -> bool:
        return isinstance(x, str) and (x in bound or x in self.script.constants)

    def formula(self, x, bound: set[str]) -> Formula:
        if isinstance(x, str):
            if x == "true":
                return TRUE
            if x == "false":
                return FALSE
            if self.script.functions.get(x) == 0:
                return Atom(x, ())
            raise ParseError(f"expected a formula, found {x!r}")
        if not x:
            raise ParseError("empty application")
        head, args = x[0], x[1:]
        if head == "not":
            return Not(self.formula(args[0], bound))
        if head == "and":
            return And(tuple(self.formula(a, bound) for a in args))
        if head == "or":
            return Or(tuple(self.formula(a, bound) for a in args))
        if head == "=>":
            return Implies(self.formula(args[0], bound), self.formula(args[1], bound))
        if head == "=":
            if self.is_term(args[0], bound):
                return Equality(self.term(args[0], bound), self.term(args[1], bound))
            return Iff(self.formula(args[0], bound), self.formula(args[1], bound))
        if head in ("forall", "exists"):
            names = [b[0] for b in args[0]]
            inner = bound | set(names)
            vars_ = tuple(Var(n) for n in names)
            body = self.formula(args[1], inner)
            return Forall(vars_, body) if head == "forall" else Exists(vars_, body)
        if head in self.script.functions:
            if len(args) != self.script.functions[head]:
                raise ParseError(f"{head} applied to {len(args)} arguments")
            return Atom(str(head), tuple(self.term(a, bound) for a in args))
        raise ParseError(f"unknown operator {head!r}")


def read_smtlib(text: str) -> SmtScript:
    """Rebuild declarations and asserted formulas from :func:`export_epr` output."""
    script = SmtScript()
    reader = _Reader(script)
    depth = 0
    for cmd in _sexprs(_tokens(text)):
        if not isinstance(cmd, list) or not cmd:
            raise ParseError(f"expected a command, found {cmd!r}")
        name = cmd[0]
        if name == "set-logic":
            script.logic = str(cmd[1])
        elif name == "declare-sort":
            continue
        elif name == "declare-const":
            script.constants.append(str(cmd[1]))
        elif name == "declare-fun":
            script.functions[str(cmd[1])] = len(cmd[2])
        elif name == "assert":
            body = cmd[1]
            if isinstance(body, list) and body and body[0] == "distinct":
                continue
            f = reader.formula(body, set())
            (script.checks if depth else script.assertions).append(f)
        elif name == "push":
            depth += 1
        elif name == "pop":
            depth -= 1
        elif name in ("check-sat", "get-model", "exit"):
            continue
        else:
            raise ParseError(f"unsupported command {name!r}")
    return script


def professor_grade_property(context: str = "class") -> Formula:
    """A professor may share a grade with a student only about that student, unless the recipient is a TA."""
    ctx = Const(context)
    sn, r, su, t = Var("Sn"), Var("R"), Var("Su"), Var("T")
    lhs = conj(
        [
            Atom("inrole", (ctx, sn, Const("professor"))),
            Atom("inrole", (ctx, r, Const("student"))),
            Atom("allowed", (ctx, sn, r, su, Const("grade"), t)),
        ]
    )
    rhs = disj([Equality(su, r), Atom("inrole", (ctx, r, Const("ta")))])
    return forall([sn, r, su, t], Implies(lhs, rhs))


__all__ = [
    "SmtScript",
    "export_epr",
    "ontology_axioms",
    "professor_grade_property",
    "read_smtlib",
    "semantic_property",
    "symbol",
    "to_sexpr",
    "transitivity_property",
]
