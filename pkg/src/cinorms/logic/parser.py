"""Reader for the Prolog-style surface syntax.

Accepted: facts ``p(c1, c2).``, rules ``h(X) :- b(X), X = c.``, queries
``?- goal.``, ``%`` line comments.  A comment of the form ``% @label ID``
attaches ``ID`` to the next rule.  Negation, function symbols, unsafe rules
and arity clashes are rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from cinorms.errors import ParseError, ValidationError
from cinorms.logic.terms import (
    KNOWN_ARITIES,
    LAYERED_REFERENCES,
    Atom,
    Const,
    DatalogProgram,
    Equality,
    Literal,
    Rule,
    Var,
)


class DatalogSyntaxError(ParseError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class FragmentError(ValidationError):
    """The program is syntactically fine but outside the supported fragment."""


class UnsafeRuleError(FragmentError):
    pass


class ArityError(FragmentError):
    pass


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<label>%[ \t]*@label[ \t]+(?P<labelval>[^\s]+)[^\n]*)
  | (?P<comment>%[^\n]*)
  | (?P<neck>:-)
  | (?P<query>\?-)
  | (?P<neg>\\\+)
  | (?P<string>'(?:[^'\\\n]|\\.)*')
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<int>-?[0-9]+)
  | (?P<punct>[(),.=])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if not m:
            raise DatalogSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "labelval":
            kind = "label"
        value = m.group(0)
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "label":
            toks.append(_Tok("label", m.group("labelval"), line, col))
        elif kind == "string":
            body = value[1:-1]
            toks.append(_Tok("string", re.sub(r"\\(.)", r"\1", body), line, col))
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind if kind != "punct" else value, value, line, col))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.anon = 0

    def peek(self, offset: int = 0) -> _Tok:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> _Tok:
        tok = self.next()
        if tok.kind != kind:
            shown = tok.text or "end of input"
            raise DatalogSyntaxError(f"expected {kind!r} but found {shown!r}", tok.line, tok.col)
        return tok

    def fail(self, message: str, tok: _Tok):
        raise DatalogSyntaxError(message, tok.line, tok.col)

    def program(self):
        facts, rules, queries = [], [], []
        label = None
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == "label":
                self.next()
                label = tok.text
                continue
            self.anon = 0
            if tok.kind == "query":
                self.next()
                queries.append((self.body(), tok))
                self.expect(".")
                continue
            head = self.atom()
            if self.peek().kind == "neck":
                self.next()
                body = self.body()
                self.expect(".")
                rules.append((Rule(head, tuple(body), label), tok))
            else:
                self.expect(".")
                if label is not None:
                    rules.append((Rule(head, (), label), tok))
                else:
                    facts.append((head, tok))
            label = None
        return facts, rules, queries

    def body(self) -> list[Literal]:
        lits = [self.literal()]
        while self.peek().kind == ",":
            self.next()
            lits.append(self.literal())
        return lits

    def literal(self) -> Literal:
        tok = self.peek()
        if tok.kind == "neg" or (tok.kind == "ident" and tok.text == "not" and self.peek(1).kind == "("):
            raise FragmentError(f"negation is not supported (line {tok.line}, column {tok.col})")
        if tok.kind == "ident" and self.peek(1).kind == "(":
            atom = self.atom()
            if self.peek().kind == "=":
                raise FragmentError(f"function symbols are not supported (line {tok.line}, column {tok.col})")
            return atom
        if tok.kind == "ident" and self.peek(1).kind != "=":
            return self.atom()
        left = self.term()
        self.expect("=")
        right = self.term()
        return Equality(left, right)

    def atom(self) -> Atom:
        tok = self.next()
        if tok.kind != "ident":
            self.fail(f"expected a predicate name but found {tok.text or 'end of input'!r}", tok)
        args = []
        if self.peek().kind == "(":
            self.next()
            args.append(self.term())
            while self.peek().kind == ",":
                self.next()
                args.append(self.term())
            self.expect(")")
        return Atom(tok.text, tuple(args))

    def term(self):
        tok = self.next()
        if tok.kind == "var":
            if tok.text == "_":
                name = f"_{self.anon}"
                self.anon += 1
                return Var(name)
            return Var(tok.text)
        if tok.kind in ("ident", "int", "string"):
            if tok.kind == "ident" and self.peek().kind == "(":
                raise FragmentError(f"function symbols are not supported (line {tok.line}, column {tok.col})")
            return Const(tok.text)
        self.fail(f"expected a term but found {tok.text or 'end of input'!r}", tok)


def _bound_variables(atoms, equalities) -> set[Var]:
    bound = {v for a in atoms for v in a.variables()}
    changed = True
    while changed:
        changed = False
        for eq in equalities:
            l, r = eq.left, eq.right
            l_ok = isinstance(l, Const) or l in bound
            r_ok = isinstance(r, Const) or r in bound
            if l_ok and not r_ok:
                bound.add(r)
                changed = True
            elif r_ok and not l_ok:
                bound.add(l)
                changed = True
    return bound


def check_safety(rule: Rule) -> None:
    bound = _bound_variables(rule.atoms(), rule.equalities())
    for var in rule.head.variables() + [v for e in rule.equalities() for v in e.variables()]:
        if var not in bound:
            raise UnsafeRuleError(f"unsafe rule for {rule.head.pred}: variable {var} is not range-restricted")


def check_program(program: DatalogProgram, *, fragment: bool = True) -> None:
    """Validate groundness, arities, safety and (optionally) the layering restriction."""
    arities: dict[str, int] = {}

    def note(atom: Atom):
        expected = KNOWN_ARITIES.get(atom.pred, arities.get(atom.pred))
        if expected is not None and expected != atom.arity:
            raise ArityError(
                f"arity clash: {atom.pred}/{atom.arity} used where {atom.pred}/{expected} is established"
            )
        arities.setdefault(atom.pred, atom.arity)

    for fact in program.facts:
        if not fact.is_ground():
            raise FragmentError(f"fact {fact} is not ground")
        note(fact)
    intensional = program.intensional()
    for rule in program.rules:
        note(rule.head)
        for atom in rule.atoms():
            note(atom)
            if fragment and atom.pred in intensional:
                if atom.pred not in LAYERED_REFERENCES.get(rule.head.pred, ()):
                    raise FragmentError(
                        f"rule for {rule.head.pred} references intensional predicate {atom.pred}"
                    )
        check_safety(rule)
    for goal in program.queries:
        for lit in goal:
            if isinstance(lit, Atom):
                note(lit)


def parse_program(source_text: str, *, fragment: bool = True) -> DatalogProgram:
    parser = _Parser(source_text)
    facts, rules, queries = parser.program()
    seen = set()
    unique_facts = []
    for atom, _ in facts:
        if atom not in seen:
            seen.add(atom)
            unique_facts.append(atom)
    program = DatalogProgram(
        tuple(unique_facts),
        tuple(r for r, _ in rules),
        tuple(tuple(q) for q, _ in queries),
    )
    check_program(program, fragment=fragment)
    return program


def parse_query(source_text: str) -> tuple[Literal, ...]:
    text = source_text.strip()
    if not text.startswith("?-"):
        text = "?- " + text
    if not text.endswith("."):
        text += "."
    parser = _Parser(text)
    _, _, queries = parser.program()
    if len(queries) != 1:
        raise ParseError("expected exactly one query")
    return tuple(queries[0][0])
