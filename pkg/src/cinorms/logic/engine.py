"""Bottom-up evaluation: semi-naive fixpoint, naive reference iteration, queries."""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Iterator, Mapping, Sequence

from cinorms.errors import ValidationError
from cinorms.logic.parser import check_program
from cinorms.logic.terms import KNOWN_ARITIES, Atom, Const, DatalogProgram, Equality, Literal, Rule

Relations = Mapping[str, set]


class UnknownPredicateError(ValidationError):
    pass


class Model:
    """The least fixpoint: one set of value tuples per predicate."""

    def __init__(self, relations: Mapping[str, Iterable[tuple[str, ...]]]):
        self._rel = {p: frozenset(ts) for p, ts in relations.items() if ts}

    def relation(self, pred: str) -> frozenset[tuple[str, ...]]:
        return self._rel.get(pred, frozenset())

    def predicates(self) -> list[str]:
        return sorted(self._rel)

    def atoms(self) -> list[Atom]:
        return [Atom.ground(p, t) for p in sorted(self._rel) for t in sorted(self._rel[p])]

    def __contains__(self, atom: Atom) -> bool:
        return atom.is_ground() and atom.values() in self._rel.get(atom.pred, ())

    def __len__(self) -> int:
        return sum(len(ts) for ts in self._rel.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, Model) and self._rel == other._rel

    def issubset(self, other: Model) -> bool:
        return all(ts <= other.relation(p) for p, ts in self._rel.items())

    def __repr__(self) -> str:
        return f"Model({len(self)} facts)"


class _Index:
    """Lazy hash indexes over a relation keyed by bound argument positions."""

    def __init__(self, relations: Relations):
        self.relations = relations
        self.cache: dict[tuple[str, tuple[int, ...]], dict] = {}

    def lookup(self, pred: str, positions: tuple[int, ...], key: tuple[str, ...]):
        rows = self.relations.get(pred)
        if not rows:
            return ()
        if not positions:
            return rows
        idx = self.cache.get((pred, positions))
        if idx is None:
            idx = defaultdict(list)
            for row in rows:
                idx[tuple(row[p] for p in positions)].append(row)
            self.cache[(pred, positions)] = idx
        return idx.get(key, ())


def _resolve(t, env):
    if isinstance(t, Const):
        return t.value
    return env.get(t.name)


def _apply_equalities(pending: list[Equality], env: dict) -> tuple[list[Equality], bool]:
    """Bind or check equalities that have at least one resolved side."""
    progress = True
    while progress and pending:
        progress = False
        rest = []
        for eq in pending:
            lv, rv = _resolve(eq.left, env), _resolve(eq.right, env)
            if lv is not None and rv is not None:
                if lv != rv:
                    return pending, False
                progress = True
            elif lv is not None:
                env[eq.right.name] = lv  # type: ignore[union-attr]
                progress = True
            elif rv is not None:
                env[eq.left.name] = rv  # type: ignore[union-attr]
                progress = True
            else:
                rest.append(eq)
        pending = rest
    return pending, True


def _solve(
    atoms: Sequence[Atom],
    sources: Sequence[_Index],
    pending: list[Equality],
    env: dict,
    i: int = 0,
) -> Iterator[dict]:
    pending, ok = _apply_equalities(pending, env)
    if not ok:
        return
    if i == len(atoms):
        if not pending:
            yield env
        return
    atom = atoms[i]
    positions, key, free = [], [], []
    for pos, arg in enumerate(atom.args):
        val = _resolve(arg, env)
        if val is None:
            free.append((pos, arg.name))  # type: ignore[union-attr]
        else:
            positions.append(pos)
            key.append(val)
    for row in sources[i].lookup(atom.pred, tuple(positions), tuple(key)):
        new_env = dict(env)
        for pos, name in free:
            bound = new_env.get(name)
            if bound is None:
                new_env[name] = row[pos]
            elif bound != row[pos]:
                break
        else:
            yield from _solve(atoms, sources, list(pending), new_env, i + 1)


def _instantiate(head: Atom, env: dict) -> tuple[str, ...]:
    return tuple(_resolve(a, env) for a in head.args)  # type: ignore[misc]


def _fire(rule: Rule, sources: Sequence[_Index]) -> Iterator[tuple[str, ...]]:
    for env in _solve(rule.atoms(), sources, rule.equalities(), {}):
        yield _instantiate(rule.head, env)


def _edb(program: DatalogProgram) -> dict[str, set]:
    rel: dict[str, set] = defaultdict(set)
    for fact in program.facts:
        rel[fact.pred].add(fact.values())
    return rel


def naive_fixpoint(program: DatalogProgram) -> Model:
    """Reference evaluation: re-fire every rule against everything until stable."""
    total = _edb(program)
    while True:
        index = _Index(total)
        new = defaultdict(set)
        for rule in program.rules:
            for row in _fire(rule, [index] * len(rule.atoms())):
                if row not in total[rule.head.pred]:
                    new[rule.head.pred].add(row)
        if not any(new.values()):
            return Model(total)
        for p, rows in new.items():
            total[p] |= rows


def seminaive_fixpoint(program: DatalogProgram) -> Model:
    total = _edb(program)
    idb = program.intensional()
    # First round: every rule against the extensional facts.
    index = _Index(total)
    delta: dict[str, set] = defaultdict(set)
    for rule in program.rules:
        for row in _fire(rule, [index] * len(rule.atoms())):
            if row not in total[rule.head.pred]:
                delta[rule.head.pred].add(row)
    recursive = [r for r in program.rules if any(a.pred in idb for a in r.atoms())]
    while any(delta.values()):
        for p, rows in delta.items():
            total[p] |= rows
        full, fresh = _Index(total), _Index(delta)
        new: dict[str, set] = defaultdict(set)
        for rule in recursive:
            atoms = rule.atoms()
            for i, atom in enumerate(atoms):
                if not delta.get(atom.pred):
                    continue
                sources = [full] * len(atoms)
                sources[i] = fresh
                for row in _fire(rule, sources):
                    if row not in total[rule.head.pred]:
                        new[rule.head.pred].add(row)
        delta = new
    return Model(total)


def evaluate(program: DatalogProgram, *, method: str = "seminaive") -> Model:
    """Least fixpoint of ``program``."""
    if method == "seminaive":
        return seminaive_fixpoint(program)
    if method == "naive":
        return naive_fixpoint(program)
    raise ValueError(f"unknown evaluation method {method!r}")


def _goal_parts(goal: Sequence[Literal]):
    atoms = [g for g in goal if isinstance(g, Atom)]
    eqs = [g for g in goal if isinstance(g, Equality)]
    return atoms, eqs


def solve_goal(model: Model, goal: Sequence[Literal]) -> list[dict[str, str]]:
    """All substitutions of the goal's named variables that hold in ``model``."""
    atoms, eqs = _goal_parts(goal)
    rel = {a.pred: set(model.relation(a.pred)) for a in atoms}
    index = _Index(rel)
    names = []
    for lit in goal:
        for v in lit.variables():
            if not v.name.startswith("_") and v.name not in names:
                names.append(v.name)
    seen, result = set(), []
    for env in _solve(atoms, [index] * len(atoms), eqs, {}):
        key = tuple(env.get(n) for n in names)
        if key not in seen:
            seen.add(key)
            result.append(dict(zip(names, key)))
    result.sort(key=lambda s: tuple(s[n] or "" for n in names))
    return result


def query(program: DatalogProgram, goal: Sequence[Literal], model: Model | None = None) -> list[dict[str, str]]:
    """Evaluate ``goal`` against the fixpoint of ``program``.

    A ground goal yields ``[{}]`` when it holds and ``[]`` otherwise.
    """
    known = set(program.predicates()) | set(KNOWN_ARITIES)
    for lit in goal:
        if isinstance(lit, Atom) and lit.pred not in known:
            raise UnknownPredicateError(f"unknown predicate {lit.pred}/{lit.arity}")
    check_program(DatalogProgram(program.facts, program.rules, (tuple(goal),)), fragment=False)
    if model is None:
        model = evaluate(program)
    return solve_goal(model, goal)


def holds(program: DatalogProgram, goal: Sequence[Literal], model: Model | None = None) -> bool:
    return bool(query(program, goal, model))


def ground_atom(pred: str, *values: str) -> Atom:
    return Atom(pred, tuple(Const(v) for v in values))


__all__ = [
    "Model",
    "UnknownPredicateError",
    "evaluate",
    "ground_atom",
    "holds",
    "naive_fixpoint",
    "query",
    "seminaive_fixpoint",
    "solve_goal",
]
