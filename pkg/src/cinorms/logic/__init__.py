"""Restricted Datalog: syntax, evaluation, completion and the norm compiler."""

from cinorms.logic.compiler import canview_rules, compile_norm, compile_norms
from cinorms.logic.engine import Model, UnknownPredicateError, evaluate, holds, query
from cinorms.logic.formula import Completion, iff_completion, pretty
from cinorms.logic.parser import (
    ArityError,
    DatalogSyntaxError,
    FragmentError,
    UnsafeRuleError,
    parse_program,
    parse_query,
)
from cinorms.logic.terms import Atom, Const, DatalogProgram, Equality, Rule, Var, format_program

__all__ = [
    "ArityError",
    "Atom",
    "Completion",
    "Const",
    "DatalogProgram",
    "DatalogSyntaxError",
    "Equality",
    "FragmentError",
    "Model",
    "Rule",
    "UnknownPredicateError",
    "UnsafeRuleError",
    "Var",
    "canview_rules",
    "compile_norm",
    "compile_norms",
    "evaluate",
    "format_program",
    "holds",
    "iff_completion",
    "parse_program",
    "parse_query",
    "pretty",
    "query",
]
