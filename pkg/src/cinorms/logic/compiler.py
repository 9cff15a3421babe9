"""Translate approved norms into ``allowed/6`` clauses."""

from __future__ import annotations

from typing import Iterable

from cinorms.errors import ValidationError
from cinorms.logic.terms import Atom, Const, Equality, Rule, Var
from cinorms.normgen import CandidateNorm
from cinorms.schema import (
    SUBJECT_IN_ROLE,
    SUBJECT_IS_RECIPIENT,
    SUBJECT_IS_SENDER,
    UNCONSTRAINED,
    ContextSchema,
)

SNDR, RECP, SUBJ = Var("Sndr"), Var("Recp"), Var("Subj")


def _validate(norm: CandidateNorm, schema: ContextSchema) -> None:
    if norm.context != schema.context_id:
        raise ValidationError(f"norm {norm.norm_id} is for context {norm.context!r}, not {schema.context_id!r}")
    roles = set(schema.role_ids)
    for role in (norm.sender_role, norm.recipient_role, norm.subject_relation.role):
        if role is not None and role not in roles:
            raise ValidationError(f"norm {norm.norm_id} uses unknown role {role!r}")
    if norm.attribute not in schema.attribute_ids:
        raise ValidationError(f"norm {norm.norm_id} uses unknown attribute {norm.attribute!r}")
    if norm.transmission_principle not in schema.tp_ids:
        raise ValidationError(f"norm {norm.norm_id} uses unknown transmission principle")


def compile_norm(norm: CandidateNorm) -> Rule:
    ctx = Const(norm.context)
    head = Atom(
        "allowed",
        (ctx, SNDR, RECP, SUBJ, Const(norm.attribute), Const(norm.transmission_principle)),
    )
    body: list = [
        Atom("inrole", (ctx, SNDR, Const(norm.sender_role))),
        Atom("inrole", (ctx, RECP, Const(norm.recipient_role))),
    ]
    rel = norm.subject_relation
    if rel.kind == SUBJECT_IS_RECIPIENT:
        body.append(Equality(SUBJ, RECP))
    elif rel.kind == SUBJECT_IS_SENDER:
        body.append(Equality(SUBJ, SNDR))
    elif rel.kind == SUBJECT_IN_ROLE:
        body.append(Atom("inrole", (ctx, SUBJ, Const(rel.role))))
    elif rel.kind == UNCONSTRAINED:
        # any actor holding some role in the context
        body.append(Atom("inrole", (ctx, SUBJ, Var("_0"))))
    else:
        raise ValidationError(f"unknown subject relation {rel}")
    return Rule(head, tuple(body), norm.norm_id)


def compile_norms(approved: Iterable[CandidateNorm], schema: ContextSchema) -> list[Rule]:
    """One ``allowed`` rule per approved norm, labelled with its norm id."""
    rules = []
    for norm in approved:
        _validate(norm, schema)
        rules.append(compile_norm(norm))
    return rules


def canview_rules(schema: ContextSchema) -> list[Rule]:
    """One ``canView`` rule per transmission principle.

    Principles with a consent control additionally require the post's subject
    to have published a ``consent`` fact for the post.
    """
    ctx = Const(schema.context_id)
    v, p, a, s, at = Var("Viewer"), Var("PostID"), Var("Author"), Var("Subject"), Var("Attribute")
    rules = []
    for tp in schema.transmission_principles:
        t = Const(tp.id)
        body: list = [
            Atom("post", (ctx, p, a, s, at, t)),
            Atom("allowed", (ctx, a, v, s, at, t)),
        ]
        if tp.control == "consent":
            body.append(Atom("consent", (ctx, s, p)))
        rules.append(Rule(Atom("canView", (ctx, v, p)), tuple(body), f"view:{tp.id}"))
    return rules
