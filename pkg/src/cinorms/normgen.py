"""Candidate norm enumeration, expert restrictions and question rendering."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from cinorms.errors import ParseError, ValidationError
from cinorms.schema import (
    SUBJECT_IN_ROLE,
    SUBJECT_IS_RECIPIENT,
    SUBJECT_IS_SENDER,
    ContextSchema,
    SubjectRelation,
)

QUESTION_COLUMNS = (
    "norm_id",
    "context",
    "sender_role",
    "recipient_role",
    "subject_relation",
    "attribute",
    "transmission_principle",
    "question_text",
)

RESTRICTION_FIELDS = (
    "context",
    "sender_role",
    "recipient_role",
    "subject_relation",
    "attribute",
    "transmission_principle",
)


def make_norm_id(context, sender_role, recipient_role, subject_relation, attribute, tp) -> str:
    canonical = "|".join(
        [context, sender_role, recipient_role, str(subject_relation), attribute, tp]
    )
    return "n" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class CandidateNorm:
    context: str
    sender_role: str
    recipient_role: str
    subject_relation: SubjectRelation
    attribute: str
    transmission_principle: str

    @property
    def norm_id(self) -> str:
        return make_norm_id(
            self.context,
            self.sender_role,
            self.recipient_role,
            self.subject_relation,
            self.attribute,
            self.transmission_principle,
        )

    def field(self, name: str) -> str:
        value = getattr(self, name)
        return str(value)

    def describe(self) -> str:
        return (
            f"{self.sender_role} -> {self.recipient_role} "
            f"[{self.subject_relation}] {self.attribute} / {self.transmission_principle}"
        )


@dataclass(frozen=True)
class Question:
    norm: CandidateNorm
    text: str

    @property
    def norm_id(self) -> str:
        return self.norm.norm_id


@dataclass(frozen=True)
class Restriction:
    """Excludes every candidate whose fields match all ``conditions``."""

    conditions: tuple[tuple[str, str], ...]

    def matches(self, norm: CandidateNorm) -> bool:
        return all(norm.field(name) == value for name, value in self.conditions)

    def validate(self, schema: ContextSchema) -> None:
        allowed = {
            "context": {schema.context_id},
            "sender_role": set(schema.sender_roles),
            "recipient_role": set(schema.recipient_roles),
            "subject_relation": {str(r) for r in schema.subject_relations},
            "attribute": set(schema.attribute_ids),
            "transmission_principle": set(schema.tp_ids),
        }
        for name, value in self.conditions:
            if value not in allowed[name]:
                raise ValidationError(f"restriction references unknown {name} {value!r}")


def enumerate_candidates(schema: ContextSchema) -> list[CandidateNorm]:
    """Full cross product of the schema vocabularies, in schema list order."""
    return [
        CandidateNorm(schema.context_id, s, r, rel, a, t)
        for s in schema.sender_roles
        for r in schema.recipient_roles
        for rel in schema.subject_relations
        for a in schema.attribute_ids
        for t in schema.tp_ids
    ]


def parse_restrictions(source_text: str) -> list[Restriction]:
    try:
        doc = json.loads(source_text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"restrictions file is not valid JSON: {exc}") from exc
    if isinstance(doc, dict):
        doc = doc.get("restrictions", [])
    if not isinstance(doc, list):
        raise ParseError("restrictions must be a list of objects")
    result = []
    for entry in doc:
        if not isinstance(entry, dict) or not entry:
            raise ParseError(f"restriction must be a non-empty object: {entry!r}")
        conditions = []
        for name, value in entry.items():
            if name not in RESTRICTION_FIELDS:
                raise ParseError(f"unknown restriction field {name!r}")
            conditions.append((name, str(value)))
        result.append(Restriction(tuple(conditions)))
    return result


def apply_restrictions(
    candidates: Sequence[CandidateNorm],
    restrictions: Sequence[Restriction],
    schema: ContextSchema | None = None,
) -> list[CandidateNorm]:
    if schema is not None:
        for restriction in restrictions:
            restriction.validate(schema)
    return [c for c in candidates if not any(r.matches(c) for r in restrictions)]


def question_fragments(norm: CandidateNorm, schema: ContextSchema) -> dict[str, str]:
    """The rendered phrase for every template slot of ``norm``."""
    sender = schema.role_text(norm.sender_role)
    recipient = schema.role_text(norm.recipient_role)
    rel = norm.subject_relation
    if rel.kind == SUBJECT_IN_ROLE:
        subject = schema.role_text(rel.role)
        sender_phrase = f"the {subject}'s {sender}"
        recipient_phrase = f"the {subject}'s {recipient}"
    elif rel.kind == SUBJECT_IS_RECIPIENT:
        subject = recipient
        sender_phrase = f"the {subject}'s {sender}"
        recipient_phrase = f"the {recipient}"
    elif rel.kind == SUBJECT_IS_SENDER:
        subject = sender
        sender_phrase = f"the {sender}"
        recipient_phrase = f"the {subject}'s {recipient}"
    else:
        subject = "person"
        sender_phrase = f"the {sender}"
        recipient_phrase = f"the {recipient}"
    tp = schema.tp(norm.transmission_principle)
    if tp.text is None:
        raise ValidationError(f"transmission principle {tp.id!r} has no rendering text")
    tp_phrase = tp.text.format(sender=sender, recipient=recipient, subject=subject).strip()
    return {
        "sender": sender_phrase,
        "subject": f"the {subject}'s",
        "attribute": schema.attribute_text(norm.attribute),
        "recipient": recipient_phrase,
        "transmission_principle": tp_phrase,
    }


def render_question(norm: CandidateNorm, schema: ContextSchema) -> str:
    f = question_fragments(norm, schema)
    tail = f" {f['transmission_principle']}" if f["transmission_principle"] else ""
    return (
        f"Is it acceptable for {f['sender']} to share {f['subject']} {f['attribute']} "
        f"with {f['recipient']}{tail}?"
    )


def generate_questions(schema: ContextSchema, restrictions: Sequence[Restriction] = ()) -> list[Question]:
    candidates = apply_restrictions(enumerate_candidates(schema), restrictions, schema)
    return [Question(n, render_question(n, schema)) for n in candidates]


def split_batches(questions: Sequence, batch_count: int, seed: int) -> list[list]:
    """Seeded shuffle followed by a floor/ceil split into ``batch_count`` batches."""
    if batch_count < 1:
        raise ValidationError("batch_count must be at least 1")
    if batch_count > len(questions):
        raise ValidationError(f"cannot split {len(questions)} questions into {batch_count} batches")
    order = list(questions)
    random.Random(seed).shuffle(order)
    size, extra = divmod(len(order), batch_count)
    batches, start = [], 0
    for i in range(batch_count):
        end = start + size + (1 if i < extra else 0)
        batches.append(order[start:end])
        start = end
    return batches


def write_questions_csv(questions: Iterable[Question]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(QUESTION_COLUMNS)
    for q in questions:
        n = q.norm
        writer.writerow(
            [
                q.norm_id,
                n.context,
                n.sender_role,
                n.recipient_role,
                str(n.subject_relation),
                n.attribute,
                n.transmission_principle,
                q.text,
            ]
        )
    return buf.getvalue()


def read_questions_csv(source_text: str) -> list[Question]:
    reader = csv.DictReader(io.StringIO(source_text))
    if reader.fieldnames is None or tuple(reader.fieldnames) != QUESTION_COLUMNS:
        raise ParseError(f"questions file must have columns {', '.join(QUESTION_COLUMNS)}")
    questions = []
    for row in reader:
        norm = CandidateNorm(
            row["context"],
            row["sender_role"],
            row["recipient_role"],
            SubjectRelation.parse(row["subject_relation"]),
            row["attribute"],
            row["transmission_principle"],
        )
        if norm.norm_id != row["norm_id"]:
            raise ValidationError(f"norm_id {row['norm_id']} does not match its fields")
        questions.append(Question(norm, row["question_text"]))
    return questions
