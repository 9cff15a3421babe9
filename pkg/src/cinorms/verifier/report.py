"""Human and machine readable violation reports."""

from __future__ import annotations

import json
from typing import Mapping, Sequence

from cinorms.normgen import CandidateNorm
from cinorms.schema import ContextSchema
from cinorms.verifier.checks import SEMANTIC, Violation
from cinorms.verifier.profiles import format_profile


def _who(v: Violation, actor: str, schema: ContextSchema | None) -> str:
    return f"{actor} {format_profile(v.profile_of(actor), schema)}"


def narrative(v: Violation, schema: ContextSchema | None = None, norms: Mapping[str, CandidateNorm] | None = None) -> str:
    subject = _who(v, v.subject, schema)
    if v.kind == SEMANTIC:
        norm = (norms or {}).get(v.norm_id or "")
        label = f"{v.norm_id} ({norm.describe()})" if norm else v.norm_id
        hop = v.direct
        by = ", ".join(v.implicated) or "no rule"
        return (
            f"disapproved norm {label} is derivable: {_who(v, hop.sender, schema)} may share "
            f"the {v.attribute} of {subject} with {_who(v, hop.recipient, schema)} "
            f"under {hop.transmission_principle}; allowed by {by}"
        )
    steps = "; ".join(
        f"{_who(v, h.sender, schema)} may send it to {_who(v, h.recipient, schema)}"
        + (f" under {h.transmission_principle}" if v.transmission_principle is None else "")
        for h in v.chain
    )
    tp = v.transmission_principle or "any principle"
    return (
        f"transitivity gap for the {v.attribute} of {subject} under {tp}: {steps}; "
        f"but {v.direct.sender} may not send it to {v.direct.recipient} directly"
    )


def to_record(v: Violation) -> dict:
    return {
        "kind": v.kind,
        "norm_id": v.norm_id,
        "context": v.context,
        "attribute": v.attribute,
        "transmission_principle": v.transmission_principle,
        "subject": v.subject,
        "actors": {name: sorted(prof) for name, prof in v.actors},
        "chain": [
            {"sender": h.sender, "recipient": h.recipient, "transmission_principle": h.transmission_principle, "rules": list(h.rules)}
            for h in v.chain
        ],
        "direct": {"sender": v.direct.sender, "recipient": v.direct.recipient},
        "implicated": list(v.implicated),
        "facts": [f"{a}." for a in v.facts()],
    }


def json_report(semantic: Sequence[Violation], transitivity: Sequence[Violation]) -> str:
    doc = {
        "semantic": [to_record(v) for v in semantic],
        "transitivity": [to_record(v) for v in transitivity],
        "summary": {"semantic": len(semantic), "transitivity": len(transitivity)},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def text_report(
    semantic: Sequence[Violation],
    transitivity: Sequence[Violation],
    schema: ContextSchema | None = None,
    norms: Mapping[str, CandidateNorm] | None = None,
) -> str:
    lines = [f"semantic violations: {len(semantic)}", f"transitivity violations: {len(transitivity)}"]
    for title, items in (("semantic", semantic), ("transitivity", transitivity)):
        if not items:
            continue
        lines.append("")
        lines.append(f"[{title}]")
        for i, v in enumerate(items, 1):
            lines.append(f"{i}. {narrative(v, schema, norms)}")
            lines.append("   witness: " + " ".join(f"{a}." for a in v.facts()))
    return "\n".join(lines) + "\n"
