"""Regenerate the synthetic classroom response fixture.

Respondents are split over the survey batches exactly as ``cinorms gen``
splits them (seed 0, 15 batches), three respondents per batch.  Each answer
is drawn from a per-norm Yes probability, so the file is reproducible from
the seed below.
"""

from __future__ import annotations

import csv
import io
import random
from pathlib import Path

from cinorms.normgen import generate_questions, parse_restrictions, split_batches
from cinorms.schema import SUBJECT_IS_RECIPIENT, load_schema

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "cinorms" / "fixtures"
SEED = 2024
BATCHES = 15
PER_BATCH = 3

LIKED = {
    ("professor", "ta", "test_result"),
    ("professor", "ta", "grade"),
    ("ta", "professor", "attendance"),
    ("professor", "chair", "attendance"),
    ("registrar", "professor", "grade"),
}
DISLIKED = {
    ("professor", "student", "test_result"),
    ("professor", "student", "grade"),
    ("ta", "chair", "attendance"),
    ("student", "student", "grade"),
}


def yes_probability(norm) -> float:
    key = (norm.sender_role, norm.recipient_role, norm.attribute)
    if norm.subject_relation.kind == SUBJECT_IS_RECIPIENT:
        return 0.8
    if key in LIKED:
        return 0.9
    if key in DISLIKED:
        return 0.05
    return 0.25


def main() -> None:
    schema = load_schema((FIXTURES / "classroom.json").read_text())
    restrictions = parse_restrictions((FIXTURES / "classroom_restrictions.json").read_text())
    questions = generate_questions(schema, restrictions)
    batches = split_batches(questions, BATCHES, seed=0)
    rng = random.Random(SEED)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["respondent_id", "norm_id", "answer"])
    rid = 0
    for batch in batches:
        for _ in range(PER_BATCH):
            rid += 1
            for q in batch:
                p = yes_probability(q.norm)
                roll = rng.random()
                if roll < p:
                    answer = "Y"
                elif rng.random() < 0.15:
                    answer = rng.choice(["DMS1", "DMS2", "DMS3"])
                else:
                    answer = "N"
                w.writerow([f"r{rid:03d}", q.norm_id, answer])
    (FIXTURES / "classroom_responses.csv").write_text(buf.getvalue())


if __name__ == "__main__":
    main()
