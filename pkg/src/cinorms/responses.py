"""Crowd response ingestion and the approval / divergence metrics.

All ratios are :class:`fractions.Fraction` so threshold comparisons are exact.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from cinorms.errors import ParseError, ValidationError

STRICT = "strict"
NONSTRICT = "nonstrict"


class AnswerKind(enum.Enum):
    YES = "Y"
    NO = "N"
    DMS1 = "DMS1"  # sender unlikely to have the information
    DMS2 = "DMS2"  # receiver would already have the information
    DMS3 = "DMS3"  # question is ambiguous

    @property
    def is_dms(self) -> bool:
        return self in (AnswerKind.DMS1, AnswerKind.DMS2, AnswerKind.DMS3)


class ResponseError(ValidationError):
    pass


@dataclass(frozen=True)
class Tally:
    yes: int = 0
    no: int = 0
    dms: int = 0

    @property
    def total(self) -> int:
        return self.yes + self.no + self.dms


@dataclass
class ResponseMatrix:
    questions: tuple[str, ...]
    respondents: tuple[str, ...]
    answers: Mapping[tuple[str, str], AnswerKind]
    _by_question: dict = field(init=False, repr=False, compare=False)
    _by_respondent: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._by_question = {q: {} for q in self.questions}
        self._by_respondent = {r: {} for r in self.respondents}
        for (q, r), kind in self.answers.items():
            self._by_question[q][r] = kind
            self._by_respondent[r][q] = kind

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, str, AnswerKind]], questions: Sequence[str]) -> ResponseMatrix:
        known = set(questions)
        answers: dict[tuple[str, str], AnswerKind] = {}
        respondents: dict[str, None] = {}
        for respondent, norm_id, kind in rows:
            if norm_id not in known:
                raise ResponseError(f"response references unknown norm_id {norm_id!r}")
            key = (norm_id, respondent)
            if key in answers:
                raise ResponseError(f"duplicate answer by {respondent!r} to {norm_id!r}")
            answers[key] = kind
            respondents.setdefault(respondent)
        return cls(tuple(questions), tuple(respondents), answers)

    def question_answers(self, norm_id: str) -> dict[str, AnswerKind]:
        try:
            return self._by_question[norm_id]
        except KeyError:
            raise ResponseError(f"unknown question {norm_id!r}") from None

    def respondent_answers(self, respondent_id: str) -> dict[str, AnswerKind]:
        try:
            return self._by_respondent[respondent_id]
        except KeyError:
            raise ResponseError(f"unknown respondent {respondent_id!r}") from None

    def tally(self, norm_id: str) -> Tally:
        return _tally(self.question_answers(norm_id).values())

    def respondent_tally(self, respondent_id: str) -> Tally:
        return _tally(self.respondent_answers(respondent_id).values())

    def restricted_to(self, questions: Sequence[str]) -> ResponseMatrix:
        keep = set(questions)
        rows = [(r, q, k) for (q, r), k in self.answers.items() if q in keep]
        respondents = [r for r in self.respondents if any(q in keep for q in self._by_respondent[r])]
        answers = {(q, r): k for r, q, k in rows}
        return ResponseMatrix(tuple(q for q in self.questions if q in keep), tuple(respondents), answers)


def _tally(kinds) -> Tally:
    yes = no = dms = 0
    for kind in kinds:
        if kind is AnswerKind.YES:
            yes += 1
        elif kind is AnswerKind.NO:
            no += 1
        else:
            dms += 1
    return Tally(yes, no, dms)


def ingest_responses(source_text: str, questions: Sequence[str]) -> ResponseMatrix:
    """Read a ``respondent_id,norm_id,answer`` CSV into a matrix."""
    reader = csv.DictReader(io.StringIO(source_text))
    expected = {"respondent_id", "norm_id", "answer"}
    if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
        raise ParseError("response file must have columns respondent_id, norm_id, answer")

    def rows():
        for line_no, row in enumerate(reader, start=2):
            token = (row["answer"] or "").strip()
            try:
                kind = AnswerKind(token)
            except ValueError:
                raise ResponseError(f"line {line_no}: malformed answer token {token!r}") from None
            yield row["respondent_id"].strip(), row["norm_id"].strip(), kind

    return ResponseMatrix.from_rows(rows(), questions)


def norm_approval(matrix: ResponseMatrix, norm_id: str) -> Fraction:
    t = matrix.tally(norm_id)
    if t.total == 0:
        raise ResponseError(f"question {norm_id!r} has no answers")
    return Fraction(t.yes, t.total)


def norm_disapproval(matrix: ResponseMatrix, norm_id: str) -> Fraction:
    t = matrix.tally(norm_id)
    if t.total == 0:
        raise ResponseError(f"question {norm_id!r} has no answers")
    return Fraction(t.no, t.total)


def user_approval(matrix: ResponseMatrix, respondent_id: str) -> Fraction:
    t = matrix.respondent_tally(respondent_id)
    if t.total == 0:
        raise ResponseError(f"respondent {respondent_id!r} answered nothing")
    return Fraction(t.yes, t.total)


@dataclass(frozen=True)
class SelectionResult:
    threshold: Fraction
    mode: str
    approved: frozenset[str]
    disapproved: frozenset[str]
    undecided: frozenset[str]
    ties: frozenset[str]

    def community_bit(self, norm_id: str) -> int:
        return 1 if norm_id in self.approved else 0


def _passes(value: Fraction, threshold, mode: str) -> bool:
    if mode == STRICT:
        return value > threshold
    if mode == NONSTRICT:
        return value >= threshold
    raise ValueError(f"unknown comparison mode {mode!r}")


def select_norms(matrix: ResponseMatrix, threshold, mode: str = STRICT) -> SelectionResult:
    """Three-way split of the question set at ``threshold``.

    Approval is decided on the Yes-ratio alone.  A question not approved is
    disapproved when its No-ratio passes the same threshold; everything else,
    including unanswered questions, is undecided.
    """
    threshold = Fraction(threshold)
    if not 0 <= threshold <= 1:
        raise ValidationError(f"threshold {threshold} outside [0, 1]")
    approved, disapproved, undecided, ties = set(), set(), set(), set()
    for q in matrix.questions:
        t = matrix.tally(q)
        if t.total == 0:
            undecided.add(q)
            continue
        if t.yes == t.no:
            ties.add(q)
        if _passes(Fraction(t.yes, t.total), threshold, mode):
            approved.add(q)
        elif _passes(Fraction(t.no, t.total), threshold, mode):
            disapproved.add(q)
        else:
            undecided.add(q)
    return SelectionResult(
        threshold, mode, frozenset(approved), frozenset(disapproved), frozenset(undecided), frozenset(ties)
    )


def divergence(matrix: ResponseMatrix, selection: SelectionResult, respondent_id: str) -> int:
    """Number of answered questions where the respondent's Yes disagrees with the community bit."""
    answers = matrix.respondent_answers(respondent_id)
    total = 0
    for q, kind in answers.items():
        u = 1 if kind is AnswerKind.YES else 0
        total += selection.community_bit(q) ^ u
    return total


def sweep_divergence(matrix: ResponseMatrix, thresholds: Iterable, mode: str = STRICT) -> list[tuple[Fraction, Fraction]]:
    if not matrix.respondents:
        raise ResponseError("cannot sweep an empty response matrix")
    rows = []
    for t in thresholds:
        selection = select_norms(matrix, t, mode)
        total = sum(divergence(matrix, selection, r) for r in matrix.respondents)
        rows.append((Fraction(t), Fraction(total, len(matrix.respondents))))
    return rows


def percent_thresholds(step: int = 1) -> list[Fraction]:
    return [Fraction(p, 100) for p in range(0, 101, step)]


def quarantine_dms(matrix: ResponseMatrix, max_dms_ratio) -> ResponseMatrix:
    """Drop questions whose share of DMS answers exceeds ``max_dms_ratio``."""
    limit = Fraction(max_dms_ratio)
    keep = []
    for q in matrix.questions:
        t = matrix.tally(q)
        if t.total == 0 or Fraction(t.dms, t.total) <= limit:
            keep.append(q)
    return matrix.restricted_to(keep)


def fmt_ratio(value: Fraction, digits: int = 6) -> str:
    return f"{float(value):.{digits}f}"


def metrics_report(matrix: ResponseMatrix, selection: SelectionResult) -> tuple[str, str]:
    """Per-question and per-respondent CSV tables."""
    qbuf = io.StringIO()
    w = csv.writer(qbuf, lineterminator="\n")
    w.writerow(["norm_id", "yes", "no", "dms", "na", "nd", "status", "tie"])
    for q in matrix.questions:
        t = matrix.tally(q)
        if t.total:
            na, nd = fmt_ratio(Fraction(t.yes, t.total)), fmt_ratio(Fraction(t.no, t.total))
        else:
            na = nd = ""
        if q in selection.approved:
            status = "approved"
        elif q in selection.disapproved:
            status = "disapproved"
        else:
            status = "undecided"
        w.writerow([q, t.yes, t.no, t.dms, na, nd, status, int(q in selection.ties)])
    rbuf = io.StringIO()
    w = csv.writer(rbuf, lineterminator="\n")
    w.writerow(["respondent_id", "answered", "yes", "ua", "ds"])
    for r in matrix.respondents:
        t = matrix.respondent_tally(r)
        w.writerow([r, t.total, t.yes, fmt_ratio(user_approval(matrix, r)), divergence(matrix, selection, r)])
    return qbuf.getvalue(), rbuf.getvalue()


def sweep_report(rows: Sequence[tuple[Fraction, Fraction]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "normalized_ds"])
    for t, ds in rows:
        w.writerow([fmt_ratio(t, 2), fmt_ratio(ds)])
    return buf.getvalue()
