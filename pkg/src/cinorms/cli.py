"""Command line: gen, select, compile, verify, space and the chained pipeline.

Every stage recomputes what it needs from the inputs, so each command is a
pure function of its flags and files.  Exit codes: 0 success, 1 violations
found (verify / pipeline), 2 usage error, 3 input error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from cinorms.acspace import InformationSpace
from cinorms.errors import InputError
from cinorms.logic.compiler import canview_rules, compile_norms
from cinorms.logic.parser import parse_program
from cinorms.logic.terms import DatalogProgram, Rule, format_program
from cinorms.normgen import (
    CandidateNorm,
    Question,
    generate_questions,
    parse_restrictions,
    read_questions_csv,
    split_batches,
    write_questions_csv,
)
from cinorms.responses import (
    NONSTRICT,
    STRICT,
    ingest_responses,
    metrics_report,
    percent_thresholds,
    quarantine_dms,
    select_norms,
    sweep_divergence,
    sweep_report,
)
from cinorms.schema import ContextSchema, load_schema
from cinorms.verifier import (
    ProfileSpace,
    check_semantic_consistency,
    check_transitivity,
    export_epr,
    json_report,
    semantic_property,
    text_report,
    transitivity_property,
)

EXIT_OK, EXIT_FINDINGS, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3
OUT_ENV = "CI_NORMS_OUT"


@dataclass
class PipelineConfig:
    schema: Path
    restrictions: Path | None = None
    responses: Path | None = None
    threshold: Fraction = Fraction(1, 2)
    mode: str = STRICT
    profile_bound: int = 2
    tp_match: str = "exact"
    out: Path = Path("out")
    seed: int = 0
    batches: int = 15
    max_dms: Fraction | None = None
    sweep_step: int = 1
    export_epr: bool = False
    approved: Path | None = None
    disapproved: Path | None = None


def _read(path: Path | None, what: str) -> str:
    if path is None:
        raise InputError(f"no {what} file given")
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {what} file {str(path)!r}: {exc.strerror or exc}") from None


def _write(out: Path, name: str, text: str) -> Path:
    path = out / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _threshold(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid threshold {text!r}") from None
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"threshold {text} outside [0, 1]")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a value of at least 1, got {value}")
    return value


# -- stages ---------------------------------------------------------------

def load_inputs(cfg: PipelineConfig) -> tuple[ContextSchema, list[Question]]:
    schema = load_schema(_read(cfg.schema, "schema"))
    restrictions = parse_restrictions(_read(cfg.restrictions, "restrictions")) if cfg.restrictions else []
    return schema, generate_questions(schema, restrictions)


def stage_gen(cfg: PipelineConfig, schema: ContextSchema, questions: list[Question]) -> None:
    _write(cfg.out, "questions.csv", write_questions_csv(questions))
    batches = split_batches(questions, cfg.batches, cfg.seed)
    width = max(2, len(str(len(batches))))
    for i, batch in enumerate(batches, 1):
        _write(cfg.out, f"batches/batch_{i:0{width}d}.csv", write_questions_csv(batch))


@dataclass
class Decision:
    approved: list[CandidateNorm]
    disapproved: list[CandidateNorm]


def stage_select(cfg: PipelineConfig, schema: ContextSchema, questions: list[Question]) -> Decision:
    by_id = {q.norm_id: q for q in questions}
    matrix = ingest_responses(_read(cfg.responses, "responses"), [q.norm_id for q in questions])
    if cfg.max_dms is not None:
        matrix = quarantine_dms(matrix, cfg.max_dms)
    selection = select_norms(matrix, cfg.threshold, cfg.mode)
    qtable, rtable = metrics_report(matrix, selection)
    sweep = sweep_divergence(matrix, percent_thresholds(cfg.sweep_step), cfg.mode)
    _write(cfg.out, "question_metrics.csv", qtable)
    _write(cfg.out, "respondent_metrics.csv", rtable)
    _write(cfg.out, "sweep.csv", sweep_report(sweep))
    approved = [by_id[q] for q in matrix.questions if q in selection.approved]
    disapproved = [by_id[q] for q in matrix.questions if q in selection.disapproved]
    _write(cfg.out, "approved.csv", write_questions_csv(approved))
    _write(cfg.out, "disapproved.csv", write_questions_csv(disapproved))
    at_threshold = next((ds for t, ds in sweep if t == cfg.threshold), None)
    lines = [
        f"context: {schema.context_id}",
        f"threshold: {cfg.threshold} ({float(cfg.threshold):.2f}, {cfg.mode})",
        f"questions: {len(matrix.questions)}",
        f"respondents: {len(matrix.respondents)}",
        f"approved: {len(selection.approved)}",
        f"disapproved: {len(selection.disapproved)}",
        f"undecided: {len(selection.undecided)}",
        f"ties: {len(selection.ties)}",
    ]
    if at_threshold is not None:
        lines.append(f"normalized divergence: {float(at_threshold):.6f}")
    _write(cfg.out, "summary.txt", "\n".join(lines) + "\n")
    return Decision([q.norm for q in approved], [q.norm for q in disapproved])


def decide(cfg: PipelineConfig, schema: ContextSchema, questions: list[Question]) -> Decision:
    """Approved and disapproved norms, either from explicit norm files or from responses."""
    if cfg.approved is not None or cfg.disapproved is not None:
        approved = [q.norm for q in read_questions_csv(_read(cfg.approved, "approved norms"))] if cfg.approved else []
        disapproved = (
            [q.norm for q in read_questions_csv(_read(cfg.disapproved, "disapproved norms"))] if cfg.disapproved else []
        )
        return Decision(approved, disapproved)
    return stage_select(cfg, schema, questions)


def stage_compile(cfg: PipelineConfig, schema: ContextSchema, decision: Decision) -> list[Rule]:
    rules = compile_norms(decision.approved, schema)
    program = DatalogProgram((), tuple(rules) + tuple(canview_rules(schema)))
    _write(cfg.out, "privacy.dl", format_program(program))
    return rules


def stage_verify(cfg: PipelineConfig, schema: ContextSchema, decision: Decision, rules: list[Rule]) -> int:
    space = ProfileSpace(schema, cfg.profile_bound)
    semantic = check_semantic_consistency(rules, decision.disapproved, schema, space=space)
    transitive = check_transitivity(rules, schema, tp_match=cfg.tp_match, space=space)
    norms = {n.norm_id: n for n in decision.approved + decision.disapproved}
    _write(cfg.out, "violations.json", json_report(semantic, transitive))
    _write(cfg.out, "violations.txt", text_report(semantic, transitive, schema, norms))
    if cfg.export_epr:
        props = [(f"semantic {n.norm_id}", semantic_property(n)) for n in decision.disapproved]
        props.append((f"transitivity {cfg.tp_match}", transitivity_property(schema.context_id, cfg.tp_match)))
        _write(cfg.out, "epr.smt2", export_epr(rules, props, schema))
    print(f"semantic violations: {len(semantic)}; transitivity violations: {len(transitive)}")
    return EXIT_FINDINGS if semantic or transitive else EXIT_OK


# -- commands -------------------------------------------------------------

def cmd_gen(cfg: PipelineConfig) -> int:
    schema, questions = load_inputs(cfg)
    stage_gen(cfg, schema, questions)
    print(f"{len(questions)} questions written to {cfg.out}")
    return EXIT_OK


def cmd_select(cfg: PipelineConfig) -> int:
    schema, questions = load_inputs(cfg)
    decision = stage_select(cfg, schema, questions)
    print(f"approved {len(decision.approved)}, disapproved {len(decision.disapproved)}")
    return EXIT_OK


def cmd_compile(cfg: PipelineConfig) -> int:
    schema, questions = load_inputs(cfg)
    rules = stage_compile(cfg, schema, decide(cfg, schema, questions))
    print(f"{len(rules)} allowed rules written to {cfg.out / 'privacy.dl'}")
    return EXIT_OK


def cmd_verify(cfg: PipelineConfig) -> int:
    schema, questions = load_inputs(cfg)
    decision = decide(cfg, schema, questions)
    rules = stage_compile(cfg, schema, decision)
    return stage_verify(cfg, schema, decision, rules)


def cmd_pipeline(cfg: PipelineConfig) -> int:
    schema, questions = load_inputs(cfg)
    stage_gen(cfg, schema, questions)
    decision = decide(cfg, schema, questions)
    rules = stage_compile(cfg, schema, decision)
    return stage_verify(cfg, schema, decision, rules)


def _space(args) -> InformationSpace:
    schema = load_schema(_read(Path(args.schema), "schema"))
    out = Path(args.out)
    program_path = Path(args.program) if args.program else out / "privacy.dl"
    program = parse_program(_read(program_path, "compiled program"))
    approved = [r for r in program.rules if r.head.pred == "allowed"]
    log = Path(args.log) if args.log else out / "space.log"
    log.parent.mkdir(parents=True, exist_ok=True)
    return InformationSpace.open(schema, approved, log)


def cmd_space(args) -> int:
    space = _space(args)
    action = args.action
    if action == "assign":
        profile = space.assign(args.actor, args.roles)
        print(f"{args.actor}: {', '.join(sorted(profile))}")
    elif action == "post":
        p = space.post(args.id, args.author, args.subject, args.attribute, args.tp, args.payload)
        print(f"posted {p.post_id}")
    elif action == "consent":
        space.add_consent(args.granter, args.post)
        print(f"consent by {args.granter} for {args.post}")
    elif action == "repost":
        p = space.repost(args.reposter, args.original, args.id)
        print(f"reposted {p.repost_of} as {p.post_id}")
    elif action == "view":
        for pid in space.view_query(args.viewer, attribute=args.attribute, author=args.author, subject=args.subject):
            print(pid)
    return EXIT_OK


# -- argument parsing -----------------------------------------------------

def _default_out() -> str:
    return os.environ.get(OUT_ENV, "out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cinorms", description="Contextual-integrity norm pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    base = argparse.ArgumentParser(add_help=False)
    base.add_argument("--schema", required=True, help="schema JSON document")
    base.add_argument("--restrictions", help="restriction list (JSON)")
    base.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./out)")
    base.add_argument("--seed", type=int, default=0, help="seed for batch shuffling")

    gen = argparse.ArgumentParser(add_help=False)
    gen.add_argument("--batches", type=_positive, default=15, help="number of survey batches")

    select = argparse.ArgumentParser(add_help=False)
    select.add_argument("--responses", help="response CSV (respondent_id,norm_id,answer)")
    select.add_argument("--threshold", type=_threshold, default=Fraction(1, 2))
    select.add_argument("--mode", choices=[STRICT, NONSTRICT], default=STRICT)
    select.add_argument("--max-dms", type=_threshold, default=None, help="drop questions whose DMS share exceeds this")
    select.add_argument("--sweep-step", type=_positive, default=1, help="sweep step in percent")

    norms = argparse.ArgumentParser(add_help=False)
    norms.add_argument("--approved", help="approved norms (questions CSV); bypasses --responses")
    norms.add_argument("--disapproved", help="disapproved norms (questions CSV); bypasses --responses")

    verify = argparse.ArgumentParser(add_help=False)
    verify.add_argument("--profile-bound", type=_positive, default=2, help="max base roles per profile (k)")
    verify.add_argument("--tp-match", choices=["exact", "ignore"], default="exact")
    verify.add_argument("--export-epr", action="store_true", help="also write epr.smt2")

    sub.add_parser("gen", parents=[base, gen], help="generate questions and batches")
    sub.add_parser("select", parents=[base, select], help="aggregate responses and select norms")
    sub.add_parser("compile", parents=[base, select, norms], help="compile approved norms to Datalog")
    sub.add_parser("verify", parents=[base, select, norms, verify], help="check approved norms for violations")
    sub.add_parser("pipeline", parents=[base, gen, select, norms, verify], help="gen, select, compile and verify")

    space = sub.add_parser("space", help="information space operations")
    space.add_argument("--schema", required=True)
    space.add_argument("--out", default=None)
    space.add_argument("--program", help="compiled program (default OUT/privacy.dl)")
    space.add_argument("--log", help="space log (default OUT/space.log)")
    actions = space.add_subparsers(dest="action", required=True)
    a = actions.add_parser("assign")
    a.add_argument("actor")
    a.add_argument("roles", nargs="+")
    p = actions.add_parser("post")
    p.add_argument("--id", required=True)
    p.add_argument("--author", required=True)
    p.add_argument("--subject", required=True)
    p.add_argument("--attribute", required=True)
    p.add_argument("--tp", required=True)
    p.add_argument("--payload", default="")
    c = actions.add_parser("consent")
    c.add_argument("--granter", required=True)
    c.add_argument("--post", required=True)
    v = actions.add_parser("view")
    v.add_argument("--viewer", required=True)
    v.add_argument("--attribute")
    v.add_argument("--author")
    v.add_argument("--subject")
    r = actions.add_parser("repost")
    r.add_argument("--reposter", required=True)
    r.add_argument("--original", required=True)
    r.add_argument("--id", required=True)
    return parser


def config_from_args(args) -> PipelineConfig:
    return PipelineConfig(
        schema=Path(args.schema),
        restrictions=Path(args.restrictions) if getattr(args, "restrictions", None) else None,
        responses=Path(args.responses) if getattr(args, "responses", None) else None,
        threshold=getattr(args, "threshold", Fraction(1, 2)),
        mode=getattr(args, "mode", STRICT),
        profile_bound=getattr(args, "profile_bound", 2),
        tp_match=getattr(args, "tp_match", "exact"),
        out=Path(args.out),
        seed=args.seed,
        batches=getattr(args, "batches", 15),
        max_dms=getattr(args, "max_dms", None),
        sweep_step=getattr(args, "sweep_step", 1),
        export_epr=getattr(args, "export_epr", False),
        approved=Path(args.approved) if getattr(args, "approved", None) else None,
        disapproved=Path(args.disapproved) if getattr(args, "disapproved", None) else None,
    )


COMMANDS = {
    "gen": cmd_gen,
    "select": cmd_select,
    "compile": cmd_compile,
    "verify": cmd_verify,
    "pipeline": cmd_pipeline,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    if args.out is None:
        args.out = _default_out()
    try:
        if args.command == "space":
            return cmd_space(args)
        cfg = config_from_args(args)
        if args.command in ("select",) and cfg.responses is None:
            raise InputError("select needs --responses")
        return COMMANDS[args.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
