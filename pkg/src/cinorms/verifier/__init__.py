"""Finite-model verification of approved norm sets."""

from cinorms.verifier.checks import (
    SEMANTIC,
    TP_EXACT,
    TP_IGNORE,
    TRANSITIVITY,
    FlowPattern,
    Hop,
    SchemaMismatchError,
    Violation,
    check_semantic_consistency,
    check_transitivity,
    replay,
    sort_violations,
)
from cinorms.verifier.oracle import UniverseTooLarge, brute_force_oracle
from cinorms.verifier.profiles import ProfileSpace, build_profiles, format_profile
from cinorms.verifier.report import json_report, narrative, text_report
from cinorms.verifier.smtlib import (
    export_epr,
    professor_grade_property,
    read_smtlib,
    semantic_property,
    transitivity_property,
)

__all__ = [
    "FlowPattern",
    "Hop",
    "ProfileSpace",
    "SEMANTIC",
    "SchemaMismatchError",
    "TP_EXACT",
    "TP_IGNORE",
    "TRANSITIVITY",
    "UniverseTooLarge",
    "Violation",
    "brute_force_oracle",
    "build_profiles",
    "check_semantic_consistency",
    "check_transitivity",
    "export_epr",
    "format_profile",
    "json_report",
    "narrative",
    "professor_grade_property",
    "read_smtlib",
    "replay",
    "semantic_property",
    "sort_violations",
    "text_report",
    "transitivity_property",
]
