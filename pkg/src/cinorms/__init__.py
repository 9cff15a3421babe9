"""Contextual-integrity norm pipeline: generate, aggregate, compile, verify, enforce."""

__version__ = "0.1.0"
