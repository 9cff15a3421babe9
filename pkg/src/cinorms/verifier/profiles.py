"""Role profiles: the possible combinations of roles one actor can hold."""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterable, Sequence

from cinorms.schema import ContextSchema

RoleProfile = frozenset  # implication-closed, conflict-free set of role ids


def profile_sort_key(schema: ContextSchema):
    order = {r: i for i, r in enumerate(schema.role_ids)}

    def key(profile: frozenset) -> tuple:
        return (len(profile), tuple(sorted(order[r] for r in profile)))

    return key


def build_profiles(schema: ContextSchema, k: int = 2) -> list[frozenset]:
    """Closures of every conflict-free base of at most ``k`` roles, deduplicated.

    Ordered by size, then by the schema position of the member roles.
    """
    if k < 1:
        raise ValueError("profile bound k must be at least 1")
    onto = schema.ontology
    found: set[frozenset] = set()
    for size in range(1, min(k, len(schema.role_ids)) + 1):
        for base in itertools.combinations(schema.role_ids, size):
            profile = onto.closure(base)
            if not onto.conflicts(profile):
                found.add(profile)
    return sorted(found, key=profile_sort_key(schema))


def format_profile(profile: Iterable[str], schema: ContextSchema | None = None) -> str:
    if schema is not None:
        order = {r: i for i, r in enumerate(schema.role_ids)}
        roles = sorted(profile, key=lambda r: order.get(r, len(order)))
    else:
        roles = sorted(profile)
    return "{" + ", ".join(roles) + "}"


class ProfileSpace:
    """Profiles plus fast lookups used by the symbolic checks."""

    def __init__(self, schema: ContextSchema, k: int = 2):
        self.schema = schema
        self.k = k
        self.profiles: list[frozenset] = build_profiles(schema, k)
        self.index = {p: i for i, p in enumerate(self.profiles)}
        self._smallest = lru_cache(maxsize=None)(self._find_smallest)
        self._mask = lru_cache(maxsize=None)(self._find_mask)

    def __len__(self) -> int:
        return len(self.profiles)

    def _find_smallest(self, required: frozenset) -> frozenset | None:
        for p in self.profiles:
            if required <= p:
                return p
        return None

    def smallest_containing(self, required: Iterable[str]) -> frozenset | None:
        """First profile (in canonical order) that holds every role in ``required``."""
        return self._smallest(frozenset(required))

    def _find_mask(self, required: frozenset) -> int:
        mask = 0
        for i, p in enumerate(self.profiles):
            if required <= p:
                mask |= 1 << i
        return mask

    def mask_containing(self, required: Iterable[str]) -> int:
        return self._mask(frozenset(required))

    def containing(self, required: Iterable[str]) -> Sequence[frozenset]:
        req = frozenset(required)
        return [p for p in self.profiles if req <= p]
