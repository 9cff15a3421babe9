"""Space-based access control: a global fact space whose views are defined by ``canView``.

Posts are never addressed to anyone.  Authors publish posts into the space,
subjects publish consent facts, and a viewer sees exactly the posts for which
``canView(ctx, viewer, post)`` is derivable from the approved rules.

Persistence is an append-only log of facts in the Datalog surface syntax::

    inrole(classroom, bob, student).
    post(classroom, p1, steve, bob, grade, none).
    payload(classroom, p1, 'midterm: B+').
    repost_of(classroom, p2, p1).
    consent(classroom, bob, p1).

Replaying the log in order reconstructs the space.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from cinorms.errors import ValidationError
from cinorms.logic.compiler import canview_rules
from cinorms.logic.engine import Model, evaluate
from cinorms.logic.parser import parse_program
from cinorms.logic.terms import Atom, DatalogProgram, Rule
from cinorms.schema import ContextSchema


class SpaceError(ValidationError):
    pass


@dataclass(frozen=True)
class Post:
    context: str
    post_id: str
    author: str
    subject: str
    attribute: str
    transmission_principle: str
    payload: str = ""
    created_at: int = 0
    repost_of: str | None = None

    def fact(self) -> Atom:
        return Atom.ground(
            "post",
            (self.context, self.post_id, self.author, self.subject, self.attribute, self.transmission_principle),
        )


@dataclass(frozen=True)
class ConsentFact:
    context: str
    granter: str
    post_id: str

    def fact(self) -> Atom:
        return Atom.ground("consent", (self.context, self.granter, self.post_id))


@dataclass
class _State:
    roles: dict[str, frozenset] = field(default_factory=dict)
    posts: dict[str, Post] = field(default_factory=dict)
    consents: list[ConsentFact] = field(default_factory=list)
    clock: int = 0


class InformationSpace:
    """Posts, consent facts and role assignments for one context.

    Mutations are serialized by an internal lock; reads evaluate against a
    cached fixpoint that every mutation invalidates.
    """

    def __init__(self, schema: ContextSchema, approved: Sequence[Rule] = (), log_path: str | Path | None = None):
        self.schema = schema
        self.log_path = Path(log_path) if log_path is not None else None
        self._lock = threading.RLock()
        self._state = _State()
        self._model: Model | None = None
        self._rules: tuple[Rule, ...] = ()
        self.set_rules(approved)

    # -- configuration ----------------------------------------------------

    def set_rules(self, approved: Sequence[Rule]) -> None:
        """Install a new approved rule set; later views reflect it at once."""
        with self._lock:
            self._rules = tuple(approved) + tuple(canview_rules(self.schema))
            self._model = None

    @property
    def rules(self) -> tuple[Rule, ...]:
        return self._rules

    @property
    def context(self) -> str:
        return self.schema.context_id

    # -- logging ----------------------------------------------------------

    def _log(self, atoms: Iterable[Atom]) -> None:
        if self.log_path is None:
            return
        with self.log_path.open("a", encoding="utf-8") as fh:
            for atom in atoms:
                fh.write(f"{atom}.\n")

    # -- mutations --------------------------------------------------------

    def assign(self, actor: str, roles: Iterable[str]) -> frozenset:
        """Give ``actor`` the given roles (plus implied ones); returns the resulting profile."""
        roles = list(roles)
        for r in roles:
            if r not in self.schema.role_ids:
                raise SpaceError(f"unknown role {r!r}")
        with self._lock:
            current = self._state.roles.get(actor, frozenset())
            profile = self.schema.role_closure(current | set(roles))
            clash = self.schema.ontology.conflicts(profile)
            if clash:
                a, b = clash[0]
                raise SpaceError(f"actor {actor!r} cannot hold both {a!r} and {b!r}")
            added = sorted(profile - current, key=self.schema.role_ids.index)
            self._state.roles[actor] = profile
            self._state.clock += len(added)  # one tick per logged fact keeps replay exact
            self._model = None
            self._log(Atom.ground("inrole", (self.context, actor, r)) for r in added)
            return profile

    def _validate_post(self, context: str, post_id: str, attribute: str, tp: str, payload: str) -> None:
        if context != self.context:
            raise SpaceError(f"unknown context {context!r}")
        if post_id in self._state.posts:
            raise SpaceError(f"duplicate post id {post_id!r}")
        if attribute not in self.schema.attribute_ids:
            raise SpaceError(f"unknown attribute {attribute!r}")
        if tp not in self.schema.tp_ids:
            raise SpaceError(f"unknown transmission principle {tp!r}")
        if "\n" in payload or "\r" in payload:
            raise SpaceError("payload must be a single line")

    def _append(self, post: Post) -> Post:
        self._state.clock += 1
        stamped = Post(
            post.context, post.post_id, post.author, post.subject, post.attribute,
            post.transmission_principle, post.payload, self._state.clock, post.repost_of,
        )
        self._state.posts[post.post_id] = stamped
        self._model = None
        entries = [stamped.fact()]
        if stamped.payload:
            entries.append(Atom.ground("payload", (self.context, stamped.post_id, stamped.payload)))
        if stamped.repost_of is not None:
            entries.append(Atom.ground("repost_of", (self.context, stamped.post_id, stamped.repost_of)))
        self._log(entries)
        return stamped

    def publish(self, post: Post) -> Post:
        """Add a post to the space; ``created_at`` is assigned by the space."""
        with self._lock:
            self._validate_post(post.context, post.post_id, post.attribute, post.transmission_principle, post.payload)
            if post.repost_of is not None and post.repost_of not in self._state.posts:
                raise SpaceError(f"unknown post {post.repost_of!r}")
            return self._append(post)

    def post(self, post_id: str, author: str, subject: str, attribute: str, tp: str, payload: str = "") -> Post:
        return self.publish(Post(self.context, post_id, author, subject, attribute, tp, payload))

    def add_consent(self, granter: str, post_id: str) -> ConsentFact:
        with self._lock:
            if post_id not in self._state.posts:
                raise SpaceError(f"unknown post {post_id!r}")
            fact = ConsentFact(self.context, granter, post_id)
            if fact not in self._state.consents:
                self._state.consents.append(fact)
                self._state.clock += 1
                self._model = None
                self._log([fact.fact()])
            return fact

    def repost(self, reposter: str, original_id: str, new_id: str) -> Post:
        """Re-publish a visible post under the reposter's authorship."""
        with self._lock:
            original = self.get(original_id)
            if new_id in self._state.posts:
                raise SpaceError(f"duplicate post id {new_id!r}")
            if not self.can_view(reposter, original_id):
                raise SpaceError(f"{reposter!r} cannot view {original_id!r} and so cannot repost it")
            clone = Post(
                self.context, new_id, reposter, original.subject, original.attribute,
                original.transmission_principle, original.payload, 0, original_id,
            )
            return self.publish(clone)

    # -- reads ------------------------------------------------------------

    def get(self, post_id: str) -> Post:
        try:
            return self._state.posts[post_id]
        except KeyError:
            raise SpaceError(f"unknown post {post_id!r}") from None

    def posts(self) -> list[Post]:
        with self._lock:
            return list(self._state.posts.values())

    def roles_of(self, actor: str) -> frozenset:
        return self._state.roles.get(actor, frozenset())

    def actors(self) -> list[str]:
        return sorted(self._state.roles)

    def facts(self) -> list[Atom]:
        """The first view: every fact in the space."""
        with self._lock:
            out = [
                Atom.ground("inrole", (self.context, actor, r))
                for actor, prof in self._state.roles.items()
                for r in sorted(prof, key=self.schema.role_ids.index)
            ]
            out.extend(p.fact() for p in self._state.posts.values())
            out.extend(c.fact() for c in self._state.consents)
            return out

    def program(self) -> DatalogProgram:
        return DatalogProgram(tuple(self.facts()), self._rules)

    def model(self) -> Model:
        with self._lock:
            if self._model is None:
                self._model = evaluate(self.program())
            return self._model

    def can_view(self, viewer: str, post_id: str) -> bool:
        with self._lock:
            self.get(post_id)
            return (self.context, viewer, post_id) in self.model().relation("canView")

    def view_query(
        self,
        viewer: str,
        *,
        attribute: str | None = None,
        author: str | None = None,
        subject: str | None = None,
    ) -> list[str]:
        """Ids of the posts ``viewer`` may see, in publication order, optionally filtered."""
        with self._lock:
            visible = {row[2] for row in self.model().relation("canView") if row[0] == self.context and row[1] == viewer}
            return [
                p.post_id
                for p in self._state.posts.values()
                if p.post_id in visible
                and (attribute is None or p.attribute == attribute)
                and (author is None or p.author == author)
                and (subject is None or p.subject == subject)
            ]

    # -- persistence ------------------------------------------------------

    @classmethod
    def replay(
        cls,
        schema: ContextSchema,
        approved: Sequence[Rule],
        log_text: str,
        log_path: str | Path | None = None,
    ) -> InformationSpace:
        """Rebuild a space from log text; ``log_path`` (if given) receives later mutations."""
        space = cls(schema, approved)
        program = parse_program(log_text, fragment=False)
        if program.rules or program.queries:
            raise SpaceError("space log may contain facts only")
        payloads: dict[str, str] = {}
        reposts: dict[str, str] = {}
        for atom in program.facts:
            if atom.pred == "payload":
                payloads[atom.values()[1]] = atom.values()[2]
            elif atom.pred == "repost_of":
                reposts[atom.values()[1]] = atom.values()[2]
        for atom in program.facts:
            vals = atom.values()
            if vals and vals[0] != schema.context_id:
                raise SpaceError(f"log entry {atom} is for another context")
            if atom.pred == "inrole":
                space.assign(vals[1], [vals[2]])
            elif atom.pred == "post":
                _, pid, author, subject, attr, tp = vals
                space.publish(Post(schema.context_id, pid, author, subject, attr, tp, payloads.get(pid, ""), 0, reposts.get(pid)))
            elif atom.pred == "consent":
                space.add_consent(vals[1], vals[2])
            elif atom.pred not in ("payload", "repost_of"):
                raise SpaceError(f"unexpected log entry {atom}")
        space.log_path = Path(log_path) if log_path is not None else None
        return space

    @classmethod
    def open(cls, schema: ContextSchema, approved: Sequence[Rule], log_path: str | Path) -> InformationSpace:
        """Replay ``log_path`` if it exists and keep appending to it."""
        path = Path(log_path)
        text = path.read_text(encoding="utf-8") if path.exists() else ""
        return cls.replay(schema, approved, text, path)
