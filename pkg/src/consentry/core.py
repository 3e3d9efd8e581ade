"""Consent records, authorization queries, and the append-only ledger.

The ledger is the engine's knowledge base: an ontology, a clock, granted
consents, and recorded events. Everything is append-only. Withdrawing a
consent does not delete it; the record gains a withdrawal mark and the
decision procedure reads both.

Time semantics, shared by every caller:

* A consent authorizes collection at step t when t is at or after the
  grant and, if withdrawn, strictly before the withdrawal step. The step
  of withdrawal itself is no longer covered. Retroactivity never affects
  collection; neither flavor reaches back to void past collections, and
  both stop future ones.
* A consent authorizes access at step t_a to data collected at step t_c
  when t_a is at or after the grant, the collection step is inside the
  grant's reach (any step for a retroactive grant, otherwise t_c at or
  after the grant), and the withdrawal, if any, has not cut it off: a
  retroactive withdrawal at w blocks every access from w on (t_a < w
  required), a non-retroactive one only blocks access to data collected
  at w or later (t_c < w required).

An access query spans a collection interval. Each step of the interval
may be covered by a different consent; the query is authorized when no
step is left uncovered. There is no union reasoning within one step: a
single consent must cover a given collection step outright.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from . import chronology
from .chronology import StepInterval
from .errors import (
    AlreadyWithdrawnError,
    DuplicateLabelError,
    QueryError,
    UnknownConsentError,
    UnknownSubjectError,
)
from .ontology import ConceptGraph, ConceptKind


class ActionType(Enum):
    COLLECT = "collect"
    ACCESS = "access"


class Mode(Enum):
    """How much the decision may assume about concept overlap.

    GUARANTEED requires provable coverage: the consent's concepts must
    subsume the query's. POSSIBLE only requires non-contradiction: the
    concepts must not be provably disjoint. Guaranteed authorization
    always implies possible authorization.
    """

    GUARANTEED = "guaranteed"
    POSSIBLE = "possible"


class Reason(Enum):
    OK = "Ok"
    NO_MATCHING_CONSENT = "NoMatchingConsent"
    OUTSIDE_GRANT_WINDOW = "OutsideGrantWindow"
    WITHDRAWN_NON_RETRO = "WithdrawnNonRetro"
    WITHDRAWN_RETRO = "WithdrawnRetro"
    CONCEPT_UNSATISFIABLE = "ConceptUnsatisfiable"
    SUBJECT_MISMATCH = "SubjectMismatch"


# Lower rank wins when several causes explain a denial.
_DENIAL_RANK = {
    Reason.CONCEPT_UNSATISFIABLE: 0,
    Reason.SUBJECT_MISMATCH: 1,
    Reason.NO_MATCHING_CONSENT: 2,
    Reason.WITHDRAWN_RETRO: 3,
    Reason.WITHDRAWN_NON_RETRO: 4,
    Reason.OUTSIDE_GRANT_WINDOW: 5,
}


@dataclass(frozen=True)
class Withdrawal:
    step: int
    retroactive: bool


@dataclass
class ConsentRecord:
    """One grant, optionally marked withdrawn later. Never deleted."""

    id: int
    label: str | None
    data_concept: int
    subject: str
    recipient_concept: int
    granted_at: int
    grant_retroactive: bool
    withdrawal: Withdrawal | None = None

    def authorizes_collection(self, step: int) -> bool:
        if step < self.granted_at:
            return False
        return self.withdrawal is None or step < self.withdrawal.step

    def authorizes_access(self, collected_at: int, accessed_at: int) -> bool:
        if accessed_at < self.granted_at:
            return False
        if not self.grant_retroactive and collected_at < self.granted_at:
            return False
        w = self.withdrawal
        if w is None:
            return True
        return accessed_at < w.step if w.retroactive else collected_at < w.step


@dataclass(frozen=True)
class AuthzQuery:
    """One yes/no question against the ledger. Evaluation never mutates."""

    action: ActionType
    data_concept: int
    subject: str
    recipient_concept: int
    collected_interval: StepInterval
    access_at: int
    mode: Mode = Mode.GUARANTEED


@dataclass(frozen=True)
class Decision:
    """Outcome of one query: the verdict, who covered what, and why not."""

    authorized: bool
    coverage: Mapping[int, frozenset[int]]
    reason: Reason

    def __post_init__(self):
        object.__setattr__(self, "coverage", dict(self.coverage))


@dataclass(frozen=True)
class EventRecord:
    """A collection or access that actually happened, verdict attached.

    Events are recorded regardless of the verdict; the engine observes,
    it does not gate.
    """

    id: int
    action: ActionType
    data_concept: int
    subject: str
    recipient_concept: int
    occurred_at: int
    collected_interval: StepInterval | None  # access events only
    verdict: Decision


class Ledger:
    """Append-only knowledge base: ontology + clock + consents + events.

    Single writer assumed. Readers may snapshot `consents`/`events` freely
    since records are never removed or reordered.
    """

    def __init__(self, ontology: ConceptGraph | None = None):
        self.ontology = ontology if ontology is not None else ConceptGraph()
        self.now: int = 1
        self.consents: list[ConsentRecord] = []
        self.events: list[EventRecord] = []
        self._labels: dict[str, int] = {}
        self._subjects: set[str] = set()
        self._next_event = 1

    # -- clock and declarations ------------------------------------------

    def advance(self) -> int:
        self.now = chronology.advance(self.now)
        return self.now

    def declare_subject(self, subject: str) -> str:
        self._subjects.add(subject)
        return subject

    def knows_subject(self, subject: str) -> bool:
        return subject in self._subjects

    def declare_data(self, name: str, *parents: str) -> int:
        return self.ontology.declare_concept(name, ConceptKind.DATA, parents)

    def declare_recipient(self, name: str, *parents: str) -> int:
        return self.ontology.declare_concept(name, ConceptKind.RECIPIENT, parents)

    def declare_disjoint(self, *names: str) -> None:
        self.ontology.declare_disjoint(names)

    def declare_equivalent(self, a: str, b: str) -> None:
        # Concepts that recorded events classify must stay satisfiable.
        self.ontology.declare_equivalent(a, b, protected=self._event_concepts())

    def _event_concepts(self) -> set[int]:
        used: set[int] = set()
        for ev in self.events:
            used.add(ev.data_concept)
            used.add(ev.recipient_concept)
        return used

    # -- consents ----------------------------------------------------------

    def grant(self, data: int | str, subject: str, recipient: int | str,
              retroactive: bool = False, label: str | None = None) -> int:
        """Record a consent effective from the current step. Returns its id."""
        data_id = self.ontology.resolve(data, ConceptKind.DATA)
        recipient_id = self.ontology.resolve(recipient, ConceptKind.RECIPIENT)
        if label is not None:
            if label in self._labels:
                raise DuplicateLabelError(f"consent label already in use: :{label}")
        self.declare_subject(subject)
        record = ConsentRecord(
            id=len(self.consents),
            label=label,
            data_concept=data_id,
            subject=subject,
            recipient_concept=recipient_id,
            granted_at=self.now,
            grant_retroactive=retroactive,
        )
        self.consents.append(record)
        if label is not None:
            self._labels[label] = record.id
        return record.id

    def consent(self, ref: int | str) -> ConsentRecord:
        """Find a consent by id or label."""
        if isinstance(ref, str):
            if ref not in self._labels:
                raise UnknownConsentError(f":{ref}")
            return self.consents[self._labels[ref]]
        if not 0 <= ref < len(self.consents):
            raise UnknownConsentError(ref)
        return self.consents[ref]

    def withdraw(self, ref: int | str, retroactive: bool = False) -> ConsentRecord:
        """Mark a consent withdrawn at the current step."""
        record = self.consent(ref)
        if record.withdrawal is not None:
            raise AlreadyWithdrawnError(
                f"consent {record.label or record.id} was already withdrawn "
                f"at {chronology.format_step(record.withdrawal.step)}"
            )
        record.withdrawal = Withdrawal(self.now, retroactive)
        return record

    # -- queries -----------------------------------------------------------

    def collect_query(self, data: int | str, subject: str, recipient: int | str,
                      mode: Mode = Mode.GUARANTEED) -> AuthzQuery:
        """Ask about collecting right now."""
        return AuthzQuery(
            action=ActionType.COLLECT,
            data_concept=self.ontology.resolve(data, ConceptKind.DATA),
            subject=subject,
            recipient_concept=self.ontology.resolve(recipient, ConceptKind.RECIPIENT),
            collected_interval=StepInterval.single(self.now),
            access_at=self.now,
            mode=mode,
        )

    def access_query(self, data: int | str, subject: str, recipient: int | str,
                     collected_interval: StepInterval | None = None,
                     mode: Mode = Mode.GUARANTEED) -> AuthzQuery:
        """Ask about accessing, right now, data collected over an interval.

        With no interval given the query spans all history, [T1, now+1).
        """
        interval = collected_interval or StepInterval(1, self.now + 1)
        return AuthzQuery(
            action=ActionType.ACCESS,
            data_concept=self.ontology.resolve(data, ConceptKind.DATA),
            subject=subject,
            recipient_concept=self.ontology.resolve(recipient, ConceptKind.RECIPIENT),
            collected_interval=interval,
            access_at=self.now,
            mode=mode,
        )

    def check(self, query: AuthzQuery) -> Decision:
        """Decide a query against the current ledger. Pure: no state changes."""
        graph = self.ontology
        graph.resolve(query.data_concept, ConceptKind.DATA)
        graph.resolve(query.recipient_concept, ConceptKind.RECIPIENT)
        if not self.knows_subject(query.subject):
            raise UnknownSubjectError(query.subject)
        self._validate_query_shape(query)

        if graph.is_unsatisfiable(query.data_concept) or graph.is_unsatisfiable(
            query.recipient_concept
        ):
            empty = {s: frozenset() for s in query.collected_interval.steps()}
            return Decision(False, empty, Reason.CONCEPT_UNSATISFIABLE)

        matching = [c for c in self.consents if self._matches(c, query)]
        coverage: dict[int, frozenset[int]] = {}
        for step in query.collected_interval.steps():
            if query.action is ActionType.COLLECT:
                ids = [c.id for c in matching if c.authorizes_collection(step)]
            else:
                ids = [c.id for c in matching if c.authorizes_access(step, query.access_at)]
            coverage[step] = frozenset(ids)

        if all(coverage.values()):
            return Decision(True, coverage, Reason.OK)
        return Decision(False, coverage, self._denial_reason(query, matching, coverage))

    def _validate_query_shape(self, query: AuthzQuery) -> None:
        interval = query.collected_interval
        if not interval.bounded:
            raise QueryError("queries need a bounded collection interval")
        if query.action is ActionType.COLLECT:
            if interval.end != interval.start + 1:
                raise QueryError("collection queries cover exactly one step")
        elif interval.last > query.access_at:
            raise QueryError(
                f"collection interval {interval} reaches past access step "
                f"{chronology.format_step(query.access_at)}"
            )

    def _matches(self, consent: ConsentRecord, query: AuthzQuery) -> bool:
        """Concept and subject applicability, before any time reasoning."""
        if consent.subject != query.subject:
            return False
        graph = self.ontology
        if query.mode is Mode.GUARANTEED:
            return graph.subsumes(consent.data_concept, query.data_concept) and \
                graph.subsumes(consent.recipient_concept, query.recipient_concept)
        # Possible mode: nothing may rule the overlap out. are_disjoint already
        # treats an unsatisfiable side as disjoint from everything.
        return not graph.are_disjoint(consent.data_concept, query.data_concept) and \
            not graph.are_disjoint(consent.recipient_concept, query.recipient_concept)

    def _concept_match(self, consent: ConsentRecord, query: AuthzQuery) -> bool:
        graph = self.ontology
        if query.mode is Mode.GUARANTEED:
            return graph.subsumes(consent.data_concept, query.data_concept) and \
                graph.subsumes(consent.recipient_concept, query.recipient_concept)
        return not graph.are_disjoint(consent.data_concept, query.data_concept) and \
            not graph.are_disjoint(consent.recipient_concept, query.recipient_concept)

    def _denial_reason(self, query: AuthzQuery, matching: list[ConsentRecord],
                       coverage: dict[int, frozenset[int]]) -> Reason:
        """Pick the most informative explanation for a denial.

        When applicable consents exist, the denial is a timing story: report
        the dominant failure cause across uncovered steps (retroactive
        withdrawal over non-retroactive over a plain grant-window miss).
        Only when no consent even matches the concepts and subject do the
        structural reasons apply.
        """
        if matching:
            causes: set[Reason] = set()
            for step, covered in coverage.items():
                if covered:
                    continue
                for c in matching:
                    causes.update(self._failure_causes(c, query, step))
            return min(causes, key=_DENIAL_RANK.__getitem__)
        if any(
            c.subject != query.subject and self._concept_match(c, query)
            for c in self.consents
        ):
            return Reason.SUBJECT_MISMATCH
        return Reason.NO_MATCHING_CONSENT

    @staticmethod
    def _failure_causes(consent: ConsentRecord, query: AuthzQuery,
                        step: int) -> Iterable[Reason]:
        causes = []
        w = consent.withdrawal
        if query.action is ActionType.COLLECT:
            if step < consent.granted_at:
                causes.append(Reason.OUTSIDE_GRANT_WINDOW)
            if w is not None and step >= w.step:
                causes.append(
                    Reason.WITHDRAWN_RETRO if w.retroactive else Reason.WITHDRAWN_NON_RETRO
                )
        else:
            if query.access_at < consent.granted_at or (
                not consent.grant_retroactive and step < consent.granted_at
            ):
                causes.append(Reason.OUTSIDE_GRANT_WINDOW)
            if w is not None:
                blocked = query.access_at >= w.step if w.retroactive else step >= w.step
                if blocked:
                    causes.append(
                        Reason.WITHDRAWN_RETRO if w.retroactive else Reason.WITHDRAWN_NON_RETRO
                    )
        return causes

    # -- events --------------------------------------------------------------

    def record_event(self, action: ActionType, data: int | str, subject: str,
                     recipient: int | str,
                     collected_interval: StepInterval | None = None) -> EventRecord:
        """Record a collection or access at the current step, verdict attached."""
        data_id = self.ontology.resolve(data, ConceptKind.DATA)
        recipient_id = self.ontology.resolve(recipient, ConceptKind.RECIPIENT)
        self.declare_subject(subject)
        if action is ActionType.COLLECT:
            if collected_interval is not None:
                raise QueryError("collection events do not take a collected interval")
            interval = None
            query = AuthzQuery(
                ActionType.COLLECT, data_id, subject, recipient_id,
                StepInterval.single(self.now), self.now,
            )
        else:
            interval = collected_interval or StepInterval(1, self.now + 1)
            if not interval.bounded or interval.last > self.now:
                raise QueryError(
                    f"access event at {chronology.format_step(self.now)} cannot "
                    f"cover data collected in the future ({interval})"
                )
            query = AuthzQuery(
                ActionType.ACCESS, data_id, subject, recipient_id, interval, self.now,
            )
        verdict = self.check(query)
        event = EventRecord(
            id=self._next_event,
            action=action,
            data_concept=data_id,
            subject=subject,
            recipient_concept=recipient_id,
            occurred_at=self.now,
            collected_interval=interval,
            verdict=verdict,
        )
        self._next_event += 1
        self.events.append(event)
        return event


def authorized_region(consent: ConsentRecord, horizon: int) -> set[tuple[int, int]]:
    """All (collection step, access step) pairs the consent covers up to horizon."""
    return {
        (t_c, t_a)
        for t_a in range(1, horizon + 1)
        for t_c in range(1, t_a + 1)
        if consent.authorizes_access(t_c, t_a)
    }


def purpose_compatible(graph: ConceptGraph, existing_data: int, existing_recipient: int,
                       new_data: int, new_recipient: int) -> bool:
    """True when a new purpose stays within an existing one on both axes."""
    return graph.subsumes(existing_data, new_data) and \
        graph.subsumes(existing_recipient, new_recipient)
