"""Ex-post compliance scanning of consent and access logs.

Logs are line-delimited JSON, one record per line, ordered by timestamp
within each file. The consent log carries grant/withdraw records, the
access log carries collect/access records:

    {"timestamp": "2024-03-01T00:00:00Z", "action": "grant",
     "consent_id": "c1", "data_concept": "Location",
     "subject": "alice", "recipient_concept": "Advertiser",
     "retroactive": false}

    {"timestamp": "2024-03-12T09:30:00Z", "action": "access",
     "data_concept": "Location", "subject": "alice",
     "recipient_concept": "Advertiser",
     "collected_from": "2024-03-05T00:00:00Z",
     "collected_to": "2024-03-05T23:00:00Z"}

The scanner maps each wall-clock instant onto a 1-based step of fixed
duration starting at an epoch, replays the merged record stream through
a fresh ledger (consent records first at equal timestamps), and reports
every event whose verdict came back denied. Scanning is replay: the
same logs always yield the same report, and appending new records never
changes the verdicts already issued.

Unknown JSON fields are ignored so services can log extra context.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from heapq import merge as _heap_merge
from typing import Iterable, Union

from .chronology import StepInterval
from .core import ActionType, Ledger, Reason
from .errors import (
    ConsentryError,
    LogFormatError,
    LogOrderError,
    MonitorError,
)
from . import script as script_mod
from .script import (
    NewData, NewDisjoint, NewEquiv, NewRecipient, Statement, print_statement,
)

_LABEL_SAFE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

CONSENT_ACTIONS = ("grant", "withdraw")
ACCESS_ACTIONS = ("collect", "access")


def parse_instant(value: str) -> datetime:
    """Parse an ISO-8601 instant; naive values are taken as UTC."""
    if not isinstance(value, str):
        raise ValueError(f"expected an ISO-8601 timestamp, got {value!r}")
    raw = value.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    ts = datetime.fromisoformat(raw)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def map_to_step(epoch: datetime, instant: datetime, step_duration: timedelta) -> int:
    """Place a wall-clock instant onto the 1-based step grid."""
    if step_duration <= timedelta(0):
        raise ValueError(f"step duration must be positive, got {step_duration}")
    if instant < epoch:
        raise ValueError(f"instant {instant.isoformat()} precedes the epoch")
    return (instant - epoch) // step_duration + 1


@dataclass(frozen=True)
class ConsentLogRecord:
    line: int
    timestamp: datetime
    action: str  # "grant" | "withdraw"
    consent_id: str
    data_concept: str | None
    subject: str | None
    recipient_concept: str | None
    retroactive: bool


@dataclass(frozen=True)
class AccessLogRecord:
    line: int
    timestamp: datetime
    action: str  # "collect" | "access"
    data_concept: str
    subject: str
    recipient_concept: str
    collected_from: datetime | None
    collected_to: datetime | None


LogRecord = Union[ConsentLogRecord, AccessLogRecord]


def _record_lines(text: str) -> Iterable[tuple[int, dict]]:
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as err:
            raise LogFormatError(f"not valid JSON: {err.msg}", line_no) from None
        if not isinstance(payload, dict):
            raise LogFormatError("each record must be a JSON object", line_no)
        yield line_no, payload


def _field(payload: dict, key: str, line: int) -> str:
    value = payload.get(key)
    if not isinstance(value, str) or not value:
        raise LogFormatError(f"missing or invalid field {key!r}", line)
    return value


def _instant_field(payload: dict, key: str, line: int) -> datetime:
    try:
        return parse_instant(_field(payload, key, line))
    except ValueError as err:
        raise LogFormatError(str(err), line) from None


def parse_consent_log(text: str) -> list[ConsentLogRecord]:
    records = []
    for line_no, payload in _record_lines(text):
        action = _field(payload, "action", line_no)
        if action not in CONSENT_ACTIONS:
            raise LogFormatError(f"unknown consent action {action!r}", line_no)
        timestamp = _instant_field(payload, "timestamp", line_no)
        consent_id = _field(payload, "consent_id", line_no)
        retroactive = payload.get("retroactive", False)
        if not isinstance(retroactive, bool):
            raise LogFormatError("field 'retroactive' must be a boolean", line_no)
        if action == "grant":
            data = _field(payload, "data_concept", line_no)
            subject = _field(payload, "subject", line_no)
            recipient = _field(payload, "recipient_concept", line_no)
        else:
            data = subject = recipient = None
        records.append(ConsentLogRecord(
            line_no, timestamp, action, consent_id, data, subject, recipient,
            retroactive,
        ))
    _check_order(records, "consent log")
    return records


def parse_access_log(text: str) -> list[AccessLogRecord]:
    records = []
    for line_no, payload in _record_lines(text):
        action = _field(payload, "action", line_no)
        if action not in ACCESS_ACTIONS:
            raise LogFormatError(f"unknown event action {action!r}", line_no)
        timestamp = _instant_field(payload, "timestamp", line_no)
        data = _field(payload, "data_concept", line_no)
        subject = _field(payload, "subject", line_no)
        recipient = _field(payload, "recipient_concept", line_no)
        collected_from = collected_to = None
        if action == "access":
            has_from = "collected_from" in payload
            has_to = "collected_to" in payload
            if has_from != has_to:
                raise LogFormatError(
                    "'collected_from' and 'collected_to' must appear together", line_no)
            if has_from:
                collected_from = _instant_field(payload, "collected_from", line_no)
                collected_to = _instant_field(payload, "collected_to", line_no)
                if collected_to < collected_from:
                    raise LogFormatError(
                        "'collected_to' precedes 'collected_from'", line_no)
                if collected_to > timestamp:
                    raise LogFormatError(
                        "collection window reaches past the access timestamp", line_no)
        elif "collected_from" in payload or "collected_to" in payload:
            raise LogFormatError("collect records do not take a collection window",
                                 line_no)
        records.append(AccessLogRecord(
            line_no, timestamp, action, data, subject, recipient,
            collected_from, collected_to,
        ))
    _check_order(records, "access log")
    return records


def _check_order(records: list, source: str) -> None:
    for prev, cur in zip(records, records[1:]):
        if cur.timestamp < prev.timestamp:
            raise LogOrderError(
                f"timestamp goes backwards (previous record at "
                f"{prev.timestamp.isoformat()})", cur.line, source)


def parse_manifest(text: str) -> list[Statement]:
    """Parse the declarations manifest: new-statements only."""
    statements = script_mod.parse_script(text)
    for stmt in statements:
        if not isinstance(stmt, (NewData, NewRecipient, NewDisjoint, NewEquiv)):
            raise MonitorError(
                f"manifest line {stmt.line}: only declarations are allowed here, "
                f"found {print_statement(stmt).split()[0]!r}")
    return statements


def earliest_timestamp(consent_log: str, access_log: str) -> datetime | None:
    """First instant mentioned in either log; the natural default epoch."""
    stamps = []
    for text, parser in ((consent_log, parse_consent_log),
                         (access_log, parse_access_log)):
        records = parser(text)
        if records:
            stamps.append(records[0].timestamp)
    return min(stamps) if stamps else None


@dataclass(frozen=True)
class Violation:
    """One denied event, self-contained for reporting."""

    log_line: int
    event_id: int
    action: str
    data_concept: str
    subject: str
    recipient_concept: str
    step: int
    collected_steps: tuple[int, int] | None  # half-open, access only
    reason: Reason

    def describe(self) -> str:
        where = f"T{self.step}"
        if self.collected_steps is not None:
            lo, hi = self.collected_steps
            where += f" of data collected in [T{lo}, T{hi})"
        return (f"line {self.log_line}: {self.action} {self.data_concept} "
                f"subject={self.subject} recipient={self.recipient_concept} "
                f"at {where}: {self.reason.value}")


@dataclass(frozen=True)
class ViolationReport:
    violations: tuple[Violation, ...]
    events_scanned: int
    final_step: int

    @property
    def clean(self) -> bool:
        return not self.violations

    def summary(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for v in self.violations:
            counts[v.reason.value] = counts.get(v.reason.value, 0) + 1
        return counts

    def to_json(self) -> dict:
        return {
            "clean": self.clean,
            "events_scanned": self.events_scanned,
            "final_step": self.final_step,
            "violations": [
                {
                    "line": v.log_line,
                    "event_id": v.event_id,
                    "action": v.action,
                    "data_concept": v.data_concept,
                    "subject": v.subject,
                    "recipient_concept": v.recipient_concept,
                    "step": v.step,
                    "collected_steps": list(v.collected_steps)
                    if v.collected_steps is not None else None,
                    "reason": v.reason.value,
                }
                for v in self.violations
            ],
            "summary": self.summary(),
        }

    def render_text(self) -> str:
        lines = [v.describe() for v in self.violations]
        if self.clean:
            lines.append(f"clean: no violations in {self.events_scanned} event(s)")
        else:
            counts = ", ".join(f"{k}: {n}" for k, n in sorted(self.summary().items()))
            lines.append(
                f"{len(self.violations)} violation(s) in {self.events_scanned} "
                f"event(s) ({counts})")
        return "\n".join(lines)


def _merged(consents: list[ConsentLogRecord],
            accesses: list[AccessLogRecord]) -> Iterable[LogRecord]:
    # Both inputs are timestamp-sorted; consent records must win ties so a
    # same-instant grant already counts for the event next to it. heapq.merge
    # is stable and prefers the first iterable on equal keys.
    return _heap_merge(consents, accesses, key=lambda r: r.timestamp)


def _replay(manifest: str, consent_log: str, access_log: str, epoch: datetime,
            step_duration: timedelta):
    """Drive a fresh ledger through the merged logs.

    Yields (record, event_or_none, ledger) after applying each record.
    """
    ledger = Ledger()
    script_mod.execute(parse_manifest(manifest), ledger)
    consents = parse_consent_log(consent_log)
    accesses = parse_access_log(access_log)

    def step_of(instant: datetime, line: int, source: str) -> int:
        try:
            return map_to_step(epoch, instant, step_duration)
        except ValueError as err:
            raise MonitorError(str(err), line, source) from None

    def ensure_recipient(name: str) -> None:
        # Same leniency as the script layer: recipient roles auto-declare
        # under the Recipient root, so a translated script replays the same.
        if name not in ledger.ontology:
            ledger.declare_recipient(name)

    for record in _merged(consents, accesses):
        source = "consent log" if isinstance(record, ConsentLogRecord) else "access log"
        target = step_of(record.timestamp, record.line, source)
        while ledger.now < target:
            ledger.advance()
        try:
            if isinstance(record, ConsentLogRecord):
                if record.action == "grant":
                    ensure_recipient(record.recipient_concept)
                    ledger.grant(record.data_concept, record.subject,
                                 record.recipient_concept,
                                 retroactive=record.retroactive,
                                 label=record.consent_id)
                else:
                    ledger.withdraw(record.consent_id,
                                    retroactive=record.retroactive)
                yield record, None, ledger
            else:
                ensure_recipient(record.recipient_concept)
                interval = None
                if record.collected_from is not None:
                    lo = step_of(record.collected_from, record.line, source)
                    hi = step_of(record.collected_to, record.line, source)
                    interval = StepInterval(lo, hi + 1)
                action = ActionType(record.action)
                if action is ActionType.COLLECT:
                    event = ledger.record_event(action, record.data_concept,
                                                record.subject,
                                                record.recipient_concept)
                else:
                    event = ledger.record_event(action, record.data_concept,
                                                record.subject,
                                                record.recipient_concept, interval)
                yield record, event, ledger
        except MonitorError:
            raise
        except ConsentryError as err:
            raise MonitorError(str(err), record.line, source) from None


def scan(manifest: str, consent_log: str, access_log: str, epoch: datetime,
         step_duration: timedelta) -> ViolationReport:
    """Replay the logs and report every event no consent covered."""
    violations = []
    events = 0
    final_step = 1
    for record, event, ledger in _replay(manifest, consent_log, access_log,
                                         epoch, step_duration):
        final_step = ledger.now
        if event is None:
            continue
        events += 1
        if event.verdict.authorized:
            continue
        collected = None
        if event.collected_interval is not None:
            collected = (event.collected_interval.start, event.collected_interval.end)
        violations.append(Violation(
            log_line=record.line,
            event_id=event.id,
            action=event.action.value,
            data_concept=ledger.ontology.name_of(event.data_concept),
            subject=event.subject,
            recipient_concept=ledger.ontology.name_of(event.recipient_concept),
            step=event.occurred_at,
            collected_steps=collected,
            reason=event.verdict.reason,
        ))
    return ViolationReport(tuple(violations), events, final_step)


def translate_to_script(manifest: str, consent_log: str, access_log: str,
                        epoch: datetime, step_duration: timedelta) -> str:
    """Render the logs as an equivalent script.

    Running the result reproduces the scan: the same events in the same
    order with the same verdicts. Consent ids must be valid script labels.
    """
    statements = parse_manifest(manifest)
    lines = [print_statement(s) for s in statements]
    consents = parse_consent_log(consent_log)
    accesses = parse_access_log(access_log)

    current = 1
    for record in _merged(consents, accesses):
        source = "consent log" if isinstance(record, ConsentLogRecord) else "access log"
        try:
            target = map_to_step(epoch, record.timestamp, step_duration)
        except ValueError as err:
            raise MonitorError(str(err), record.line, source) from None
        while current < target:
            lines.append("step")
            current += 1
        if isinstance(record, ConsentLogRecord):
            if not _LABEL_SAFE.match(record.consent_id):
                raise MonitorError(
                    f"consent_id {record.consent_id!r} is not usable as a script label",
                    record.line, source)
            retro = "retro " if record.retroactive else ""
            if record.action == "grant":
                lines.append(
                    f"grant {retro}{record.data_concept} {record.subject} "
                    f"{record.recipient_concept} :{record.consent_id}")
            else:
                lines.append(f"withdraw {retro}:{record.consent_id}")
        elif record.action == "collect":
            lines.append(f"collect {record.data_concept} {record.subject} "
                         f"{record.recipient_concept}")
        else:
            span = ""
            if record.collected_from is not None:
                lo = map_to_step(epoch, record.collected_from, step_duration)
                hi = map_to_step(epoch, record.collected_to, step_duration)
                span = f" T{lo} T{hi + 1}"
            lines.append(f"access {record.data_concept} {record.subject} "
                         f"{record.recipient_concept}{span}")
    return "\n".join(lines) + "\n" if lines else ""
