"""Lexer, parser, and interpreter for the consent scenario language.

A script is line-oriented: one statement per line, '#' starts a comment,
blank lines are ignored. Example:

    new data RealTimeLocation Data
    new data DrivingRoute RealTimeLocation
    new recipient Advertiser
    grant DrivingRoute datasubject1 Advertiser :consent1
    assume true collect DrivingRoute datasubject1 Advertiser
    step
    withdraw retro :consent1

Keywords are lowercase words; any other word names a concept or an
individual; ':name' labels a consent; 'T<n>' references a time step.
Subjects and recipient roles spring into existence on first mention
(an undeclared recipient lands directly under the Recipient root);
data concepts must be declared before use.

Time defaults: a collect (or assume over one) speaks about the current
step. An access with no time tokens spans all collected history
[T1, now+1); 'access ... Tx' means data collected at step x alone;
'access ... Tx Ty' means the half-open range [x, y). The access itself
always happens at the current step.

Assume statements evaluate their inner action without recording an
event. A failed assume does not stop the run; it flips the report's
overall verdict. Semantic errors (unknown names, impossible intervals)
abort execution with the offending line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Union

from .chronology import StepInterval
from .core import ActionType, EventRecord, Ledger, Mode
from .errors import ConsentryError, ExecutionError, LexError, ParseError

KEYWORDS = frozenset({
    "new", "data", "recipient", "disjoint", "equiv",
    "grant", "withdraw", "retro",
    "collect", "access", "step",
    "assume", "true", "false",
})

_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_TIME = re.compile(r"T[0-9]+\Z")


class TokenKind(Enum):
    KEYWORD = "keyword"
    NAME = "name"
    LABEL = "label"
    TIME = "time"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str  # labels keep their bare name, without the leading ':'
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    """Split source text into tokens. Comments and blank lines vanish."""
    tokens: list[Token] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        pos = 0
        while pos < len(line):
            ch = line[pos]
            if ch in " \t\r":
                pos += 1
                continue
            if ch == "#":
                break
            if ch == ":":
                m = _WORD.match(line, pos + 1)
                if m is None:
                    raise LexError(line_no, pos + 1, "expected a label name after ':'")
                tokens.append(Token(TokenKind.LABEL, m.group(), line_no, pos + 1))
                pos = m.end()
                continue
            m = _WORD.match(line, pos)
            if m is None:
                raise LexError(line_no, pos + 1, f"illegal character {ch!r}")
            word = m.group()
            if word in KEYWORDS:
                kind = TokenKind.KEYWORD
            elif _TIME.match(word):
                kind = TokenKind.TIME
            else:
                kind = TokenKind.NAME
            tokens.append(Token(kind, word, line_no, pos + 1))
            pos = m.end()
    return tokens


# -- statements ------------------------------------------------------------
#
# Line numbers ride along for error reporting but are excluded from
# equality so that parse(print_program(p)) == p holds structurally.


@dataclass(frozen=True)
class NewData:
    name: str
    parent: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class NewRecipient:
    name: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class NewDisjoint:
    names: tuple[str, ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class NewEquiv:
    a: str
    b: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Grant:
    data: str
    subject: str
    recipient: str
    label: str
    retro: bool = False
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Withdraw:
    label: str
    retro: bool = False
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Collect:
    data: str
    subject: str
    recipient: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Access:
    data: str
    subject: str
    recipient: str
    # Time tokens exactly as written: (None, None) spans all history,
    # (x, None) is the single step x, (x, y) is the range [x, y).
    start: int | None = None
    end: int | None = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Step:
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Assume:
    expected: bool
    action: Union[Collect, Access]
    line: int = field(default=0, compare=False)


Statement = Union[
    NewData, NewRecipient, NewDisjoint, NewEquiv,
    Grant, Withdraw, Collect, Access, Step, Assume,
]


class _Cursor:
    """One statement's worth of tokens with expectation-style consumption."""

    def __init__(self, tokens: list[Token], line: int):
        self.tokens = tokens
        self.line = line
        self.pos = 0

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, what: str) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError(self.line, f"expected {what}, found end of line")
        self.pos += 1
        return tok

    def name(self, what: str) -> str:
        tok = self.take(what)
        if tok.kind is not TokenKind.NAME:
            raise ParseError(self.line, f"expected {what}, found {tok.text!r}")
        return tok.text

    def label(self, what: str) -> str:
        tok = self.take(what)
        if tok.kind is not TokenKind.LABEL:
            raise ParseError(self.line, f"expected {what}, found {tok.text!r}")
        return tok.text

    def keyword(self, *options: str) -> str:
        what = " or ".join(f"'{o}'" for o in options)
        tok = self.take(what)
        if tok.kind is not TokenKind.KEYWORD or tok.text not in options:
            raise ParseError(self.line, f"expected {what}, found {tok.text!r}")
        return tok.text

    def match_keyword(self, word: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.kind is TokenKind.KEYWORD and tok.text == word:
            self.pos += 1
            return True
        return False

    def time(self) -> int:
        tok = self.take("a time step like T3")
        if tok.kind is not TokenKind.TIME:
            raise ParseError(self.line, f"expected a time step like T3, found {tok.text!r}")
        value = int(tok.text[1:])
        if value < 1:
            raise ParseError(self.line, f"time steps start at T1, found {tok.text!r}")
        return value

    def finish(self) -> None:
        tok = self.peek()
        if tok is not None:
            raise ParseError(self.line, f"unexpected trailing {tok.text!r}")


def parse(tokens: list[Token]) -> list[Statement]:
    """Group tokens by line and parse each line as one statement."""
    statements: list[Statement] = []
    by_line: dict[int, list[Token]] = {}
    for tok in tokens:
        by_line.setdefault(tok.line, []).append(tok)
    for line in sorted(by_line):
        statements.append(_parse_statement(_Cursor(by_line[line], line)))
    return statements


def parse_script(text: str) -> list[Statement]:
    return parse(tokenize(text))


def _parse_statement(cur: _Cursor) -> Statement:
    head = cur.keyword("new", "grant", "withdraw", "collect", "access", "step", "assume")
    if head == "new":
        stmt = _parse_new(cur)
    elif head == "grant":
        retro = cur.match_keyword("retro")
        data = cur.name("a data concept")
        subject = cur.name("a data subject")
        recipient = cur.name("a recipient")
        label = cur.label("a consent label like :consent1")
        stmt = Grant(data, subject, recipient, label, retro, line=cur.line)
    elif head == "withdraw":
        retro = cur.match_keyword("retro")
        stmt = Withdraw(cur.label("a consent label"), retro, line=cur.line)
    elif head == "collect":
        stmt = _parse_collect(cur)
    elif head == "access":
        stmt = _parse_access(cur)
    elif head == "step":
        stmt = Step(line=cur.line)
    else:
        expected = cur.keyword("true", "false")
        inner_head = cur.keyword("collect", "access")
        inner = _parse_collect(cur) if inner_head == "collect" else _parse_access(cur)
        stmt = Assume(expected == "true", inner, line=cur.line)
    cur.finish()
    return stmt


def _parse_new(cur: _Cursor) -> Statement:
    what = cur.keyword("data", "recipient", "disjoint", "equiv")
    if what == "data":
        return NewData(cur.name("a concept name"), cur.name("a parent concept"),
                       line=cur.line)
    if what == "recipient":
        return NewRecipient(cur.name("a recipient name"), line=cur.line)
    if what == "equiv":
        return NewEquiv(cur.name("a concept name"), cur.name("a concept name"),
                        line=cur.line)
    names = [cur.name("a concept name"), cur.name("a concept name")]
    while not cur.done():
        names.append(cur.name("a concept name"))
    return NewDisjoint(tuple(names), line=cur.line)


def _parse_collect(cur: _Cursor) -> Collect:
    return Collect(cur.name("a data concept"), cur.name("a data subject"),
                   cur.name("a recipient"), line=cur.line)


def _parse_access(cur: _Cursor) -> Access:
    data = cur.name("a data concept")
    subject = cur.name("a data subject")
    recipient = cur.name("a recipient")
    start = end = None
    tok = cur.peek()
    if tok is not None and tok.kind is TokenKind.TIME:
        start = cur.time()
        tok = cur.peek()
        if tok is not None and tok.kind is TokenKind.TIME:
            end = cur.time()
    return Access(data, subject, recipient, start, end, line=cur.line)


# -- canonical rendering -----------------------------------------------------


def print_statement(stmt: Statement) -> str:
    if isinstance(stmt, NewData):
        return f"new data {stmt.name} {stmt.parent}"
    if isinstance(stmt, NewRecipient):
        return f"new recipient {stmt.name}"
    if isinstance(stmt, NewDisjoint):
        return "new disjoint " + " ".join(stmt.names)
    if isinstance(stmt, NewEquiv):
        return f"new equiv {stmt.a} {stmt.b}"
    if isinstance(stmt, Grant):
        retro = "retro " if stmt.retro else ""
        return f"grant {retro}{stmt.data} {stmt.subject} {stmt.recipient} :{stmt.label}"
    if isinstance(stmt, Withdraw):
        retro = "retro " if stmt.retro else ""
        return f"withdraw {retro}:{stmt.label}"
    if isinstance(stmt, Collect):
        return f"collect {stmt.data} {stmt.subject} {stmt.recipient}"
    if isinstance(stmt, Access):
        parts = [f"access {stmt.data} {stmt.subject} {stmt.recipient}"]
        if stmt.start is not None:
            parts.append(f"T{stmt.start}")
            if stmt.end is not None:
                parts.append(f"T{stmt.end}")
        return " ".join(parts)
    if isinstance(stmt, Step):
        return "step"
    if isinstance(stmt, Assume):
        word = "true" if stmt.expected else "false"
        return f"assume {word} {print_statement(stmt.action)}"
    raise TypeError(f"not a statement: {stmt!r}")


def print_program(statements: Iterable[Statement]) -> str:
    return "\n".join(print_statement(s) for s in statements) + "\n"


# -- execution ---------------------------------------------------------------


@dataclass(frozen=True)
class AssumeResult:
    line: int
    expected: bool
    actual: bool
    statement: str

    @property
    def passed(self) -> bool:
        return self.expected == self.actual


@dataclass(frozen=True)
class StatementOutcome:
    line: int
    text: str
    note: str


@dataclass
class RunReport:
    outcomes: list[StatementOutcome]
    assumes: list[AssumeResult]
    events: list[EventRecord]
    final_step: int
    ledger: Ledger = field(compare=False, repr=False)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assumes)


def execute(statements: list[Statement], ledger: Ledger | None = None) -> RunReport:
    """Run a parsed program against a ledger (a fresh one by default)."""
    led = ledger if ledger is not None else Ledger()
    outcomes: list[StatementOutcome] = []
    assumes: list[AssumeResult] = []
    for stmt in statements:
        try:
            note = _apply(led, stmt, assumes)
        except ConsentryError as err:
            if isinstance(err, ExecutionError):
                raise
            raise ExecutionError(stmt.line, str(err)) from err
        outcomes.append(StatementOutcome(stmt.line, print_statement(stmt), note))
    return RunReport(outcomes, assumes, list(led.events), led.now, led)


def _ensure_recipient(led: Ledger, name: str) -> None:
    # Recipient roles spring into existence on first mention, like subjects:
    # an undeclared one lands directly under the Recipient root, exactly what
    # an explicit declaration would do. Data concepts never auto-declare;
    # their place in the hierarchy carries meaning.
    if name not in led.ontology:
        led.declare_recipient(name)


def _apply(led: Ledger, stmt: Statement, assumes: list[AssumeResult]) -> str:
    if isinstance(stmt, NewData):
        led.declare_data(stmt.name, stmt.parent)
        return "declared"
    if isinstance(stmt, NewRecipient):
        led.declare_recipient(stmt.name)
        return "declared"
    if isinstance(stmt, NewDisjoint):
        led.declare_disjoint(*stmt.names)
        return "declared disjoint"
    if isinstance(stmt, NewEquiv):
        led.declare_equivalent(stmt.a, stmt.b)
        return "declared equivalent"
    if isinstance(stmt, Grant):
        _ensure_recipient(led, stmt.recipient)
        led.grant(stmt.data, stmt.subject, stmt.recipient,
                  retroactive=stmt.retro, label=stmt.label)
        return f"granted :{stmt.label} at T{led.now}"
    if isinstance(stmt, Withdraw):
        led.withdraw(stmt.label, retroactive=stmt.retro)
        return f"withdrew :{stmt.label} at T{led.now}"
    if isinstance(stmt, Step):
        return f"advanced to T{led.advance()}"
    if isinstance(stmt, Collect):
        _ensure_recipient(led, stmt.recipient)
        event = led.record_event(ActionType.COLLECT, stmt.data, stmt.subject,
                                 stmt.recipient)
        return _event_note(event)
    if isinstance(stmt, Access):
        _ensure_recipient(led, stmt.recipient)
        event = led.record_event(ActionType.ACCESS, stmt.data, stmt.subject,
                                 stmt.recipient, _access_interval(led, stmt))
        return _event_note(event)
    if isinstance(stmt, Assume):
        inner = stmt.action
        # Subjects spring into existence on first mention, even inside assume.
        led.declare_subject(inner.subject)
        _ensure_recipient(led, inner.recipient)
        if isinstance(inner, Collect):
            query = led.collect_query(inner.data, inner.subject, inner.recipient)
        else:
            query = led.access_query(inner.data, inner.subject, inner.recipient,
                                     _access_interval(led, inner))
        actual = led.check(query).authorized
        result = AssumeResult(stmt.line, stmt.expected, actual, print_statement(stmt))
        assumes.append(result)
        return "PASS" if result.passed else "FAIL"
    raise TypeError(f"not a statement: {stmt!r}")


def _access_interval(led: Ledger, stmt: Access) -> StepInterval | None:
    if stmt.start is None:
        return None  # all collected history, [T1, now+1)
    if stmt.end is None:
        return StepInterval.single(stmt.start)
    if stmt.end <= stmt.start:
        raise ExecutionError(stmt.line, f"empty interval [T{stmt.start}, T{stmt.end})")
    return StepInterval(stmt.start, stmt.end)


def _event_note(event: EventRecord) -> str:
    verdict = "authorized" if event.verdict.authorized else \
        f"denied ({event.verdict.reason.value})"
    return f"event {event.id} {verdict}"


def run_script(text: str, ledger: Ledger | None = None) -> RunReport:
    """Parse and execute source text in one go."""
    return execute(parse_script(text), ledger)
