"""Forward-time step arithmetic and half-open step intervals.

Steps are 1-based ordinal indices. The engine attaches no wall-clock
meaning to them; the log monitor maps timestamps onto steps at its own
boundary. Intervals are half-open ([start, end) contains start but not
end) and may leave the end unbounded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import IntervalError

_STEP_TOKEN = re.compile(r"T([0-9]+)\Z")


def advance(step: int) -> int:
    """Return the successor step."""
    if step < 1:
        raise IntervalError(f"steps are 1-based, got {step}")
    return step + 1


def format_step(step: int) -> str:
    return f"T{step}"


def parse_step(token: str) -> int:
    """Parse a textual step token such as 'T4'."""
    m = _STEP_TOKEN.match(token)
    if m is None:
        raise ValueError(f"not a step token: {token!r}")
    step = int(m.group(1))
    if step < 1:
        raise ValueError(f"steps are 1-based, got {token!r}")
    return step


@dataclass(frozen=True)
class StepInterval:
    """Half-open run of steps [start, end); end of None means unbounded."""

    start: int
    end: int | None = None

    def __post_init__(self):
        if self.start < 1:
            raise IntervalError(f"interval start must be >= 1, got {self.start}")
        if self.end is not None and self.end <= self.start:
            raise IntervalError(
                f"interval end must exceed start, got [{self.start}, {self.end})"
            )

    @classmethod
    def single(cls, step: int) -> "StepInterval":
        return cls(step, step + 1)

    @property
    def bounded(self) -> bool:
        return self.end is not None

    @property
    def last(self) -> int:
        """Largest step inside the interval."""
        if self.end is None:
            raise IntervalError("unbounded interval has no last step")
        return self.end - 1

    def __contains__(self, step: int) -> bool:
        if step < self.start:
            return False
        return self.end is None or step < self.end

    def steps(self) -> range:
        """Every step in the interval, in order. Bounded intervals only."""
        if self.end is None:
            raise IntervalError("cannot enumerate an unbounded interval")
        return range(self.start, self.end)

    def __str__(self) -> str:
        hi = format_step(self.end) if self.end is not None else "..."
        return f"[{format_step(self.start)}, {hi})"
