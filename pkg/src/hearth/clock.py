"""Wall-time and virtual clocks, plus RFC 3339 datetime helpers.

The virtual clock never moves backwards and never sleeps for real, so any
component that takes a clock (scheduler, interface box, service) can be
exercised in tests without waiting.
"""

from __future__ import annotations

import time
from datetime import datetime, timedelta, timezone, tzinfo

from .errors import BadDatetimeError, ClockRegressionError


class Clock:
    """Source of the current instant; subclasses define how time passes."""

    mode = "abstract"

    def now(self) -> datetime:
        raise NotImplementedError

    def sleep(self, seconds: float) -> None:
        raise NotImplementedError


class RealClock(Clock):
    mode = "real"

    def now(self) -> datetime:
        return datetime.now(timezone.utc)

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)


class VirtualClock(Clock):
    """Manually advanced clock; `sleep` advances instead of waiting."""

    mode = "virtual"

    def __init__(self, start: datetime | None = None):
        if start is None:
            start = datetime(2026, 1, 1, tzinfo=timezone.utc)
        if start.tzinfo is None:
            start = start.replace(tzinfo=timezone.utc)
        self._now = start

    def now(self) -> datetime:
        return self._now

    def sleep(self, seconds: float) -> None:
        self.advance(seconds)

    def advance(self, seconds: float) -> datetime:
        if seconds < 0:
            raise ClockRegressionError("virtual clock cannot move backwards")
        self._now += timedelta(seconds=seconds)
        return self._now


def parse_rfc3339(text: str, default_tz: tzinfo = timezone.utc) -> datetime:
    """Parse an RFC 3339 timestamp; naive inputs get `default_tz` attached."""
    if not isinstance(text, str) or not text.strip():
        raise BadDatetimeError(f"unparseable datetime: {text!r}")
    normalized = text.strip()
    if normalized.endswith(("Z", "z")):
        normalized = normalized[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(normalized)
    except ValueError:
        raise BadDatetimeError(f"unparseable datetime: {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=default_tz)
    return dt


def format_rfc3339(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.isoformat().replace("+00:00", "Z")


def unix_millis(dt: datetime) -> int:
    return int(dt.timestamp() * 1000)
