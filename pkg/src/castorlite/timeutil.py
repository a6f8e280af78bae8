"""Timestamp and interval helpers.

All instants are stored internally as float POSIX seconds (UTC).  The wire
and file format everywhere is RFC 3339 with an explicit offset, e.g.
"2019-03-01T00:00:00+00:00".
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from .errors import InvalidFrequency, MalformedSchedule

SECONDS = {"minute": 60, "hour": 3600, "day": 86400}


def parse_rfc3339(text: str) -> float:
    """Parse an RFC 3339 timestamp into POSIX seconds (UTC)."""
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def format_rfc3339(ts: float) -> str:
    """Render POSIX seconds as RFC 3339 in UTC ("+00:00" offset)."""
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    if dt.microsecond:
        return dt.isoformat()
    return dt.strftime("%Y-%m-%dT%H:%M:%S+00:00")


def to_datetime(ts: float) -> datetime:
    return datetime.fromtimestamp(ts, tz=timezone.utc)


_FREQ_RE = re.compile(r"^(\d+)([TtHhDd])$")
_FREQ_UNITS = {"T": "minute", "H": "hour", "D": "day"}


@dataclass(frozen=True)
class FrequencySpec:
    """A regular time step: a count of minutes, hours or days."""

    count: int
    unit: str  # "minute" | "hour" | "day"

    @classmethod
    def parse(cls, text: str) -> "FrequencySpec":
        m = _FREQ_RE.match(text.strip())
        if not m:
            raise InvalidFrequency(f"cannot parse frequency {text!r}")
        count = int(m.group(1))
        if count <= 0:
            raise InvalidFrequency(f"frequency count must be positive: {text!r}")
        return cls(count, _FREQ_UNITS[m.group(2).upper()])

    @property
    def seconds(self) -> float:
        return self.count * SECONDS[self.unit]

    def __str__(self) -> str:
        suffix = {"minute": "T", "hour": "H", "day": "D"}[self.unit]
        return f"{self.count}{suffix}"


def bucket_start(ts: float, freq: FrequencySpec) -> float:
    """Start of the bucket containing ts; the grid is anchored at midnight UTC."""
    step = freq.seconds
    day = (ts // 86400) * 86400
    return day + ((ts - day) // step) * step


_REPEAT_RE = re.compile(r"^(\d+)_(minute|minutes|hour|hours|day|days|week|weeks)$")
_REPEAT_SECONDS = {
    "minute": 60,
    "hour": 3600,
    "day": 86400,
    "week": 7 * 86400,
}


def parse_repeat_every(text: str) -> float:
    """Parse a "<N>_<unit>" repeat interval into seconds.

    Singular and plural unit forms are both accepted ("1_week", "1_hours").
    """
    m = _REPEAT_RE.match(text.strip())
    if not m:
        raise MalformedSchedule(f"cannot parse repeat interval {text!r}")
    n = int(m.group(1))
    if n <= 0:
        raise MalformedSchedule(f"repeat count must be positive: {text!r}")
    unit = m.group(2).rstrip("s")
    return float(n * _REPEAT_SECONDS[unit])


def parse_duration(text: str) -> float:
    """Parse a duration given either as "<N>_<unit>" or as a frequency string
    like "24H"/"15T"; returns seconds."""
    try:
        return parse_repeat_every(text)
    except MalformedSchedule:
        pass
    return FrequencySpec.parse(text).seconds


def timedelta_seconds(value) -> float:
    """Accept a timedelta, a number of seconds, or a duration string."""
    if isinstance(value, timedelta):
        return value.total_seconds()
    if isinstance(value, (int, float)):
        return float(value)
    return parse_duration(value)
