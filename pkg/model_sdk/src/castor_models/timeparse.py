"""RFC 3339 and duration parsing for the wire protocol and user parameters."""
from __future__ import annotations

import re
from datetime import datetime, timezone

_UNIT_SECONDS = {"S": 1.0, "T": 60.0, "H": 3600.0, "D": 86400.0}
_WORD_SECONDS = {
    "second": 1.0,
    "minute": 60.0,
    "hour": 3600.0,
    "day": 86400.0,
    "week": 604800.0,
}


def parse_rfc3339(text: str) -> float:
    """RFC 3339 timestamp -> POSIX seconds (naive times are taken as UTC)."""
    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def format_rfc3339(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat()


def frequency_seconds(text: str) -> float:
    """Sampling frequency like "15T", "1H", "2D" -> seconds."""
    m = re.fullmatch(r"(\d+)([STHD])", text.strip().upper())
    if not m:
        raise ValueError(f"bad frequency {text!r}")
    return int(m.group(1)) * _UNIT_SECONDS[m.group(2)]


def duration_seconds(text: str) -> float:
    """Duration in either frequency syntax ("24H") or "<N>_<unit>" syntax."""
    m = re.fullmatch(r"(\d+)_([a-z]+)", text.strip().lower())
    if m:
        unit = m.group(2).rstrip("s")
        if unit not in _WORD_SECONDS:
            raise ValueError(f"bad duration unit in {text!r}")
        return int(m.group(1)) * _WORD_SECONDS[unit]
    return frequency_seconds(text)
