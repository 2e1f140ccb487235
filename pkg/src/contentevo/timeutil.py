"""Conversions between wall-clock timestamps and model time.

Model time is measured in fractional days since an epoch.  The default epoch is
a Monday at 00:00 UTC so that weekly phase 0 falls on Monday midnight.
"""
from __future__ import annotations

import re
from datetime import datetime, timedelta, timezone

DAY_SECONDS = 86400.0
WEEK = 7.0
DEFAULT_EPOCH = datetime(1970, 1, 5, tzinfo=timezone.utc)

DAY_NAMES = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")
WORKDAYS = (0, 1, 2, 3, 4)

_PHASE_RE = re.compile(r"^\s*([A-Za-z]{3})[a-z]*\s+(\d{1,2}):(\d{2})(?::(\d{2}))?\s*$")


def parse_epoch(value: str | datetime | None) -> datetime:
    if value is None:
        return DEFAULT_EPOCH
    epoch = parse_timestamp(value) if isinstance(value, str) else value
    if epoch.tzinfo is None:
        epoch = epoch.replace(tzinfo=timezone.utc)
    if epoch.weekday() != 0 or (epoch.hour, epoch.minute, epoch.second, epoch.microsecond) != (0, 0, 0, 0):
        raise ValueError(f"epoch must be a Monday at 00:00 UTC, got {epoch.isoformat()}")
    return epoch


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    stamp = datetime.fromisoformat(text)
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.astimezone(timezone.utc)


def to_days(stamp: str | datetime, epoch: datetime = DEFAULT_EPOCH) -> float:
    if isinstance(stamp, str):
        stamp = parse_timestamp(stamp)
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return (stamp - epoch).total_seconds() / DAY_SECONDS


def from_days(t: float, epoch: datetime = DEFAULT_EPOCH) -> datetime:
    return epoch + timedelta(seconds=round(t * DAY_SECONDS, 6))


def format_timestamp(t: float, epoch: datetime = DEFAULT_EPOCH) -> str:
    stamp = from_days(t, epoch)
    text = stamp.strftime("%Y-%m-%dT%H:%M:%S")
    if stamp.microsecond:
        text += f".{stamp.microsecond:06d}"
    return text + "Z"


def parse_time_value(value, epoch: datetime = DEFAULT_EPOCH) -> float:
    """Accept fractional days, numeric strings, or ISO-8601 timestamps."""
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(value)
    except ValueError:
        return to_days(value, epoch)


def phase_of(label) -> float:
    """Weekly phase in days for a ``"DOW HH:MM"`` label or a plain number.

    ``"Sun 24:00"`` is allowed and maps to the end of the week.
    """
    if isinstance(label, (int, float)):
        return float(label)
    match = _PHASE_RE.match(label)
    if not match:
        return float(label)
    day = match.group(1).lower()
    if day not in DAY_NAMES:
        raise ValueError(f"unknown weekday in {label!r}")
    hours, minutes = int(match.group(2)), int(match.group(3))
    seconds = int(match.group(4) or 0)
    if hours > 24 or minutes >= 60 or (hours == 24 and (minutes or seconds)):
        raise ValueError(f"bad time of day in {label!r}")
    return DAY_NAMES.index(day) + (hours * 3600 + minutes * 60 + seconds) / DAY_SECONDS


def clock(hours: float = 0.0, minutes: float = 0.0, seconds: float = 0.0) -> float:
    """Duration in days."""
    return (hours * 3600.0 + minutes * 60.0 + seconds) / DAY_SECONDS


def format_duration(days: float) -> str:
    """``H:MM:SS`` rendering of a duration, rounded to the second."""
    total = int(round(days * DAY_SECONDS))
    hours, rest = divmod(total, 3600)
    minutes, seconds = divmod(rest, 60)
    return f"{hours}:{minutes:02d}:{seconds:02d}"
