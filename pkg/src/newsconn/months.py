"""Calendar helpers: months as "YYYY-MM" strings, weekday trading days.

Months are kept as plain strings throughout the package because they sort
lexicographically in calendar order and serialize to CSV without any
formatting ambiguity.
"""

from __future__ import annotations

import datetime as dt
import re

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


def parse_month(s: str) -> str:
    """Validate a "YYYY-MM" month string and return it normalized."""
    m = _MONTH_RE.match(s.strip())
    if not m or not (1 <= int(m.group(2)) <= 12):
        raise ValueError(f"bad month {s!r}, expected YYYY-MM")
    return m.group(0)

def month_of(day: dt.date) -> str:
    return f"{day.year:04d}-{day.month:02d}"

def next_month(month: str) -> str:
    y, m = int(month[:4]), int(month[5:7])
    if m == 12:
        return f"{y + 1:04d}-01"
    return f"{y:04d}-{m + 1:02d}"

def month_range(first: str, last: str) -> list[str]:
    """Inclusive list of consecutive months from first to last."""
    if first > last:
        raise ValueError(f"month range {first}..{last} is reversed")
    out = [first]
    while out[-1] < last:
        out.append(next_month(out[-1]))
    return out

def weekdays(start: dt.date, n: int) -> list[dt.date]:
    """The first n Mon-Fri calendar days on or after start."""
    days: list[dt.date] = []
    d = start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days

def weekdays_for_months(start: dt.date, n_months: int) -> list[dt.date]:
    """All Mon-Fri days from start through the end of the n-th calendar month."""
    if n_months < 1:
        raise ValueError("need at least one month")
    last = month_of(start)
    for _ in range(n_months - 1):
        last = next_month(last)
    days: list[dt.date] = []
    d = start
    while month_of(d) <= last:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days
