"""Parsing, validation and indexing of the three external inputs.

Input formats (all UTF-8):

* news file    -- one JSON object per line:
                  {"id": str, "date": "YYYY-MM-DD",
                   "mentions": [{"stock": str, "pos": f, "neg": f, "neu": f}, ...]}
                  "neu" may be omitted and is then imputed as 1 - pos - neg
                  (clamped at 0).
* returns file -- CSV "month,log_excess,simple_excess,risk_free", month as
                  "YYYY-MM", risk_free as a gross per-month return.
* regime file  -- CSV "month,label", label in {expansion, recession}.
* predictors   -- CSV "month,<name1>,<name2>,...".

Malformed news records are rejected individually with a line number and a
reason; structural problems (duplicate article ids, gappy return series)
reject the whole file.  Parsed datasets are immutable value objects.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

from .months import month_range, parse_month

TONE_SUM_TOL = 1e-6
LOG_SIMPLE_TOL = 1e-10


class DataError(Exception):
    """A whole input file is unusable (structural violation)."""


@dataclass(frozen=True)
class ToneTriple:
    """Positive/negative/neutral tone fractions of one stock in one article."""

    positive: float
    negative: float
    neutral: float

    def __post_init__(self) -> None:
        for name in ("positive", "negative", "neutral"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValueError(f"{name} tone {v!r} outside [0,1]")
        total = self.positive + self.negative + self.neutral
        if abs(total - 1.0) > TONE_SUM_TOL:
            raise ValueError(f"tone fractions sum to {total}, expected 1")

    @classmethod
    def from_pos_neg(cls, positive: float, negative: float, neutral: float | None = None) -> "ToneTriple":
        """Build a triple, imputing a missing neutral share as the residual."""
        if neutral is None:
            if not (math.isfinite(positive) and math.isfinite(negative)):
                raise ValueError("non-finite tone")
            neutral = max(0.0, 1.0 - positive - negative)
        return cls(positive, negative, neutral)


@dataclass(frozen=True)
class NewsEvent:
    """One news article: id, calendar day, and per-stock tone triples.

    An article with >= 2 mentions is "connected"; exactly one mention makes
    it self-connected.  Mention insertion order is preserved (it drives the
    first-appearance stock indexing).
    """

    article_id: str
    date: dt.date
    mentions: dict[str, ToneTriple]

    def __post_init__(self) -> None:
        if not self.mentions:
            raise ValueError("empty mentions")

    @property
    def connected(self) -> bool:
        return len(self.mentions) >= 2


@dataclass(frozen=True)
class RejectedRecord:
    line_no: int
    reason: str


@dataclass(frozen=True)
class ParsedNews:
    events: tuple[NewsEvent, ...]
    rejects: tuple[RejectedRecord, ...]


class StockIndex:
    """Opaque stock ids mapped to dense integer indices, first-appearance order."""

    def __init__(self, ids: Iterable[str] = ()):
        self.ids: list[str] = []
        self._pos: dict[str, int] = {}
        for s in ids:
            self.add(s)

    def add(self, stock_id: str) -> int:
        idx = self._pos.get(stock_id)
        if idx is None:
            idx = len(self.ids)
            self.ids.append(stock_id)
            self._pos[stock_id] = idx
        return idx

    def of(self, stock_id: str) -> int:
        return self._pos[stock_id]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, stock_id: str) -> bool:
        return stock_id in self._pos


def build_stock_index(events: Iterable[NewsEvent]) -> StockIndex:
    index = StockIndex()
    for e in events:
        for stock_id in e.mentions:
            index.add(stock_id)
    return index


def _open_text(source: str | Path | TextIO) -> tuple[TextIO, bool]:
    if hasattr(source, "read"):
        return source, False  # type: ignore[return-value]
    return open(source, "r", encoding="utf-8"), True


def _event_from_obj(obj: dict) -> NewsEvent:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    try:
        article_id = obj["id"]
        date_s = obj["date"]
        mentions_raw = obj["mentions"]
    except KeyError as exc:
        raise ValueError(f"missing field {exc.args[0]!r}") from None
    if not isinstance(article_id, str) or not article_id:
        raise ValueError("id must be a non-empty string")
    date = dt.date.fromisoformat(date_s)
    if not isinstance(mentions_raw, list) or not mentions_raw:
        raise ValueError("empty mentions")
    mentions: dict[str, ToneTriple] = {}
    for m in mentions_raw:
        stock = m.get("stock")
        if not isinstance(stock, str) or not stock:
            raise ValueError("mention without stock id")
        if stock in mentions:
            raise ValueError(f"duplicate stock {stock!r} within one article")
        mentions[stock] = ToneTriple.from_pos_neg(m["pos"], m["neg"], m.get("neu"))
    return NewsEvent(article_id, date, mentions)


def parse_news_file(source: str | Path | TextIO) -> ParsedNews:
    """Parse a line-delimited JSON news file.

    Invalid records are skipped and reported; a duplicate article id rejects
    the whole file.  Events come back sorted by (date, article_id).
    """
    fh, owned = _open_text(source)
    events: list[NewsEvent] = []
    rejects: list[RejectedRecord] = []
    seen_ids: set[str] = set()
    try:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                event = _event_from_obj(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                rejects.append(RejectedRecord(line_no, str(exc)))
                continue
            if event.article_id in seen_ids:
                raise DataError(f"duplicate article id {event.article_id!r} at line {line_no}")
            seen_ids.add(event.article_id)
            events.append(event)
    finally:
        if owned:
            fh.close()
    events.sort(key=lambda e: (e.date, e.article_id))
    return ParsedNews(tuple(events), tuple(rejects))


def serialize_news_event(event: NewsEvent) -> str:
    """Canonical single-line JSON form; parse(serialize(e)) == e byte-exactly."""
    mentions = [
        {"stock": s, "pos": t.positive, "neg": t.negative, "neu": t.neutral}
        for s, t in event.mentions.items()
    ]
    return json.dumps(
        {"id": event.article_id, "date": event.date.isoformat(), "mentions": mentions},
        separators=(",", ":"),
    )


def write_news_file(events: Iterable[NewsEvent], dest: str | Path | TextIO) -> None:
    fh, owned = (dest, False) if hasattr(dest, "write") else (open(dest, "w", encoding="utf-8"), True)
    try:
        for e in events:
            fh.write(serialize_news_event(e))
            fh.write("\n")
    finally:
        if owned:
            fh.close()


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Contiguous monthly market series.

    log_excess is the log market return in excess of the risk-free rate,
    simple_excess the simple excess return, risk_free the gross per-month
    risk-free return.  The three columns are stored as given and never
    converted into each other; consistency is validated at load time.
    """

    months: tuple[str, ...]
    log_excess: np.ndarray
    simple_excess: np.ndarray
    risk_free: np.ndarray

    def __len__(self) -> int:
        return len(self.months)

    def index_of(self, month: str) -> int:
        return self.months.index(month)


def _check_return_consistency(months, log_excess, simple_excess, risk_free) -> None:
    for m, le, se, rf in zip(months, log_excess, simple_excess, risk_free):
        if rf <= 0:
            raise DataError(f"non-positive gross risk-free return at {m}")
        # both columns must describe the same total return
        implied = math.log(1.0 + se + rf - 1.0) - math.log(rf)
        if abs(implied - le) > LOG_SIMPLE_TOL:
            raise DataError(f"log/simple excess returns inconsistent at {m}")


def parse_return_series(source: str | Path | TextIO) -> ReturnSeries:
    fh, owned = _open_text(source)
    try:
        rows = _read_csv_rows(fh, ("month", "log_excess", "simple_excess", "risk_free"))
    finally:
        if owned:
            fh.close()
    months: list[str] = []
    cols: list[list[float]] = [[], [], []]
    for line_no, row in rows:
        months.append(parse_month(row[0]))
        for j, cell in enumerate(row[1:4]):
            v = float(cell)
            if not math.isfinite(v):
                raise DataError(f"non-finite value at line {line_no}")
            cols[j].append(v)
    if not months:
        raise DataError("empty return series")
    expected = month_range(months[0], months[-1])
    if months != expected:
        raise DataError("return series months must be contiguous and increasing")
    log_e, simple_e, rf = (np.asarray(c, dtype=float) for c in cols)
    _check_return_consistency(months, log_e, simple_e, rf)
    return ReturnSeries(tuple(months), log_e, simple_e, rf)


def write_return_series(series: ReturnSeries, dest: str | Path | TextIO) -> None:
    fh, owned = (dest, False) if hasattr(dest, "write") else (open(dest, "w", encoding="utf-8"), True)
    try:
        fh.write("month,log_excess,simple_excess,risk_free\n")
        for m, le, se, rf in zip(series.months, series.log_excess, series.simple_excess, series.risk_free):
            fh.write(f"{m},{float(le)!r},{float(se)!r},{float(rf)!r}\n")
    finally:
        if owned:
            fh.close()


@dataclass(frozen=True)
class RegimeCalendar:
    """Expansion/recession label per month."""

    months: tuple[str, ...]
    labels: tuple[str, ...]  # "expansion" | "recession"

    def label_of(self, month: str) -> str:
        try:
            return self.labels[self.months.index(month)]
        except ValueError:
            raise KeyError(f"month {month} not in regime calendar") from None

    def indicators(self, months: Iterable[str]) -> tuple[np.ndarray, np.ndarray]:
        """Boolean (expansion, recession) indicator vectors for the given months.

        Raises KeyError when a month is unlabeled; the two vectors are
        complementary by construction.
        """
        lookup = dict(zip(self.months, self.labels))
        up = []
        for m in months:
            if m not in lookup:
                raise KeyError(f"month {m} not in regime calendar")
            up.append(lookup[m] == "expansion")
        up_arr = np.asarray(up, dtype=bool)
        return up_arr, ~up_arr


def parse_regime_calendar(source: str | Path | TextIO) -> RegimeCalendar:
    fh, owned = _open_text(source)
    try:
        rows = _read_csv_rows(fh, ("month", "label"))
    finally:
        if owned:
            fh.close()
    months: list[str] = []
    labels: list[str] = []
    seen: set[str] = set()
    for line_no, row in rows:
        m = parse_month(row[0])
        label = row[1].strip()
        if label not in ("expansion", "recession"):
            raise DataError(f"unknown regime label {label!r} at line {line_no}")
        if m in seen:
            raise DataError(f"duplicate month {m} at line {line_no}")
        seen.add(m)
        months.append(m)
        labels.append(label)
    order = sorted(range(len(months)), key=lambda i: months[i])
    return RegimeCalendar(tuple(months[i] for i in order), tuple(labels[i] for i in order))


def write_regime_calendar(calendar: RegimeCalendar, dest: str | Path | TextIO) -> None:
    fh, owned = (dest, False) if hasattr(dest, "write") else (open(dest, "w", encoding="utf-8"), True)
    try:
        fh.write("month,label\n")
        for m, label in zip(calendar.months, calendar.labels):
            fh.write(f"{m},{label}\n")
    finally:
        if owned:
            fh.close()


@dataclass(frozen=True, eq=False)
class PredictorSeries:
    name: str
    months: tuple[str, ...]
    values: np.ndarray

    def value_at(self, month: str) -> float:
        return float(self.values[self.months.index(month)])


def parse_predictor_file(source: str | Path | TextIO) -> list[PredictorSeries]:
    fh, owned = _open_text(source)
    try:
        header = fh.readline().rstrip("\n").split(",")
        if len(header) < 2 or header[0] != "month":
            raise DataError("predictor file must start with a 'month' column")
        names = header[1:]
        if len(set(names)) != len(names):
            raise DataError("duplicate predictor names")
        months: list[str] = []
        cols: list[list[float]] = [[] for _ in names]
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            cells = line.rstrip("\n").split(",")
            if len(cells) != len(header):
                raise DataError(f"wrong field count at line {line_no}")
            months.append(parse_month(cells[0]))
            for j, cell in enumerate(cells[1:]):
                v = float(cell)
                if not math.isfinite(v):
                    raise DataError(f"non-finite value for {names[j]} at line {line_no}")
                cols[j].append(v)
    finally:
        if owned:
            fh.close()
    if sorted(months) != months or len(set(months)) != len(months):
        raise DataError("predictor months must be increasing and unique")
    return [
        PredictorSeries(name, tuple(months), np.asarray(col, dtype=float))
        for name, col in zip(names, cols)
    ]


def _read_csv_rows(fh: TextIO, header: tuple[str, ...]) -> Iterator[tuple[int, list[str]]]:
    first = fh.readline().rstrip("\n")
    if first.split(",") != list(header):
        raise DataError(f"bad header {first!r}, expected {','.join(header)}")
    out = []
    for line_no, line in enumerate(fh, start=2):
        if not line.strip():
            continue
        cells = line.rstrip("\n").split(",")
        if len(cells) != len(header):
            raise DataError(f"wrong field count at line {line_no}")
        out.append((line_no, cells))
    return iter(out)


def series_summary(values: np.ndarray) -> dict[str, float | None]:
    """Mean/sd/skew/kurtosis/min/max/lag-1 autocorrelation of one series.

    Kurtosis is the raw fourth standardized moment (normal = 3).  sd uses
    the n-1 denominator.  rho1 is None for constant series.
    """
    x = np.asarray(values, dtype=float)
    n = len(x)
    mean = float(np.mean(x))
    sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
    out: dict[str, float | None] = {
        "mean": mean,
        "sd": sd,
        "min": float(np.min(x)),
        "max": float(np.max(x)),
    }
    if sd > 0:
        z = (x - mean) / np.std(x)  # population sd for moment ratios
        out["skew"] = float(np.mean(z**3))
        out["kurt"] = float(np.mean(z**4))
    else:
        out["skew"] = None
        out["kurt"] = None
    if n > 2 and sd > 0:
        dev = x - mean
        denom = float(np.sum(dev * dev))
        out["rho1"] = float(np.sum(dev[1:] * dev[:-1]) / denom)
    else:
        out["rho1"] = None
    return out


def parse_stock_returns(source: str | Path | TextIO) -> dict[str, dict[str, float]]:
    """Parse an optional stock-level return panel: CSV "month,stock,ret".

    Returns {month: {stock: simple return}}.
    """
    fh, owned = _open_text(source)
    try:
        rows = _read_csv_rows(fh, ("month", "stock", "ret"))
    finally:
        if owned:
            fh.close()
    panel: dict[str, dict[str, float]] = {}
    for line_no, row in rows:
        m = parse_month(row[0])
        stock = row[1]
        v = float(row[2])
        if not math.isfinite(v):
            raise DataError(f"non-finite return at line {line_no}")
        by_stock = panel.setdefault(m, {})
        if stock in by_stock:
            raise DataError(f"duplicate (month, stock) at line {line_no}")
        by_stock[stock] = v
    return panel


def write_stock_returns(panel: dict[str, dict[str, float]], dest: str | Path | TextIO) -> None:
    fh, owned = (dest, False) if hasattr(dest, "write") else (open(dest, "w", encoding="utf-8"), True)
    try:
        fh.write("month,stock,ret\n")
        for m in sorted(panel):
            for stock in panel[m]:
                fh.write(f"{m},{stock},{float(panel[m][stock])!r}\n")
    finally:
        if owned:
            fh.close()
