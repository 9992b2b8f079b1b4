"""Connection scores, daily connectivity matrices and connection indices.

Per article k and ordered stock pair (i, j) three connection scores are
defined from the mention flag Cnct (1 iff the stock appears in the article)
and a scalar news tone:

    type 1:  tone_i * cnct_j     (sentiment spillover, asymmetric)
    type 2:  tone_i * tone_j     (sentiment co-movement, symmetric)
    type 3:  cnct_i * cnct_j     (coverage counts, symmetric)

The daily connectivity matrix of one type sums scores over the day's
articles; the daily connection index is the day-over-day change in the
off-diagonal share of the matrix mass.  Tone-weighted types carry a tone
variant (opt = positive - negative, pos, neg); type 3 is tone-free.

All accumulation runs in a canonical (article_id, i, j) order so that
repeated runs and chunked/parallel runs produce bit-identical numbers.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from itertools import groupby
from typing import Iterable, Literal, Sequence

import numpy as np

from .ingest import NewsEvent, StockIndex, ToneTriple
from .months import month_of

Variant = Literal["opt", "pos", "neg"]

VARIANTS: tuple[Variant, ...] = ("opt", "pos", "neg")
SCORE_TYPES = (1, 2, 3)

# |total matrix mass| below this is treated as a degenerate day: the
# off-diagonal fraction is numerically meaningless there.
EPS_DENOMINATOR = 1e-12


def tone_scalar(tone: ToneTriple, variant: Variant) -> float:
    """Scalar tone: opt = positive - negative, pos/neg the raw shares."""
    if variant == "opt":
        return tone.positive - tone.negative
    if variant == "pos":
        return tone.positive
    if variant == "neg":
        return tone.negative
    raise ValueError(f"unknown tone variant {variant!r}")


def combo_label(score_type: int, variant: Variant | None) -> str:
    """CSV/report label for one (score type, tone variant) pair."""
    if score_type == 3:
        return "mci_3"
    return f"mci_{score_type}_{variant}"


def connection_scores(
    event: NewsEvent, variant: Variant, index: StockIndex
) -> list[tuple[int, int, int, float]]:
    """All nonzero per-article scores as (score_type, i, j, value).

    Every ordered pair of mentioned stocks appears, including the diagonal;
    pairs where a formula evaluates to zero for types 1 and 2 are still
    emitted so the per-article identities stay assertable.  Output is sorted
    by (score_type, i, j).
    """
    idx = sorted(index.of(s) for s in event.mentions)
    tones = {index.of(s): t for s, t in event.mentions.items()}
    out: list[tuple[int, int, int, float]] = []
    for score_type in SCORE_TYPES:
        for i in idx:
            for j in idx:
                if score_type == 1:
                    value = tone_scalar(tones[i], variant)
                elif score_type == 2:
                    value = tone_scalar(tones[i], variant) * tone_scalar(tones[j], variant)
                else:
                    value = 1
                out.append((score_type, i, j, value))
    return out


@dataclass
class ConnectivityMatrix:
    """Sparse daily accumulation of one connection-score type.

    entries maps (i, j) to the summed score; only pairs touched by the
    day's articles are present.  Type-3 entries are integer co-mention
    counts.
    """

    date: dt.date
    score_type: int
    variant: Variant | None
    entries: dict[tuple[int, int], float]
    n_stocks: int

    def offdiag_sum(self) -> float:
        return sum(v for (i, j), v in self.entries.items() if i != j)

    def total_sum(self) -> float:
        return sum(self.entries.values())

    def row_offdiag_mass(self) -> dict[int, float]:
        """Per-stock sum of off-diagonal entries in the stock's row."""
        mass: dict[int, float] = {}
        for (i, j), v in self.entries.items():
            if i != j:
                mass[i] = mass.get(i, 0.0) + v
        return mass


def _article_contributions(
    event: NewsEvent, score_type: int, variant: Variant | None, index: StockIndex
) -> list[tuple[int, int, float]]:
    idx = sorted(index.of(s) for s in event.mentions)
    if score_type == 3:
        return [(i, j, 1) for i in idx for j in idx]
    tones = {index.of(s): tone_scalar(t, variant) for s, t in event.mentions.items()}  # type: ignore[arg-type]
    if score_type == 1:
        return [(i, j, tones[i]) for i in idx for j in idx]
    if score_type == 2:
        return [(i, j, tones[i] * tones[j]) for i in idx for j in idx]
    raise ValueError(f"unknown score type {score_type}")


def daily_matrix(
    day_events: Sequence[NewsEvent],
    score_type: int,
    variant: Variant | None,
    index: StockIndex,
    chunks: int = 1,
) -> ConnectivityMatrix:
    """Sum one day's per-article scores into a sparse matrix.

    day_events must share one calendar date and be sorted by article_id.
    With chunks > 1 the per-article score computation is split into
    contiguous runs, but the contributions are folded in the canonical
    (article_id, i, j) order either way, so any chunking reproduces the
    serial result bit for bit.
    """
    if score_type == 3:
        variant = None
    elif variant not in VARIANTS:
        raise ValueError(f"score type {score_type} needs a tone variant")
    dates = {e.date for e in day_events}
    if len(dates) > 1:
        raise ValueError("daily_matrix got events from more than one day")
    entries: dict[tuple[int, int], float] = {}
    if chunks <= 1:
        for e in day_events:
            for i, j, v in _article_contributions(e, score_type, variant, index):
                key = (i, j)
                entries[key] = entries.get(key, 0) + v
    else:
        bounds = np.linspace(0, len(day_events), chunks + 1).astype(int)
        parts = [
            [c for e in day_events[a:b] for c in _article_contributions(e, score_type, variant, index)]
            for a, b in zip(bounds[:-1], bounds[1:])
        ]
        for part in parts:
            for i, j, v in part:
                entries[(i, j)] = entries.get((i, j), 0) + v
    date = dates.pop() if dates else dt.date.min
    return ConnectivityMatrix(date, score_type, variant, entries, len(index))


def offdiag_fraction(matrix: ConnectivityMatrix) -> float | None:
    """Off-diagonal mass over total mass; None when the total is degenerate."""
    total = matrix.total_sum()
    if abs(total) < EPS_DENOMINATOR:
        return None
    return matrix.offdiag_sum() / total


def mci_daily(frac_t: float | None, frac_prev: float | None) -> float | None:
    """Day-over-day change of the off-diagonal fraction."""
    if frac_t is None or frac_prev is None:
        return None
    return frac_t - frac_prev


@dataclass
class MciSeries:
    """Daily and monthly connection index values for one (type, variant)."""

    score_type: int
    variant: Variant | None
    daily: list[tuple[dt.date, float]]
    monthly: list[tuple[str, float]]
    skipped: list[tuple[dt.date, str]] = field(default_factory=list)

    @property
    def label(self) -> str:
        return combo_label(self.score_type, self.variant)

    def monthly_months(self) -> list[str]:
        return [m for m, _ in self.monthly]

    def monthly_values(self) -> np.ndarray:
        return np.asarray([v for _, v in self.monthly], dtype=float)


def events_by_day(events: Iterable[NewsEvent]) -> list[tuple[dt.date, list[NewsEvent]]]:
    """Group (already sorted) events into per-day lists."""
    return [(day, list(group)) for day, group in groupby(events, key=lambda e: e.date)]


def _truncated_fraction(
    day_events: Sequence[NewsEvent],
    k: int,
    score_type: int,
    variant: Variant | None,
    index: StockIndex,
) -> float | None:
    return offdiag_fraction(daily_matrix(day_events[:k], score_type, variant, index))


def build_mci_series(
    events: Sequence[NewsEvent],
    score_type: int,
    variant: Variant | None,
    index: StockIndex,
    *,
    lag_mode: str = "per_day",
    monthly_agg: str = "mean",
    day_groups: Sequence[tuple[dt.date, list[NewsEvent]]] | None = None,
) -> MciSeries:
    """Daily index series plus monthly aggregation for one (type, variant).

    The daily value at t is the difference between the day-t off-diagonal
    fraction and the fraction of the previous day that had a defined
    fraction (empty or degenerate days are skipped, not propagated as
    missing).  lag_mode selects how the lagged fraction counts articles:

      per_day -- the previous day's own article count (default)
      literal -- the previous day truncated to at most the current day's
                 article count, matching a same-count reading of the
                 index definition

    monthly_agg is one of mean/last/sum over the month's defined dailies.
    Fewer than two days with defined fractions yields an empty series.
    """
    if monthly_agg not in ("mean", "last", "sum"):
        raise ValueError(f"unknown monthly aggregation {monthly_agg!r}")
    if lag_mode not in ("per_day", "literal"):
        raise ValueError(f"unknown lag mode {lag_mode!r}")
    if score_type == 3:
        variant = None
    groups = events_by_day(events) if day_groups is None else day_groups
    daily: list[tuple[dt.date, float]] = []
    skipped: list[tuple[dt.date, str]] = []
    prev: tuple[dt.date, Sequence[NewsEvent], float] | None = None  # last defined day
    for day, day_events in groups:
        frac = offdiag_fraction(daily_matrix(day_events, score_type, variant, index))
        if frac is None:
            skipped.append((day, "degenerate or empty day"))
            continue
        if prev is not None:
            if lag_mode == "per_day":
                lagged = prev[2]
            else:
                lagged = _truncated_fraction(prev[1], len(day_events), score_type, variant, index)
            value = mci_daily(frac, lagged)
            if value is None:
                skipped.append((day, "lagged fraction undefined"))
            else:
                daily.append((day, value))
        prev = (day, day_events, frac)
    monthly: list[tuple[str, float]] = []
    for month, group in groupby(daily, key=lambda dv: month_of(dv[0])):
        values = [v for _, v in group]
        if monthly_agg == "mean":
            agg = sum(values) / len(values)
        elif monthly_agg == "last":
            agg = values[-1]
        else:
            agg = sum(values)
        monthly.append((month, agg))
    return MciSeries(score_type, variant, daily, monthly, skipped)


def monthly_matrices(
    events: Sequence[NewsEvent],
    score_type: int,
    variant: Variant | None,
    index: StockIndex,
) -> dict[str, ConnectivityMatrix]:
    """Month-aggregated connectivity matrices (sum of the month's dailies)."""
    out: dict[str, ConnectivityMatrix] = {}
    for day, day_events in events_by_day(events):
        m = daily_matrix(day_events, score_type, variant, index)
        month = month_of(day)
        acc = out.get(month)
        if acc is None:
            out[month] = ConnectivityMatrix(day, score_type, m.variant, dict(m.entries), len(index))
        else:
            for key, v in m.entries.items():
                acc.entries[key] = acc.entries.get(key, 0) + v
    return out


def standardize_series(values: Sequence[float] | np.ndarray, mode: str = "full-sample") -> np.ndarray:
    """Zero-mean unit-variance scaling, full-sample or expanding-window.

    full-sample uses the whole series' mean and sd (ddof=1).  recursive
    standardizes each value with the mean/sd of the observations up to and
    including it, so downstream forecasting never peeks ahead; positions
    whose prefix is shorter than 2 or has zero variance come back as NaN.
    A series with zero overall variance is an error in both modes.
    """
    x = np.asarray(values, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least 2 observations to standardize")
    full_sd = float(np.std(x, ddof=1))
    if full_sd == 0.0:
        raise ValueError("cannot standardize a zero-variance series")
    if mode == "full-sample":
        return (x - np.mean(x)) / full_sd
    if mode != "recursive":
        raise ValueError(f"unknown standardization mode {mode!r}")
    out = np.full(len(x), np.nan)
    for t in range(1, len(x)):
        prefix = x[: t + 1]
        sd = float(np.std(prefix, ddof=1))
        if sd > 0:
            out[t] = (x[t] - np.mean(prefix)) / sd
    return out
