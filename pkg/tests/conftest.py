"""Shared fixtures and event-building helpers."""

from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from newsconn.ingest import NewsEvent, ToneTriple, build_stock_index


def triple_from_opt(opt: float) -> ToneTriple:
    """A valid tone triple whose optimism score equals opt."""
    if opt >= 0:
        return ToneTriple(opt, 0.0, 1.0 - opt)
    return ToneTriple(0.0, -opt, 1.0 + opt)


def mk_event(article_id: str, date: dt.date, tones: dict[str, float | ToneTriple]) -> NewsEvent:
    mentions = {
        s: t if isinstance(t, ToneTriple) else triple_from_opt(t) for s, t in tones.items()
    }
    return NewsEvent(article_id, date, mentions)


def random_events(rng: np.random.Generator, n_days: int, n_stocks: int, lam: float = 4.0,
                  start: dt.date = dt.date(2001, 1, 1)) -> list[NewsEvent]:
    """A small random news stream for oracle comparisons."""
    events = []
    serial = 0
    day = start
    for _ in range(n_days):
        for _ in range(rng.poisson(lam)):
            m = 1 if rng.random() < 0.4 else int(rng.integers(2, min(4, n_stocks) + 1))
            chosen = rng.choice(n_stocks, size=m, replace=False)
            tones = {f"S{i:03d}": float(np.clip(rng.normal(0, 0.4), -0.9, 0.9)) for i in chosen}
            events.append(mk_event(f"a{serial:06d}", day, tones))
            serial += 1
        day += dt.timedelta(days=1)
    return events


@pytest.fixture(scope="session")
def oracle_events():
    rng = np.random.default_rng(20240811)
    events = random_events(rng, n_days=100, n_stocks=12, lam=5.0)
    return events, build_stock_index(events)
