"""Synthetic news universe with planted, recoverable ground truth.

The generator draws a weekday news stream (single- and multi-stock
articles with tone triples), computes the monthly connection index of a
target (type, variant) with the same code the pipeline uses, and then
draws market returns whose next-month relation to the standardized index
has a chosen slope.  It also plants a negative cross-sectional relation
between a stock's monthly co-mention mass and its next-month return, for
the sorted-portfolio exercise.  Everything is a deterministic function of
the seed.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .connectivity import Variant, build_mci_series, monthly_matrices
from .ingest import (
    NewsEvent,
    RegimeCalendar,
    ReturnSeries,
    StockIndex,
    ToneTriple,
    build_stock_index,
    write_news_file,
    write_regime_calendar,
    write_return_series,
    write_stock_returns,
)
from .months import month_of, weekdays, weekdays_for_months


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs of the synthetic universe; every output is seed-deterministic.

    planted_beta is the slope of the standardized next-month log excess
    return on the standardized monthly target index (so values in (-1, 1);
    0 gives a null universe).  Return mean/sd calibration defaults follow
    the usual monthly equity numbers (0.82% mean, 5.07% sd).  When noise_sd
    is None it is derived so the total return sd stays at return_sd.
    """

    n_stocks: int = 50
    n_days: int = 504
    n_months: int | None = None  # overrides n_days with exact whole months
    start: str = "1996-01-01"  # first calendar day, weekdays only
    articles_per_day: float = 8.0  # Poisson mean per trading day
    connected_share: float = 0.5
    extra_mention_p: float = 0.6  # geometric stop prob for mentions beyond 2
    tone_persistence: float = 0.6
    tone_common_sd: float = 0.35
    tone_idio_sd: float = 0.25
    planted_beta: float = 0.0
    return_mean: float = 0.0082
    return_sd: float = 0.0507
    noise_sd: float | None = None
    rf_mean: float = 0.0021
    target_type: int = 2
    target_variant: Variant = "opt"
    recession_stay: float = 0.85
    expansion_stay: float = 0.95
    emit_stock_panel: bool = True
    sort_relation: float = 0.01  # monthly return per cross-sectional sd of connection mass
    stock_idio_sd: float = 0.05
    seed: int = 0

    def validate(self) -> None:
        if self.n_stocks < 1:
            raise ValueError("need at least one stock")
        if self.connected_share > 0 and self.n_stocks < 2:
            raise ValueError("connected articles need at least 2 stocks")
        if self.emit_stock_panel and self.n_stocks < 10:
            raise ValueError("the stock panel needs >= 10 stocks for decile sorts")
        if not 0.0 <= self.connected_share <= 1.0:
            raise ValueError("connected_share must be a fraction")
        if self.noise_sd is None and not abs(self.planted_beta) < 1.0:
            raise ValueError("planted_beta must be in (-1, 1) when noise_sd is derived")
        if self.n_days < 40:
            raise ValueError("need at least two months of trading days")


@dataclass
class Universe:
    config: SyntheticConfig
    events: list[NewsEvent]
    index: StockIndex
    returns: ReturnSeries
    regime: RegimeCalendar
    stock_returns: dict[str, dict[str, float]] | None
    truth: dict


def _tone_triple(opt: float, intensity: float) -> ToneTriple:
    # decompose a signed tone into a valid (pos, neg, neu) probability vector
    pos = (intensity + opt) / 2.0
    neg = (intensity - opt) / 2.0
    return ToneTriple(pos, neg, max(0.0, 1.0 - pos - neg))


def _draw_events(
    cfg: SyntheticConfig, rng: np.random.Generator, days: list[dt.date]
) -> list[NewsEvent]:
    stocks = [f"S{i:04d}" for i in range(cfg.n_stocks)]
    n = cfg.n_stocks
    n_days = len(days)
    counts = rng.poisson(cfg.articles_per_day, size=n_days)

    # daily common tone, a clipped AR(1)
    eta = rng.standard_normal(n_days)
    common = np.empty(n_days)
    level = 0.0
    for d in range(n_days):
        level = cfg.tone_persistence * level + cfg.tone_common_sd * eta[d]
        level = -0.8 if level < -0.8 else (0.8 if level > 0.8 else level)
        common[d] = level

    k_total = int(counts.sum())
    if k_total == 0:
        return []
    day_of_article = np.repeat(np.arange(n_days), counts)
    connected = rng.random(k_total) < cfg.connected_share
    sizes = np.where(
        connected, np.minimum(n, 1 + rng.geometric(cfg.extra_mention_p, size=k_total)), 1
    )
    m_total = int(sizes.sum())
    centers = np.where(connected, common[day_of_article], 0.0)
    opts = np.clip(np.repeat(centers, sizes) + cfg.tone_idio_sd * rng.standard_normal(m_total),
                   -0.95, 0.95)
    intensities = rng.uniform(np.abs(opts), 1.0)
    buf = rng.integers(0, n, size=2 * m_total + 8 * k_total).tolist()

    sizes_l = sizes.tolist()
    day_l = day_of_article.tolist()
    opts_l = opts.tolist()
    ints_l = intensities.tolist()
    events: list[NewsEvent] = []
    pos = 0
    cursor = 0
    for a in range(k_total):
        m = sizes_l[a]
        chosen: dict[int, None] = {}
        if m * 2 >= n:
            for s in rng.permutation(n)[:m].tolist():
                chosen[s] = None
        else:
            # distinct stocks by rejection against the shared buffer
            while len(chosen) < m:
                if cursor >= len(buf):
                    buf = rng.integers(0, n, size=4 * m_total).tolist()
                    cursor = 0
                s = buf[cursor]
                cursor += 1
                if s not in chosen:
                    chosen[s] = None
        mentions = {
            stocks[s]: _tone_triple(opts_l[pos + i], ints_l[pos + i])
            for i, s in enumerate(chosen)
        }
        pos += m
        events.append(NewsEvent(f"a{a:08d}", days[day_l[a]], mentions))
    return events


def _markov_regimes(
    months: list[str], rng: np.random.Generator, cfg: SyntheticConfig
) -> RegimeCalendar:
    labels = []
    state = "expansion"
    for _ in months:
        labels.append(state)
        stay = cfg.expansion_stay if state == "expansion" else cfg.recession_stay
        if rng.random() >= stay:
            state = "recession" if state == "expansion" else "expansion"
    return RegimeCalendar(tuple(months), tuple(labels))


def generate_universe(cfg: SyntheticConfig) -> Universe:
    """Draw one synthetic universe; see the module docstring for the model."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    start = dt.date.fromisoformat(cfg.start)
    if cfg.n_months is not None:
        days = weekdays_for_months(start, cfg.n_months)
    else:
        days = weekdays(start, cfg.n_days)
    months = sorted({month_of(d) for d in days})
    if len(months) < 2:
        raise ValueError("universe must span at least two months")

    events = _draw_events(cfg, rng, days)
    index = build_stock_index(events)
    target = build_mci_series(events, cfg.target_type, cfg.target_variant, index)
    mci_months = target.monthly_months()
    if mci_months != months:
        missing = sorted(set(months) - set(mci_months))
        raise ValueError(
            f"monthly index undefined for {missing[:3]}...; raise articles_per_day"
        )
    mci = target.monthly_values()
    sd = float(np.std(mci, ddof=1))
    if sd == 0.0:
        # a constant index (e.g. no connected news at all) only supports a null universe
        if cfg.planted_beta != 0.0:
            raise ValueError("constant monthly index cannot carry a planted signal")
        z = np.zeros(len(mci))
    else:
        z = (mci - np.mean(mci)) / sd

    # returns: month 0 is pure noise, later months load on the lagged index
    b = cfg.planted_beta
    noise_sd = cfg.noise_sd
    if noise_sd is None:
        noise_sd = cfg.return_sd * math.sqrt(max(0.0, 1.0 - b * b))
    eta = rng.standard_normal(len(months))
    log_excess = cfg.return_mean + noise_sd * eta
    log_excess[1:] += b * cfg.return_sd * z[:-1]

    rf_net = np.empty(len(months))
    level = cfg.rf_mean
    for i in range(len(months)):
        level = max(1e-4, 0.98 * level + 0.02 * cfg.rf_mean + 1e-4 * rng.standard_normal())
        rf_net[i] = level
    rf_gross = 1.0 + rf_net
    log_total = log_excess + np.log(rf_gross)
    simple_excess = np.exp(log_total) - rf_gross
    returns = ReturnSeries(tuple(months), log_excess, simple_excess, rf_gross)

    regime = _markov_regimes(months, rng, cfg)

    stock_returns = None
    measure_panel: dict[str, dict[str, float]] = {}
    if cfg.emit_stock_panel:
        by_month = monthly_matrices(events, 3, None, index)
        for m in months:
            mass = by_month[m].row_offdiag_mass() if m in by_month else {}
            measure_panel[m] = {sid: float(mass.get(i, 0)) for i, sid in enumerate(index.ids)}
        stock_returns = {}
        for mi in range(1, len(months)):
            prev_meas = measure_panel[months[mi - 1]]
            vals = np.asarray([prev_meas[s] for s in index.ids])
            msd = float(np.std(vals))
            zeta = (vals - np.mean(vals)) / msd if msd > 0 else np.zeros(len(vals))
            base = float(simple_excess[mi] + rf_net[mi])
            idio = rng.standard_normal(len(vals))
            rets = base - cfg.sort_relation * zeta + cfg.stock_idio_sd * idio
            stock_returns[months[mi]] = {
                s: float(r) for s, r in zip(index.ids, rets)
            }

    truth = {
        "seed": cfg.seed,
        "planted_beta_sd_units": b,
        "planted_slope_return_units": b * cfg.return_sd,
        "noise_sd": noise_sd,
        "target": {"score_type": cfg.target_type, "variant": cfg.target_variant},
        "months": months,
        "latent_signal": [float(v) for v in z],
        "monthly_mci": [float(v) for v in mci],
        "recession_months": [m for m, l in zip(regime.months, regime.labels) if l == "recession"],
        "sort_relation": cfg.sort_relation if cfg.emit_stock_panel else None,
        "n_events": len(events),
    }
    return Universe(cfg, events, index, returns, regime, stock_returns, truth)


def write_universe(universe: Universe, out_dir: str | Path) -> dict[str, Path]:
    """Write news.jsonl, returns.csv, regime.csv, stock_returns.csv, truth.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "news": out / "news.jsonl",
        "returns": out / "returns.csv",
        "regime": out / "regime.csv",
        "truth": out / "truth.json",
    }
    write_news_file(universe.events, paths["news"])
    write_return_series(universe.returns, paths["returns"])
    write_regime_calendar(universe.regime, paths["regime"])
    if universe.stock_returns is not None:
        paths["stock_returns"] = out / "stock_returns.csv"
        write_stock_returns(universe.stock_returns, paths["stock_returns"])
    truth = dict(universe.truth)
    truth["config"] = asdict(universe.config)
    paths["truth"].write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths
