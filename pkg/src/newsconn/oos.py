"""Recursive out-of-sample forecasting and benchmark comparison.

A forecast track holds, per evaluation month, the realized excess return,
the model forecast from an expanding-window predictive regression, and the
expanding historical-mean benchmark.  On top of tracks: proportional MSFE
reduction (unbounded below, capped at 1), the non-negative-premium
truncation, regime splits, the MSFE-adjusted nested-model test, cumulative
squared-error difference paths, and cross-predictor combinations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import norm

from .ingest import RegimeCalendar


@dataclass(frozen=True, eq=False)
class ForecastTrack:
    """Aligned actual / model / benchmark forecasts over the eval window."""

    label: str
    months: tuple[str, ...]
    actual: np.ndarray
    model: np.ndarray
    benchmark: np.ndarray
    fallback_months: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.months)
        if not (len(self.actual) == len(self.model) == len(self.benchmark) == n):
            raise ValueError("track vectors must share the evaluation window")

    def __len__(self) -> int:
        return len(self.months)


def historical_mean_forecasts(y: np.ndarray, r: int) -> np.ndarray:
    """Expanding-mean forecasts: entry k predicts y[r+k] from y[:r+k]."""
    y = np.asarray(y, dtype=float)
    if r < 1 or r >= len(y):
        raise ValueError(f"initial window {r} out of range for {len(y)} observations")
    csum = np.cumsum(y)
    t = np.arange(r, len(y))
    return csum[t - 1] / t


def recursive_forecasts(
    months: tuple[str, ...],
    y: np.ndarray,
    x: np.ndarray,
    r: int,
    label: str,
    min_train: int = 24,
) -> ForecastTrack:
    """Expanding-window predictive-regression forecasts against the mean benchmark.

    months/y cover the full sample 0..T-1; x[t] is the predictor value known
    at the end of month t (x[T-1] may be unused).  The forecast for month
    t+1 fits y[s+1] ~ x[s] on s < t and evaluates at x[t]; training pairs
    with non-finite x are dropped, and an origin whose usable predictor
    history is degenerate (zero variance, or x[t] itself non-finite) falls
    back to the benchmark and is logged in fallback_months.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    T = len(y)
    if len(x) < T - 1:
        raise ValueError("predictor must cover the sample through T-1")
    if r < min_train:
        raise ValueError(f"initial training window {r} below the floor {min_train}")
    if r >= T:
        raise ValueError("initial training window leaves no evaluation months")
    bench = historical_mean_forecasts(y, r)
    model = np.empty(T - r)
    fallbacks: list[str] = []
    for k, t in enumerate(range(r, T)):
        xs = x[: t - 1]
        ys = y[1:t]
        ok = np.isfinite(xs)
        xs, ys = xs[ok], ys[ok]
        x_now = x[t - 1]
        usable = (
            len(xs) >= 3
            and math.isfinite(x_now)
            and float(np.std(xs)) > 0.0
        )
        if not usable:
            model[k] = bench[k]
            fallbacks.append(months[t])
            continue
        X = np.column_stack([np.ones(len(xs)), xs])
        coef, _, rank, _ = np.linalg.lstsq(X, ys, rcond=None)
        if rank < 2:
            model[k] = bench[k]
            fallbacks.append(months[t])
            continue
        model[k] = coef[0] + coef[1] * x_now
    return ForecastTrack(
        label=label,
        months=tuple(months[r:]),
        actual=y[r:].copy(),
        model=model,
        benchmark=bench,
        fallback_months=tuple(fallbacks),
    )


def truncate_forecasts(track: ForecastTrack) -> ForecastTrack:
    """Floor the model forecast at zero (non-negative premium); benchmark untouched."""
    return replace(track, model=np.maximum(track.model, 0.0))


def r2_os(track: ForecastTrack) -> float:
    """1 - SSE(model)/SSE(benchmark) over the evaluation window."""
    if len(track) < 2:
        raise ValueError("need at least 2 evaluation months")
    sse_bench = float(np.sum((track.actual - track.benchmark) ** 2))
    if sse_bench == 0.0:
        raise ValueError("benchmark squared error is zero")
    sse_model = float(np.sum((track.actual - track.model) ** 2))
    return 1.0 - sse_model / sse_bench


def regime_r2_os(
    track: ForecastTrack, calendar: RegimeCalendar
) -> tuple[float | None, float | None]:
    """r2_os restricted to expansion / recession months (numerator and denominator)."""
    up, down = calendar.indicators(track.months)
    out: list[float | None] = []
    for mask in (up, down):
        if not mask.any():
            out.append(None)
            continue
        sse_bench = float(np.sum((track.actual[mask] - track.benchmark[mask]) ** 2))
        if sse_bench == 0.0:
            out.append(None)
            continue
        sse_model = float(np.sum((track.actual[mask] - track.model[mask]) ** 2))
        out.append(1.0 - sse_model / sse_bench)
    return out[0], out[1]


def clark_west(track: ForecastTrack) -> tuple[float, float]:
    """MSFE-adjusted nested-model comparison: (statistic, one-sided p-value).

    f_t = (a-b)^2 - (a-m)^2 + (b-m)^2; the statistic is the t-ratio of the
    mean of f against zero and is compared to the standard normal right
    tail.  Identical model and benchmark degenerate to (0, 0.5) so batch
    runs never abort on a constant-forecast predictor.
    """
    s = len(track)
    if s < 10:
        raise ValueError("need at least 10 evaluation months")
    a, b, m = track.actual, track.benchmark, track.model
    f = (a - b) ** 2 - (a - m) ** 2 + (b - m) ** 2
    sd = float(np.std(f, ddof=1))
    if sd == 0.0:
        return 0.0, 0.5
    stat = float(np.mean(f) / (sd / math.sqrt(s)))
    return stat, float(norm.sf(stat))


def csfe_difference(track: ForecastTrack) -> list[tuple[str, float]]:
    """Running sum of (a-b)^2 - (a-m)^2; rising segments mean the model wins."""
    diff = (track.actual - track.benchmark) ** 2 - (track.actual - track.model) ** 2
    return list(zip(track.months, np.cumsum(diff).tolist()))


COMBINATION_SCHEMES = ("mean", "median", "trimmed_mean", "dmspe")


def dmspe_weights(
    tracks: list[ForecastTrack], theta: float, holdout: int = 12
) -> np.ndarray:
    """Per-period combination weights, inverse to discounted cumulative MSPE.

    phi_{i,t} discounts model i's past squared eval-window errors by
    theta^(age); the first `holdout` periods (and any period where some phi
    is still zero) fall back to equal weights over the zero-phi models.
    Rows sum to one.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must be in (0, 1]")
    k = len(tracks)
    s = len(tracks[0])
    err2 = np.stack([(t.actual - t.model) ** 2 for t in tracks], axis=1)  # s x k
    weights = np.empty((s, k))
    for t in range(s):
        if t < holdout:
            weights[t] = 1.0 / k
            continue
        ages = t - 1 - np.arange(t)
        phi = (theta**ages)[:, None] * err2[:t]
        phi = phi.sum(axis=0)
        if np.any(phi <= 0.0):
            zero = phi <= 0.0
            weights[t] = np.where(zero, 1.0 / zero.sum(), 0.0)
        else:
            inv = 1.0 / phi
            weights[t] = inv / inv.sum()
    return weights


def combine_forecasts(
    tracks: list[ForecastTrack],
    scheme: str,
    theta: float = 1.0,
    holdout: int = 12,
    label: str | None = None,
) -> ForecastTrack:
    """Pool member model forecasts per period; benchmark and actuals carry over.

    Schemes: mean, median, trimmed_mean (drop one min and one max per
    period), dmspe (discounted-MSPE weights with discount theta).
    """
    if scheme not in COMBINATION_SCHEMES:
        raise ValueError(f"unknown combination scheme {scheme!r}")
    if len(tracks) < 2:
        raise ValueError("need at least 2 member tracks")
    first = tracks[0]
    for t in tracks[1:]:
        if t.months != first.months:
            raise ValueError("member tracks cover different evaluation windows")
        if not np.array_equal(t.actual, first.actual) or not np.array_equal(
            t.benchmark, first.benchmark
        ):
            raise ValueError("member tracks disagree on actuals or benchmark")
    M = np.stack([t.model for t in tracks], axis=1)  # s x k
    # combine in deviations from the first member: identical members then
    # reproduce themselves exactly instead of picking up rounding noise
    base = M[:, 0]
    dev = M - base[:, None]
    if scheme == "mean":
        combined = base + dev.mean(axis=1)
    elif scheme == "median":
        combined = base + np.median(dev, axis=1)
    elif scheme == "trimmed_mean":
        if M.shape[1] < 3:
            raise ValueError("trimmed mean needs at least 3 members")
        combined = base + (dev.sum(axis=1) - dev.min(axis=1) - dev.max(axis=1)) / (M.shape[1] - 2)
    else:
        w = dmspe_weights(tracks, theta, holdout)
        combined = base + (w * dev).sum(axis=1)
    if label is None:
        label = f"comb_{scheme}" if scheme != "dmspe" else f"comb_dmspe_{theta:g}"
    return ForecastTrack(
        label=label,
        months=first.months,
        actual=first.actual.copy(),
        model=combined,
        benchmark=first.benchmark.copy(),
    )
