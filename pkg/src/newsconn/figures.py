"""Matplotlib renderings of the report charts, written as PNG files.

Charts mirror the CSV outputs: standardized monthly connection indices,
cumulative squared-forecast-error differences per predictor, forecast paths
for the first predictor, and the sorted-portfolio cumulative returns.
Rendering is file-only (Agg) and stripped of metadata so repeated runs
produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import oos
from .connectivity import MciSeries, standardize_series
from .portfolio import GROUPS, SortedPortfolios

SAVE_KW = dict(dpi=130, metadata={"Software": None})


def _month_axis(ax, months: list[str]) -> None:
    step = max(1, len(months) // 8)
    ticks = list(range(0, len(months), step))
    ax.set_xticks(ticks)
    ax.set_xticklabels([months[i] for i in ticks], rotation=45, ha="right", fontsize=8)


def drawable(series: list[MciSeries]) -> list[MciSeries]:
    return [
        s for s in series
        if len(s.monthly) >= 2 and float(np.std(s.monthly_values(), ddof=1)) > 0.0
    ]


def mci_figure(series: list[MciSeries], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for s in series:
        months = s.monthly_months()
        ax.plot(range(len(months)), standardize_series(s.monthly_values()),
                lw=1.0, label=s.label)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_ylabel("standardized monthly index")
    ax.legend(fontsize=8)
    _month_axis(ax, series[0].monthly_months())
    fig.tight_layout()
    fig.savefig(path, **SAVE_KW)
    plt.close(fig)


def csfe_figure(tracks: list[oos.ForecastTrack], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(9, 4.5))
    months = list(tracks[0].months)
    for t in tracks:
        values = [v for _, v in oos.csfe_difference(t)]
        ax.plot(range(len(months)), values, lw=1.0, label=t.label)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_ylabel("cumulative squared-error difference")
    ax.legend(fontsize=8)
    _month_axis(ax, months)
    fig.tight_layout()
    fig.savefig(path, **SAVE_KW)
    plt.close(fig)


def forecast_figure(track: oos.ForecastTrack, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(9, 4.5))
    months = list(track.months)
    xs = range(len(months))
    ax.plot(xs, track.actual, lw=0.8, color="0.6", label="actual")
    ax.plot(xs, track.model, lw=1.2, label=f"{track.label} forecast")
    ax.plot(xs, track.benchmark, lw=1.2, ls="--", label="historical mean")
    ax.set_ylabel("excess market return")
    ax.legend(fontsize=8)
    _month_axis(ax, months)
    fig.tight_layout()
    fig.savefig(path, **SAVE_KW)
    plt.close(fig)


def sorted_figure(ports: SortedPortfolios, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(9, 4.5))
    xs = range(len(ports.months))
    for group in GROUPS:
        ax.plot(xs, ports.cumulative[group], lw=1.2, label=f"{group} connection")
    ax.set_ylabel("cumulative return (1 = start)")
    ax.legend(fontsize=8)
    _month_axis(ax, ports.months)
    fig.tight_layout()
    fig.savefig(path, **SAVE_KW)
    plt.close(fig)


def render_all(
    fig_dir: Path,
    mci: dict[str, MciSeries],
    tracks: list[oos.ForecastTrack],
    sorted_ports: SortedPortfolios | None,
) -> dict[str, Path]:
    """Render every applicable chart; returns {name: path}."""
    written: dict[str, Path] = {}
    headline = drawable([mci[k] for k in ("mci_1_opt", "mci_2_opt", "mci_3") if k in mci])
    if not headline:
        headline = drawable(list(mci.values()))[:3]
    if headline:
        p = fig_dir / "mci_monthly.png"
        mci_figure(headline, p)
        written["mci_monthly"] = p
    if tracks:
        p = fig_dir / "csfe.png"
        csfe_figure(tracks[: min(len(tracks), 6)], p)
        written["csfe"] = p
        p = fig_dir / "forecasts.png"
        forecast_figure(tracks[0], p)
        written["forecasts"] = p
    if sorted_ports is not None:
        p = fig_dir / "sorted.png"
        sorted_figure(sorted_ports, p)
        written["sorted"] = p
    return written
