"""Plain-text run summary assembled from the emitted CSV files.

The layout mirrors the usual predictability-study reporting: data summary
moments, in-sample regressions, out-of-sample evaluation, asset allocation,
and the sorted-portfolio terminals.  Significance stars are shown for both
two-sided and one-sided conventions, since either may be wanted.  The text
carries no timestamps so repeated runs stay byte-identical.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .ingest import series_summary

TWO_SIDED = ((2.576, "***"), (1.960, "**"), (1.645, "*"))
ONE_SIDED = ((2.326, "***"), (1.645, "**"), (1.282, "*"))


def _stars_t(t: float | None, cuts) -> str:
    if t is None:
        return ""
    for cut, stars in cuts:
        if abs(t) >= cut:
            return stars
    return ""


def _stars_p(p: float | None) -> str:
    if p is None:
        return ""
    for cut, stars in ((0.01, "***"), (0.05, "**"), (0.10, "*")):
        if p < cut:
            return stars
    return ""


def _read(path: Path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _f(cell: str, width: int = 9, digits: int = 4) -> str:
    if cell == "":
        return " " * (width - 3) + "---"
    return f"{float(cell):{width}.{digits}f}"


def render_summary(out_dir: Path, inputs, notes: list[str]) -> str:
    lines: list[str] = []
    push = lines.append
    push("run summary")
    push("=" * 78)

    push("")
    push("data summary (monthly)")
    push("-" * 78)
    push(f"{'series':<22}{'mean':>9}{'sd':>9}{'skew':>9}{'kurt':>9}{'min':>9}{'max':>9}{'rho1':>7}")
    rows = [("log_excess_market", inputs.returns.log_excess)]
    mci_rows = _read(out_dir / "mci_monthly.csv")
    by_label: dict[str, list[float]] = {}
    for r in mci_rows:
        label = f"mci_{r['type']}" if r["variant"] == "none" else f"mci_{r['type']}_{r['variant']}"
        by_label.setdefault(label, []).append(float(r["value"]))
    for label, vals in by_label.items():
        rows.append((label, np.asarray(vals)))
    for name, series in rows:
        s = series_summary(series)
        cells = "".join(
            f"{s[k]:>9.4f}" if s[k] is not None else f"{'---':>9}"
            for k in ("mean", "sd", "skew", "kurt", "min", "max")
        )
        rho = f"{s['rho1']:>7.3f}" if s["rho1"] is not None else f"{'---':>7}"
        push(f"{name:<22}{cells}{rho}")

    push("")
    push("in-sample predictive regressions (response: next-month log excess return)")
    push("-" * 78)
    push(
        f"{'predictor':<18}{'control':<12}{'beta':>9}{'t(beta)':>9}{'sig':>5}{'1s':>4}"
        f"{'phi':>9}{'r2':>9}{'r2_up':>9}{'r2_dn':>9}"
    )
    for r in _read(out_dir / "insample.csv"):
        t_beta = float(r["t_beta"])
        push(
            f"{r['predictor']:<18}{(r['control'] or '-'):<12}"
            f"{_f(r['beta'])}{_f(r['t_beta'])}"
            f"{_stars_t(t_beta, TWO_SIDED):>5}{_stars_t(t_beta, ONE_SIDED):>4}"
            f"{_f(r['phi'])}{_f(r['r2'])}{_f(r['r2_up'])}{_f(r['r2_down'])}"
        )

    push("")
    push("out-of-sample forecast evaluation (benchmark: expanding historical mean)")
    push("-" * 78)
    push(
        f"{'predictor':<22}{'r2_os':>9}{'trunc':>9}{'up':>9}{'down':>9}"
        f"{'cw_stat':>9}{'cw_p':>8}{'sig':>5}"
    )
    for r in _read(out_dir / "oos.csv"):
        p = float(r["cw_p"])
        push(
            f"{r['predictor']:<22}{_f(r['r2_os'])}{_f(r['r2_os_trunc'])}"
            f"{_f(r['r2_os_up'])}{_f(r['r2_os_down'])}{_f(r['cw_stat'])}"
            f"{p:>8.4f}{_stars_p(p):>5}"
        )

    push("")
    push("asset allocation (net of transaction costs, benchmark: mean strategy)")
    push("-" * 78)
    push(
        f"{'predictor':<22}{'gamma':>6}{'sharpe':>9}{'jk_stat':>9}"
        f"{'cer_gain':>10}{'cer_p':>8}{'sig':>5}"
    )
    for r in _read(out_dir / "allocation.csv"):
        p = float(r["cer_p"])
        push(
            f"{r['predictor']:<22}{float(r['gamma']):>6.1f}{_f(r['sharpe'])}"
            f"{_f(r['sharpe_test'])}{_f(r['cer_gain'], 10)}{p:>8.4f}{_stars_p(p):>5}"
        )

    sorted_path = out_dir / "sorted.csv"
    if sorted_path.exists():
        push("")
        push("sorted connection portfolios (terminal cumulative return)")
        push("-" * 78)
        terminal: dict[str, str] = {}
        for r in _read(sorted_path):
            terminal[r["group"]] = r["cum_return"]
        for group in ("low", "median", "high", "low_minus_high"):
            if group in terminal:
                push(f"{group:<22}{_f(terminal[group], 12, 4)}")

    if notes:
        push("")
        push("notes")
        push("-" * 78)
        for note in notes:
            push(f"- {note}")
    push("")
    return "\n".join(lines)
