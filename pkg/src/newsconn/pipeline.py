"""End-to-end runner: ingest -> connectivity -> regressions -> reports.

Stages run in dependency order; every emitted file is a deterministic
function of (inputs, config), independent of the thread count.  Any stage
failure aborts the run with a stage-tagged error.

Emitted files (all under the chosen output directory):

    stocks.csv        stock id -> dense matrix index mapping
    mci_daily.csv     date,type,variant,value      (undefined days omitted)
    mci_monthly.csv   month,type,variant,value
    insample.csv      predictor,control,beta,phi,t_beta,t_phi,r2,r2_up,r2_down,n
    oos.csv           predictor,r2_os,r2_os_trunc,r2_os_up,r2_os_down,cw_stat,cw_p
    csfe.csv          month,predictor,csfe_diff
    allocation.csv    predictor,gamma,sharpe,sharpe_test,cer_gain,cer_p   (net of costs)
    allocation_gross.csv   same columns, before transaction costs
    sorted.csv        month,group,cum_return       (only with a stock panel)
    summary.txt       plain-text report
    figures/*.png     rendered charts for the report
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from . import connectivity, econometrics, oos, portfolio
from .config import PipelineConfig
from .connectivity import MciSeries
from .ingest import (
    ParsedNews,
    PredictorSeries,
    RegimeCalendar,
    ReturnSeries,
    StockIndex,
    build_stock_index,
    parse_news_file,
    parse_predictor_file,
    parse_regime_calendar,
    parse_return_series,
    parse_stock_returns,
)
from .months import next_month

T = TypeVar("T")
U = TypeVar("U")


class PipelineStageError(Exception):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineResult:
    out_dir: Path
    files: dict[str, Path] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)


def _pmap(fn: Callable[[T], U], items: Sequence[T], threads: int) -> list[U]:
    """Order-preserving map, optionally on a thread pool."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: str, rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


@dataclass
class _Inputs:
    news: ParsedNews
    index: StockIndex
    returns: ReturnSeries
    regime: RegimeCalendar | None
    predictors: list[PredictorSeries]
    stock_returns: dict[str, dict[str, float]] | None


def _stage_ingest(cfg: PipelineConfig, out: Path, result: PipelineResult) -> _Inputs:
    news = parse_news_file(cfg.news)
    if news.rejects:
        result.notes.append(f"ingest: rejected {len(news.rejects)} news records")
    index = build_stock_index(news.events)
    returns = parse_return_series(cfg.returns)
    regime = parse_regime_calendar(cfg.regime) if cfg.regime else None
    predictors = parse_predictor_file(cfg.predictors) if cfg.predictors else []
    panel = parse_stock_returns(cfg.stock_returns) if cfg.stock_returns else None
    path = out / "stocks.csv"
    _write_csv(path, "stock,index", [(s, i) for i, s in enumerate(index.ids)])
    result.files["stocks"] = path
    return _Inputs(news, index, returns, regime, predictors, panel)


def _stage_connectivity(
    cfg: PipelineConfig, inputs: _Inputs, out: Path, result: PipelineResult
) -> dict[str, MciSeries]:
    events = inputs.news.events
    day_groups = connectivity.events_by_day(events)

    def build(combo: tuple[int, str | None]) -> MciSeries:
        score_type, variant = combo
        return connectivity.build_mci_series(
            events,
            score_type,
            variant,  # type: ignore[arg-type]
            inputs.index,
            lag_mode=cfg.mci_lag_mode,
            monthly_agg=cfg.mci_monthly_agg,
            day_groups=day_groups,
        )

    series = _pmap(build, cfg.combos(), cfg.threads)
    by_label = {s.label: s for s in series}
    daily_rows = []
    monthly_rows = []
    for s in series:
        variant = s.variant if s.variant is not None else "none"
        daily_rows.extend((d.isoformat(), s.score_type, variant, v) for d, v in s.daily)
        monthly_rows.extend((m, s.score_type, variant, v) for m, v in s.monthly)
    p1, p2 = out / "mci_daily.csv", out / "mci_monthly.csv"
    _write_csv(p1, "date,type,variant,value", daily_rows)
    _write_csv(p2, "month,type,variant,value", monthly_rows)
    result.files["mci_daily"] = p1
    result.files["mci_monthly"] = p2
    return by_label


def _standardized_predictor(series: MciSeries | PredictorSeries) -> PredictorSeries:
    """Full-sample standardization for in-sample, per-sd slope readings."""
    if isinstance(series, MciSeries):
        months, values, name = tuple(series.monthly_months()), series.monthly_values(), series.label
    else:
        months, values, name = series.months, series.values, series.name
    std = connectivity.standardize_series(values, "full-sample")
    return PredictorSeries(name, months, std)


def _stage_insample(
    cfg: PipelineConfig,
    inputs: _Inputs,
    mci: dict[str, MciSeries],
    out: Path,
    result: PipelineResult,
) -> None:
    calendar = inputs.regime
    predictors = []
    for s in mci.values():
        if len(s.monthly) < 2 or float(np.std(s.monthly_values(), ddof=1)) == 0.0:
            result.notes.append(f"insample: {s.label} is degenerate, skipped")
            continue
        predictors.append(_standardized_predictor(s))
    controls = [_standardized_predictor(p) for p in inputs.predictors]

    jobs: list[tuple[PredictorSeries, PredictorSeries | None]] = []
    jobs.extend((p, None) for p in predictors)
    jobs.extend((c, None) for c in controls)
    jobs.extend((p, c) for p in predictors for c in controls)

    def run(job: tuple[PredictorSeries, PredictorSeries | None]):
        x, control = job
        if control is None:
            res = econometrics.predictive_regression(inputs.returns, x, calendar, cfg.nw_lag)
            return (x.name, "", res.coef_named("beta"), None,
                    res.tstat_named("beta"), None, res.r2, res.r2_up, res.r2_down, res.n_obs)
        res = econometrics.bivariate_regression(inputs.returns, x, control, calendar, cfg.nw_lag)
        return (x.name, control.name, res.coef_named("beta"), res.coef_named("phi"),
                res.tstat_named("beta"), res.tstat_named("phi"),
                res.r2, res.r2_up, res.r2_down, res.n_obs)

    rows = _pmap(run, jobs, cfg.threads)
    path = out / "insample.csv"
    _write_csv(path, "predictor,control,beta,phi,t_beta,t_phi,r2,r2_up,r2_down,n", rows)
    result.files["insample"] = path


def _recursive_std_on(months: tuple[str, ...], series_months, series_values) -> np.ndarray:
    """Expanding-window standardized predictor embedded on the master timeline."""
    pos = {m: i for i, m in enumerate(months)}
    idxs, vals = [], []
    for m, v in zip(series_months, series_values):
        i = pos.get(m)
        if i is not None:
            idxs.append(i)
            vals.append(float(v))
    x = np.full(len(months), np.nan)
    if len(vals) >= 2 and float(np.std(vals, ddof=1)) > 0.0:
        x[np.asarray(idxs)] = connectivity.standardize_series(vals, "recursive")
    return x


@dataclass
class _OosBundle:
    tracks: list[oos.ForecastTrack]  # log-excess tracks, report order
    simple_tracks: dict[str, oos.ForecastTrack]  # same labels, simple-excess response
    combination_labels: set[str]


def _stage_oos(
    cfg: PipelineConfig,
    inputs: _Inputs,
    mci: dict[str, MciSeries],
    out: Path,
    result: PipelineResult,
) -> _OosBundle:
    returns = inputs.returns
    months = returns.months
    r = cfg.train_months
    if r >= len(months):
        raise ValueError(f"training window {r} exceeds the {len(months)}-month sample")

    specs: list[tuple[str, np.ndarray]] = []
    for s in mci.values():
        if len(s.monthly) < 2 or float(np.std(s.monthly_values(), ddof=1)) == 0.0:
            result.notes.append(f"oos: {s.label} is degenerate, skipped")
            continue
        specs.append((s.label, _recursive_std_on(months, s.monthly_months(), s.monthly_values())))
    for p in inputs.predictors:
        specs.append((p.name, _recursive_std_on(months, p.months, p.values)))

    def build(spec: tuple[str, np.ndarray], y: np.ndarray) -> oos.ForecastTrack:
        label, x = spec
        return oos.recursive_forecasts(months, y, x, r, label, cfg.min_train_months)

    log_y = returns.log_excess
    simple_y = returns.simple_excess
    tracks = _pmap(lambda sp: build(sp, log_y), specs, cfg.threads)
    simple_list = _pmap(lambda sp: build(sp, simple_y), specs, cfg.threads)
    simple_tracks = {t.label: t for t in simple_list}

    member_names = list(cfg.combination_members) or [p.name for p in inputs.predictors]
    members = [t for t in tracks if t.label in member_names]
    combination_labels: set[str] = set()
    if len(members) >= 2:
        for scheme in cfg.combination_schemes:
            name, _, theta_s = scheme.partition(":")
            theta = float(theta_s) if theta_s else 1.0
            if name == "trimmed_mean" and len(members) < 3:
                result.notes.append("oos: trimmed_mean needs >= 3 members, skipped")
                continue
            combined = oos.combine_forecasts(members, name, theta, cfg.combination_holdout)
            tracks.append(combined)
            combination_labels.add(combined.label)
            simple_members = [simple_tracks[m.label] for m in members]
            simple_combined = oos.combine_forecasts(
                simple_members, name, theta, cfg.combination_holdout, label=combined.label
            )
            simple_tracks[combined.label] = simple_combined
    elif cfg.combination_schemes and inputs.predictors:
        result.notes.append("oos: fewer than 2 combination members, skipping combinations")

    calendar = inputs.regime
    oos_rows = []
    csfe_rows = []
    for t in tracks:
        stat, p = oos.clark_west(t)
        r2 = oos.r2_os(t)
        if t.label in combination_labels and not cfg.truncate_combinations:
            r2_trunc = None
        else:
            r2_trunc = oos.r2_os(oos.truncate_forecasts(t))
        up = down = None
        if calendar is not None:
            up, down = oos.regime_r2_os(t, calendar)
        oos_rows.append((t.label, r2, r2_trunc, up, down, stat, p))
        csfe_rows.extend((m, t.label, v) for m, v in oos.csfe_difference(t))
        if t.fallback_months:
            result.notes.append(
                f"oos: {t.label} fell back to the benchmark in {len(t.fallback_months)} months"
            )

    p1, p2 = out / "oos.csv", out / "csfe.csv"
    _write_csv(p1, "predictor,r2_os,r2_os_trunc,r2_os_up,r2_os_down,cw_stat,cw_p", oos_rows)
    _write_csv(p2, "month,predictor,csfe_diff", csfe_rows)
    result.files["oos"] = p1
    result.files["csfe"] = p2
    return _OosBundle(tracks, simple_tracks, combination_labels)


def _stage_allocation(
    cfg: PipelineConfig,
    inputs: _Inputs,
    bundle: _OosBundle,
    out: Path,
    result: PipelineResult,
) -> None:
    returns = inputs.returns
    r = cfg.train_months
    variances = portfolio.variance_forecast(
        returns.simple_excess, r, cfg.variance_window, cfg.min_train_months
    )
    rf = returns.risk_free[r:]
    ex = returns.simple_excess[r:]
    labels = [t.label for t in bundle.tracks]

    def evaluate(job: tuple[str, float]) -> tuple[tuple, tuple]:
        label, gamma = job
        track = bundle.simple_tracks[label]
        acfg = portfolio.AllocationConfig(
            gamma=gamma,
            weight_bounds=(cfg.weight_lo, cfg.weight_hi),
            variance_window=cfg.variance_window,
            min_variance_window=cfg.min_train_months,
            tc_bps=cfg.tc_bps,
            cost_mode=cfg.cost_mode,
        )
        rows = []
        for net in (True, False):
            res = portfolio.evaluate_strategy(
                label, track.model, track.benchmark, variances, ex, rf, acfg, net=net
            )
            rows.append((label, gamma, res.sharpe, res.sharpe_test_stat,
                         res.cer_gain, res.cer_gain_pvalue))
        return rows[0], rows[1]

    jobs = [(label, gamma) for label in labels for gamma in cfg.gammas]
    evaluated = _pmap(evaluate, jobs, cfg.threads)
    net_rows = [net for net, _ in evaluated]
    gross_rows = [gross for _, gross in evaluated]
    p1, p2 = out / "allocation.csv", out / "allocation_gross.csv"
    header = "predictor,gamma,sharpe,sharpe_test,cer_gain,cer_p"
    _write_csv(p1, header, net_rows)
    _write_csv(p2, header, gross_rows)
    result.files["allocation"] = p1
    result.files["allocation_gross"] = p2


def _stage_sorted(
    cfg: PipelineConfig,
    inputs: _Inputs,
    out: Path,
    result: PipelineResult,
) -> portfolio.SortedPortfolios | None:
    if inputs.stock_returns is None:
        result.notes.append("sorted: no stock return panel, skipping")
        return None
    variant = cfg.sort_variant if cfg.sort_score_type != 3 else None
    matrices = connectivity.monthly_matrices(
        inputs.news.events, cfg.sort_score_type, variant, inputs.index  # type: ignore[arg-type]
    )
    ids = inputs.index.ids
    measures: dict[str, dict[str, float]] = {}
    dropped = []
    for month, matrix in matrices.items():
        nm = next_month(month)
        rets = inputs.stock_returns.get(nm)
        if rets is None:
            continue
        mass = matrix.row_offdiag_mass()
        panel = {sid: float(mass.get(i, 0)) for i, sid in enumerate(ids)}
        common = sum(1 for s in panel if s in rets)
        if common < 10:
            dropped.append(month)
            continue
        measures[month] = panel
    if dropped:
        result.notes.append(f"sorted: dropped {len(dropped)} months with < 10 sortable stocks")
    if not measures:
        result.notes.append("sorted: no sortable months, skipping")
        return None
    sorted_ports = portfolio.sort_connection_portfolios(measures, inputs.stock_returns)
    rows = []
    for k, month in enumerate(sorted_ports.months):
        for group in portfolio.GROUPS:
            rows.append((month, group, sorted_ports.cumulative[group][k]))
    level = 1.0
    for k, month in enumerate(sorted_ports.months):
        level *= 1.0 + sorted_ports.spread[k]
        rows.append((month, "low_minus_high", level))
    path = out / "sorted.csv"
    _write_csv(path, "month,group,cum_return", rows)
    result.files["sorted"] = path
    return sorted_ports


def run_pipeline(cfg: PipelineConfig, out_dir: str | Path) -> PipelineResult:
    """Run every stage and emit the full report bundle into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = PipelineResult(out_dir=out)

    def stage(name: str, fn: Callable[[], T]) -> T:
        try:
            return fn()
        except PipelineStageError:
            raise
        except Exception as exc:
            raise PipelineStageError(name, exc) from exc

    inputs = stage("ingest", lambda: _stage_ingest(cfg, out, result))
    mci = stage("connectivity", lambda: _stage_connectivity(cfg, inputs, out, result))
    stage("insample", lambda: _stage_insample(cfg, inputs, mci, out, result))
    bundle = stage("oos", lambda: _stage_oos(cfg, inputs, mci, out, result))
    stage("allocation", lambda: _stage_allocation(cfg, inputs, bundle, out, result))
    sorted_ports = stage("sorted", lambda: _stage_sorted(cfg, inputs, out, result))
    stage("report", lambda: _stage_report(cfg, inputs, mci, bundle, sorted_ports, out, result))
    return result


def _stage_report(cfg, inputs, mci, bundle, sorted_ports, out: Path, result: PipelineResult) -> None:
    from . import figures, report

    summary_path = out / "summary.txt"
    summary_path.write_text(report.render_summary(out, inputs, result.notes), encoding="utf-8")
    result.files["summary"] = summary_path
    fig_dir = out / "figures"
    fig_dir.mkdir(exist_ok=True)
    written = figures.render_all(fig_dir, mci, bundle.tracks, sorted_ports)
    for name, path in written.items():
        result.files[f"figure_{name}"] = path
