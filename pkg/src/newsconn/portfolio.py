"""Economic-value evaluation of return forecasts.

A mean-variance investor allocates between the market and the risk-free
asset using a simple-excess-return forecast and a trailing-window variance
estimate, with weights clamped to configured bounds.  Strategies are scored
by certainty-equivalent return (annualized gain vs the benchmark strategy),
Sharpe ratios with a paired significance test, and proportional transaction
costs on traded weight.  A separate exercise sorts stocks into
high/median/low connection groups and cumulates equal-weighted returns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm


@dataclass(frozen=True)
class AllocationConfig:
    gamma: float = 3.0
    weight_bounds: tuple[float, float] = (0.0, 1.5)
    variance_window: int = 96  # months
    min_variance_window: int = 24
    tc_bps: float = 50.0
    cost_mode: str = "drift"  # "drift" | "simple"
    cer_annualization: float = 12.0

    def __post_init__(self) -> None:
        lo, hi = self.weight_bounds
        if lo > hi:
            raise ValueError("weight bounds reversed")
        if self.variance_window < 12:
            raise ValueError("variance window must be >= 12 months")
        if self.cost_mode not in ("drift", "simple"):
            raise ValueError(f"unknown cost mode {self.cost_mode!r}")


def variance_forecast(
    simple_excess: np.ndarray,
    r: int,
    window: int = 96,
    min_window: int = 24,
) -> np.ndarray:
    """Trailing-window return variance, one forecast per evaluation month.

    Entry k forecasts the variance for month r+k from the most recent
    `window` months ending at r+k-1 (population variance).  When fewer than
    `window` months exist the window shrinks, but never below min_window.
    """
    x = np.asarray(simple_excess, dtype=float)
    if r < min_window:
        raise ValueError(f"insufficient history: {r} months before the first forecast")
    out = np.empty(len(x) - r)
    for k, t in enumerate(range(r, len(x))):
        lo = max(0, t - window)
        out[k] = float(np.var(x[lo:t]))
    return out


def mv_weights(
    forecasts: np.ndarray, variances: np.ndarray, config: AllocationConfig
) -> np.ndarray:
    """w = (1/gamma) * forecast / variance, clamped to the configured bounds."""
    f = np.asarray(forecasts, dtype=float)
    v = np.asarray(variances, dtype=float)
    if len(f) != len(v):
        raise ValueError("forecast and variance series misaligned")
    # 1e-18 is far below any real monthly return variance; anything there is
    # a degenerate (constant-return) window and the ratio is meaningless
    if np.any(v < 1e-18):
        raise ValueError("variance forecasts must be positive")
    raw = f / (config.gamma * v)
    lo, hi = config.weight_bounds
    return np.clip(raw, lo, hi)


@dataclass
class RealizedReturns:
    gross: np.ndarray
    net: np.ndarray
    turnover: np.ndarray


def realize_returns(
    weights: np.ndarray,
    simple_excess: np.ndarray,
    risk_free_gross: np.ndarray,
    tc_bps: float = 50.0,
    cost_mode: str = "drift",
) -> RealizedReturns:
    """Gross and net-of-cost portfolio returns for a weight path.

    Gross return in month k is w[k]*excess[k] + rf[k] (rf gross).  Costs are
    proportional to the traded fraction at each rebalance; the position
    starts from all cash.  With cost_mode "drift" the pre-rebalance weight
    is last month's weight drifted by relative market growth,
    w * (rf + excess) / gross_return; "simple" charges |w[k] - w[k-1]|.
    """
    w = np.asarray(weights, dtype=float)
    ex = np.asarray(simple_excess, dtype=float)
    rf = np.asarray(risk_free_gross, dtype=float)
    if not (len(w) == len(ex) == len(rf)):
        raise ValueError("weight/return series misaligned")
    if cost_mode not in ("drift", "simple"):
        raise ValueError(f"unknown cost mode {cost_mode!r}")
    rate = tc_bps / 1e4
    gross = w * ex + rf
    turnover = np.empty(len(w))
    for k in range(len(w)):
        if k == 0:
            prev = 0.0  # initial position is all cash
        elif cost_mode == "simple":
            prev = w[k - 1]
        else:
            prev = w[k - 1] * (rf[k - 1] + ex[k - 1]) / gross[k - 1]
        turnover[k] = abs(w[k] - prev)
    net = gross - rate * turnover
    return RealizedReturns(gross=gross, net=net, turnover=turnover)


def cer(returns: np.ndarray, gamma: float) -> float:
    """Certainty-equivalent return, mean - 0.5*gamma*variance (per month)."""
    x = np.asarray(returns, dtype=float)
    return float(np.mean(x) - 0.5 * gamma * np.var(x, ddof=1))


def cer_and_gain(
    strategy: np.ndarray,
    benchmark: np.ndarray,
    gamma: float,
    annualization: float = 12.0,
) -> tuple[float, float, float, float]:
    """(cer_strategy, cer_benchmark, annualized gain, two-sided p-value).

    The gain significance uses a delta-method normal asymptotic on the
    paired mean-variance functional: the gradient of m - 0.5*gamma*v in
    (means, variances) combined with the normal-theory covariance of sample
    means and variances of the two return series.
    """
    s = np.asarray(strategy, dtype=float)
    b = np.asarray(benchmark, dtype=float)
    if len(s) != len(b):
        raise ValueError("strategy and benchmark series misaligned")
    n = len(s)
    if n < 12:
        raise ValueError("need at least 12 months for a CER comparison")
    cer_s, cer_b = cer(s, gamma), cer(b, gamma)
    gain = annualization * (cer_s - cer_b)
    var_s = float(np.var(s, ddof=1))
    var_b = float(np.var(b, ddof=1))
    cov_sb = float(np.cov(s, b, ddof=1)[0, 1])
    # Var of the monthly CER difference under normality: mean block plus
    # variance block, cross terms vanish.
    v_mean = var_s + var_b - 2.0 * cov_sb
    v_var = 2.0 * var_s**2 + 2.0 * var_b**2 - 4.0 * cov_sb**2
    avar = (v_mean + 0.25 * gamma**2 * v_var) / n
    if avar <= 0.0:
        # degenerate comparison: no sampling variation in the difference
        return cer_s, cer_b, gain, 1.0 if gain == 0.0 else 0.0
    z = (cer_s - cer_b) / math.sqrt(avar)
    return cer_s, cer_b, gain, float(2.0 * norm.sf(abs(z)))


def sharpe_and_test(
    strategy: np.ndarray,
    benchmark: np.ndarray,
    risk_free_gross: np.ndarray,
) -> tuple[float, float, float]:
    """Monthly Sharpe ratios of both strategies plus the paired z-statistic.

    Sharpe is mean excess over sd of excess.  The test statistic is the
    Jobson-Korkie pairwise comparison with the Memmel variance correction;
    identical series give exactly 0.
    """
    s = np.asarray(strategy, dtype=float) - np.asarray(risk_free_gross, dtype=float)
    b = np.asarray(benchmark, dtype=float) - np.asarray(risk_free_gross, dtype=float)
    if len(s) != len(b):
        raise ValueError("strategy and benchmark series misaligned")
    n = len(s)
    mu1, mu2 = float(np.mean(s)), float(np.mean(b))
    sd1, sd2 = float(np.std(s, ddof=1)), float(np.std(b, ddof=1))
    if sd1 == 0.0 or sd2 == 0.0:
        raise ValueError("zero standard deviation in excess returns")
    cov = float(np.cov(s, b, ddof=1)[0, 1])
    num = sd2 * mu1 - sd1 * mu2
    theta = (
        2.0 * sd1**2 * sd2**2
        - 2.0 * sd1 * sd2 * cov
        + 0.5 * mu1**2 * sd2**2
        + 0.5 * mu2**2 * sd1**2
        - (mu1 * mu2 / (sd1 * sd2)) * cov**2
    ) / n
    if theta <= 0.0:
        stat = 0.0 if num == 0.0 else math.copysign(math.inf, num)
    else:
        stat = num / math.sqrt(theta)
    return mu1 / sd1, mu2 / sd2, float(stat)


@dataclass
class StrategyResult:
    """One forecast-driven strategy scored against the benchmark strategy."""

    label: str
    gamma: float
    weights: np.ndarray
    benchmark_weights: np.ndarray
    returns: RealizedReturns
    benchmark_returns: RealizedReturns
    cer: float
    cer_gain: float  # annualized, net of costs
    cer_gain_pvalue: float
    sharpe: float
    sharpe_benchmark: float
    sharpe_test_stat: float


def evaluate_strategy(
    label: str,
    model_forecasts: np.ndarray,
    benchmark_forecasts: np.ndarray,
    variances: np.ndarray,
    simple_excess: np.ndarray,
    risk_free_gross: np.ndarray,
    config: AllocationConfig,
    net: bool = True,
) -> StrategyResult:
    """Wire weights -> realized returns -> CER/Sharpe scoring for one strategy.

    With net=False the comparison runs before transaction costs.
    """
    w_model = mv_weights(model_forecasts, variances, config)
    w_bench = mv_weights(benchmark_forecasts, variances, config)
    real_model = realize_returns(w_model, simple_excess, risk_free_gross,
                                 config.tc_bps, config.cost_mode)
    real_bench = realize_returns(w_bench, simple_excess, risk_free_gross,
                                 config.tc_bps, config.cost_mode)
    model_ret = real_model.net if net else real_model.gross
    bench_ret = real_bench.net if net else real_bench.gross
    cer_m, _, gain, pval = cer_and_gain(model_ret, bench_ret, config.gamma,
                                        config.cer_annualization)
    sharpe_m, sharpe_b, stat = sharpe_and_test(model_ret, bench_ret, risk_free_gross)
    return StrategyResult(
        label=label,
        gamma=config.gamma,
        weights=w_model,
        benchmark_weights=w_bench,
        returns=real_model,
        benchmark_returns=real_bench,
        cer=cer_m,
        cer_gain=gain,
        cer_gain_pvalue=pval,
        sharpe=sharpe_m,
        sharpe_benchmark=sharpe_b,
        sharpe_test_stat=stat,
    )


@dataclass
class SortedPortfolios:
    """Equal-weighted high/median/low connection groups, cumulated monthly."""

    months: list[str]
    group_returns: dict[str, list[float]]  # keys: low, median, high
    cumulative: dict[str, list[float]]
    spread: list[float]  # low minus high, per month
    memberships: list[dict[str, list[str]]] = field(default_factory=list)

    def terminal(self, group: str) -> float:
        return self.cumulative[group][-1]


GROUPS = ("low", "median", "high")


def sort_connection_portfolios(
    measures: dict[str, dict[str, float]],
    stock_returns: dict[str, dict[str, float]],
) -> SortedPortfolios:
    """Three-way connection sort, held one month, equal-weighted.

    measures[m][stock] is the sorting variable known at the end of month m;
    stock_returns[m][stock] the realized simple return in month m.  Each
    sorting month needs >= 10 stocks present in both panels so the top and
    bottom deciles are non-degenerate.  Ties are broken by the stable order
    of the stocks in the measure mapping.
    """
    from .months import next_month

    sort_months = sorted(m for m in measures if next_month(m) in stock_returns)
    if not sort_months:
        raise ValueError("no months with both measures and next-month returns")
    months: list[str] = []
    group_returns: dict[str, list[float]] = {g: [] for g in GROUPS}
    cumulative: dict[str, list[float]] = {g: [] for g in GROUPS}
    spread: list[float] = []
    memberships: list[dict[str, list[str]]] = []
    level = {g: 1.0 for g in GROUPS}
    for m in sort_months:
        nm = next_month(m)
        rets = stock_returns[nm]
        stocks = [s for s in measures[m] if s in rets]
        if len(stocks) < 10:
            raise ValueError(f"only {len(stocks)} sortable stocks in {m}, need >= 10")
        k = len(stocks) // 10
        ranked = sorted(stocks, key=lambda s: measures[m][s])  # stable on ties
        assign = {"low": ranked[:k], "high": ranked[-k:], "median": ranked[k:-k]}
        months.append(nm)
        memberships.append(assign)
        for g in GROUPS:
            r = sum(rets[s] for s in assign[g]) / len(assign[g])
            group_returns[g].append(r)
            level[g] *= 1.0 + r
            cumulative[g].append(level[g])
        spread.append(group_returns["low"][-1] - group_returns["high"][-1])
    return SortedPortfolios(months, group_returns, cumulative, spread, memberships)
