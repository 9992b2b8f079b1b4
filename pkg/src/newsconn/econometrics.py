"""In-sample estimation: OLS, Newey-West inference, predictive regressions.

The predictive regressions regress next-month log excess market returns on
a lagged predictor (univariate) or on a predictor plus one control
(bivariate).  R-squared is also split into expansion and recession
components against the full-sample mean, which leaves the regime components
free to go negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import PredictorSeries, RegimeCalendar, ReturnSeries
from .months import next_month


def default_nw_lag(n_obs: int) -> int:
    """Automatic HAC truncation lag, floor(4*(T/100)^(2/9))."""
    return int(math.floor(4.0 * (n_obs / 100.0) ** (2.0 / 9.0)))


@dataclass
class OlsFit:
    """A least-squares fit with enough state retained for HAC inference."""

    coef: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    r2: float
    X: np.ndarray
    y: np.ndarray

    @property
    def n_obs(self) -> int:
        return len(self.y)


@dataclass
class RegressionResult:
    """One predictive regression: coefficients, HAC t-stats, R-squared splits."""

    names: tuple[str, ...]
    coef: np.ndarray
    tstats: np.ndarray
    se: np.ndarray
    residuals: np.ndarray
    r2: float
    r2_up: float | None
    r2_down: float | None
    n_obs: int
    nw_lag: int
    months: tuple[str, ...]  # response months

    def coef_named(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])

    def tstat_named(self, name: str) -> float:
        return float(self.tstats[self.names.index(name)])


def ols_fit(y: np.ndarray, X: np.ndarray) -> OlsFit:
    """OLS via an orthogonal decomposition; raises on rank deficiency."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-d with an intercept column")
    n, p = X.shape
    if n <= p:
        raise ValueError(f"need more observations ({n}) than regressors ({p})")
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < p:
        raise ValueError("regressor matrix is rank deficient")
    fitted = X @ coef
    residuals = y - fitted
    sst = float(np.sum((y - np.mean(y)) ** 2))
    ssr = float(np.sum(residuals**2))
    r2 = 1.0 - ssr / sst if sst > 0 else 0.0
    return OlsFit(coef, residuals, fitted, r2, X, y)


def newey_west_cov(fit: OlsFit, lag: int) -> np.ndarray:
    """HAC coefficient covariance with Bartlett weights 1 - l/(lag+1).

    lag = 0 reduces to the heteroskedasticity-robust (White) covariance.
    No small-sample degrees-of-freedom correction is applied.
    """
    if lag < 0:
        raise ValueError("lag must be >= 0")
    if lag >= fit.n_obs:
        raise ValueError(f"lag {lag} too large for {fit.n_obs} observations")
    X, e = fit.X, fit.residuals
    xe = X * e[:, None]
    S = xe.T @ xe
    for l in range(1, lag + 1):
        w = 1.0 - l / (lag + 1.0)
        gamma = xe[l:].T @ xe[:-l]
        S += w * (gamma + gamma.T)
    bread = np.linalg.inv(X.T @ X)
    return bread @ S @ bread


def newey_west_tstats(fit: OlsFit, lag: int) -> tuple[np.ndarray, np.ndarray]:
    """(t-stats, standard errors) from the Newey-West covariance."""
    cov = newey_west_cov(fit, lag)
    se = np.sqrt(np.diag(cov))
    return fit.coef / se, se


def regime_r2(
    residuals: np.ndarray,
    y: np.ndarray,
    months: tuple[str, ...],
    calendar: RegimeCalendar,
) -> tuple[float | None, float | None]:
    """Expansion/recession R-squared of fitted residuals.

    Both components use squared deviations of y from its full-sample mean
    in the denominator; a regime with no months is None.
    """
    up, down = calendar.indicators(months)
    dev2 = (y - np.mean(y)) ** 2
    e2 = residuals**2
    out: list[float | None] = []
    for mask in (up, down):
        if not mask.any():
            out.append(None)
            continue
        out.append(float(1.0 - np.sum(e2[mask]) / np.sum(dev2[mask])))
    return out[0], out[1]


def _align_predictive(
    returns: ReturnSeries, x: PredictorSeries
) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    """Pairs (x_t, R_{t+1}); returns (y, x, response months)."""
    ret_pos = {m: i for i, m in enumerate(returns.months)}
    ys, xs, resp = [], [], []
    for i, m in enumerate(x.months):
        nm = next_month(m)
        j = ret_pos.get(nm)
        if j is None or not math.isfinite(x.values[i]):
            continue
        xs.append(float(x.values[i]))
        ys.append(float(returns.log_excess[j]))
        resp.append(nm)
    if len(ys) < 4:
        raise ValueError("too few aligned predictor/return observations")
    return np.asarray(ys), np.asarray(xs), tuple(resp)


def predictive_regression(
    returns: ReturnSeries,
    x: PredictorSeries,
    calendar: RegimeCalendar | None = None,
    nw_lag: int | None = None,
) -> RegressionResult:
    """Univariate regression of next-month log excess return on x."""
    y, xv, resp_months = _align_predictive(returns, x)
    X = np.column_stack([np.ones(len(y)), xv])
    fit = ols_fit(y, X)
    lag = default_nw_lag(fit.n_obs) if nw_lag is None else nw_lag
    tstats, se = newey_west_tstats(fit, lag)
    r2_up = r2_down = None
    if calendar is not None:
        r2_up, r2_down = regime_r2(fit.residuals, y, resp_months, calendar)
    return RegressionResult(
        names=("alpha", "beta"),
        coef=fit.coef,
        tstats=tstats,
        se=se,
        residuals=fit.residuals,
        r2=fit.r2,
        r2_up=r2_up,
        r2_down=r2_down,
        n_obs=fit.n_obs,
        nw_lag=lag,
        months=resp_months,
    )


def bivariate_regression(
    returns: ReturnSeries,
    x: PredictorSeries,
    control: PredictorSeries,
    calendar: RegimeCalendar | None = None,
    nw_lag: int | None = None,
) -> RegressionResult:
    """Regression of next-month return on x plus one control series."""
    y, xv, resp_months = _align_predictive(returns, x)
    # control dated the predictor month (one before the response)
    ctrl_next = {next_month(m): float(v) for m, v in zip(control.months, control.values)}
    keep, cv = [], []
    for k, m in enumerate(resp_months):
        v = ctrl_next.get(m)
        if v is not None and math.isfinite(v):
            keep.append(k)
            cv.append(v)
    if len(keep) < 5:
        raise ValueError("too few aligned control observations")
    y, xv = y[keep], xv[keep]
    resp_months = tuple(resp_months[k] for k in keep)
    X = np.column_stack([np.ones(len(y)), xv, np.asarray(cv)])
    fit = ols_fit(y, X)
    lag = default_nw_lag(fit.n_obs) if nw_lag is None else nw_lag
    tstats, se = newey_west_tstats(fit, lag)
    r2_up = r2_down = None
    if calendar is not None:
        r2_up, r2_down = regime_r2(fit.residuals, y, resp_months, calendar)
    return RegressionResult(
        names=("alpha", "beta", "phi"),
        coef=fit.coef,
        tstats=tstats,
        se=se,
        residuals=fit.residuals,
        r2=fit.r2,
        r2_up=r2_up,
        r2_down=r2_down,
        n_obs=fit.n_obs,
        nw_lag=lag,
        months=resp_months,
    )
