"""News co-mention connectivity indices and return-predictability backtesting."""

from .config import PipelineConfig
from .connectivity import (
    ConnectivityMatrix,
    MciSeries,
    build_mci_series,
    connection_scores,
    daily_matrix,
    mci_daily,
    offdiag_fraction,
    standardize_series,
    tone_scalar,
)
from .econometrics import (
    RegressionResult,
    bivariate_regression,
    newey_west_tstats,
    ols_fit,
    predictive_regression,
    regime_r2,
)
from .generator import SyntheticConfig, generate_universe, write_universe
from .ingest import (
    NewsEvent,
    PredictorSeries,
    RegimeCalendar,
    ReturnSeries,
    ToneTriple,
    parse_news_file,
    parse_predictor_file,
    parse_regime_calendar,
    parse_return_series,
)
from .oos import (
    ForecastTrack,
    clark_west,
    combine_forecasts,
    csfe_difference,
    dmspe_weights,
    historical_mean_forecasts,
    r2_os,
    recursive_forecasts,
    regime_r2_os,
    truncate_forecasts,
)
from .pipeline import run_pipeline
from .portfolio import (
    AllocationConfig,
    SortedPortfolios,
    StrategyResult,
    cer_and_gain,
    evaluate_strategy,
    mv_weights,
    realize_returns,
    sharpe_and_test,
    sort_connection_portfolios,
    variance_forecast,
)

__version__ = "0.1.0"
