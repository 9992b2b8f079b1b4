"""Declarative run configuration.

One INI-style text file drives both CLI commands:

    [synthetic]            ; consumed by `newsconn generate`
    n_stocks = 50
    n_days = 4800
    planted_beta = -0.8
    seed = 7
    ...                    ; any SyntheticConfig field

    [pipeline]             ; consumed by `newsconn run`
    news = data/news.jsonl
    returns = data/returns.csv
    regime = data/regime.csv           ; optional
    predictors = data/predictors.csv   ; optional
    stock_returns = data/stock_returns.csv  ; optional
    score_types = 1,2,3
    variants = opt,pos,neg
    train_months = 96
    gammas = 1,3,5
    combination_schemes = mean,median,trimmed_mean,dmspe:1.0,dmspe:0.9
    ...

Relative paths are resolved against the config file's directory.  The
thread count comes from the NEWSCONN_THREADS environment variable unless
set here.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .generator import SyntheticConfig

THREADS_ENV = "NEWSCONN_THREADS"


class ConfigError(Exception):
    pass


@dataclass
class PipelineConfig:
    news: Path
    returns: Path
    regime: Path | None = None
    predictors: Path | None = None
    stock_returns: Path | None = None
    score_types: tuple[int, ...] = (1, 2, 3)
    variants: tuple[str, ...] = ("opt", "pos", "neg")
    mci_lag_mode: str = "per_day"  # or "literal"
    mci_monthly_agg: str = "mean"  # or "last" / "sum"
    nw_lag: int | None = None
    train_months: int = 96
    min_train_months: int = 24
    gammas: tuple[float, ...] = (1.0, 3.0, 5.0)
    weight_lo: float = 0.0
    weight_hi: float = 1.5
    variance_window: int = 96
    tc_bps: float = 50.0
    cost_mode: str = "drift"
    combination_schemes: tuple[str, ...] = ("mean", "median", "trimmed_mean", "dmspe:1.0", "dmspe:0.9")
    combination_members: tuple[str, ...] = ()  # empty = every external predictor
    combination_holdout: int = 12
    truncate_combinations: bool = False
    sort_score_type: int = 3
    sort_variant: str | None = None
    threads: int = 1

    def combos(self) -> list[tuple[int, str | None]]:
        """The (score type, tone variant) pairs to run; type 3 is tone-free."""
        out: list[tuple[int, str | None]] = []
        for t in self.score_types:
            if t == 3:
                out.append((3, None))
            else:
                out.extend((t, v) for v in self.variants)
        return out


def _coerce(raw: str, target_type: type):
    if target_type is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"bad boolean {raw!r}")
    return target_type(raw)


def load_synthetic_config(path: str | Path, seed: int | None = None) -> SyntheticConfig:
    parser = _read(path)
    if not parser.has_section("synthetic"):
        raise ConfigError(f"{path}: missing [synthetic] section")
    by_name = {f.name: f for f in fields(SyntheticConfig)}
    kwargs = {}
    for key, raw in parser.items("synthetic"):
        f = by_name.get(key)
        if f is None:
            raise ConfigError(f"{path}: unknown synthetic key {key!r}")
        type_s = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "str")
        type_s = type_s.replace(" ", "")
        optional = type_s.endswith("|None")
        base = type_s.removesuffix("|None")
        if optional and raw.strip().lower() in ("", "none"):
            kwargs[key] = None
        elif base == "int":
            kwargs[key] = _coerce(raw, int)
        elif base == "float":
            kwargs[key] = _coerce(raw, float)
        elif base == "bool":
            kwargs[key] = _coerce(raw, bool)
        else:
            kwargs[key] = raw.strip()
    if seed is not None:
        kwargs["seed"] = seed
    try:
        return SyntheticConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    parser = _read(path)
    if not parser.has_section("pipeline"):
        raise ConfigError(f"{path}: missing [pipeline] section")
    base = Path(path).resolve().parent
    raw = dict(parser.items("pipeline"))

    def pop_path(key: str, required: bool = False) -> Path | None:
        v = raw.pop(key, None)
        if v is None:
            if required:
                raise ConfigError(f"{path}: [pipeline] needs {key!r}")
            return None
        p = Path(v)
        return p if p.is_absolute() else base / p

    kwargs: dict = {
        "news": pop_path("news", required=True),
        "returns": pop_path("returns", required=True),
        "regime": pop_path("regime"),
        "predictors": pop_path("predictors"),
        "stock_returns": pop_path("stock_returns"),
    }
    simple = {
        "mci_lag_mode": str,
        "mci_monthly_agg": str,
        "cost_mode": str,
        "train_months": int,
        "min_train_months": int,
        "variance_window": int,
        "combination_holdout": int,
        "sort_score_type": int,
        "threads": int,
        "weight_lo": float,
        "weight_hi": float,
        "tc_bps": float,
        "truncate_combinations": bool,
    }
    for key, typ in simple.items():
        if key in raw:
            try:
                kwargs[key] = _coerce(raw.pop(key), typ)
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {key}: {exc}") from None
    if "nw_lag" in raw:
        v = raw.pop("nw_lag").strip().lower()
        kwargs["nw_lag"] = None if v in ("", "auto", "none") else int(v)
    if "score_types" in raw:
        kwargs["score_types"] = tuple(int(s) for s in _split(raw.pop("score_types")))
    if "variants" in raw:
        kwargs["variants"] = tuple(_split(raw.pop("variants")))
    if "gammas" in raw:
        kwargs["gammas"] = tuple(float(s) for s in _split(raw.pop("gammas")))
    if "combination_schemes" in raw:
        kwargs["combination_schemes"] = tuple(_split(raw.pop("combination_schemes")))
    if "combination_members" in raw:
        kwargs["combination_members"] = tuple(_split(raw.pop("combination_members")))
    if "sort_variant" in raw:
        v = raw.pop("sort_variant").strip().lower()
        kwargs["sort_variant"] = None if v in ("", "none") else v
    if raw:
        raise ConfigError(f"{path}: unknown pipeline keys {sorted(raw)}")
    cfg = PipelineConfig(**kwargs)
    if "threads" not in kwargs and os.environ.get(THREADS_ENV):
        cfg.threads = max(1, int(os.environ[THREADS_ENV]))
    _validate_pipeline(cfg)
    return cfg


def _validate_pipeline(cfg: PipelineConfig) -> None:
    if not cfg.combos():
        raise ConfigError("at least one (score type, variant) combination required")
    for t in cfg.score_types:
        if t not in (1, 2, 3):
            raise ConfigError(f"unknown score type {t}")
    for v in cfg.variants:
        if v not in ("opt", "pos", "neg"):
            raise ConfigError(f"unknown tone variant {v!r}")
    if cfg.mci_lag_mode not in ("per_day", "literal"):
        raise ConfigError(f"unknown mci_lag_mode {cfg.mci_lag_mode!r}")
    if cfg.mci_monthly_agg not in ("mean", "last", "sum"):
        raise ConfigError(f"unknown mci_monthly_agg {cfg.mci_monthly_agg!r}")
    if cfg.train_months < cfg.min_train_months:
        raise ConfigError("train_months below the minimum training window")
    if cfg.weight_lo > cfg.weight_hi:
        raise ConfigError("weight bounds reversed")
    for scheme in cfg.combination_schemes:
        name = scheme.split(":")[0]
        if name not in ("mean", "median", "trimmed_mean", "dmspe"):
            raise ConfigError(f"unknown combination scheme {scheme!r}")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")


def _split(raw: str) -> list[str]:
    return [s.strip() for s in raw.split(",") if s.strip()]


def _read(path: str | Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    found = parser.read(path, encoding="utf-8")
    if not found:
        raise ConfigError(f"config file {path} not found")
    return parser
