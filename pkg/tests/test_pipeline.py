"""End-to-end pipeline runs, CLI surface, config parsing."""

import csv
import hashlib
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from newsconn.cli import main
from newsconn.config import ConfigError, PipelineConfig, load_pipeline_config, load_synthetic_config
from newsconn.generator import SyntheticConfig, generate_universe, write_universe
from newsconn.pipeline import PipelineStageError, run_pipeline


@pytest.fixture(scope="module")
def universe_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("universe")
    cfg = SyntheticConfig(n_stocks=14, n_months=48, articles_per_day=5.0,
                          planted_beta=-0.6, seed=11)
    universe = generate_universe(cfg)
    paths = write_universe(universe, tmp)
    rng = np.random.default_rng(1)
    with open(tmp / "predictors.csv", "w") as fh:
        fh.write("month,sent_a,sent_b,econ_c\n")
        for m in universe.returns.months:
            fh.write(f"{m},{rng.normal()!r},{rng.normal()!r},{rng.normal()!r}\n")
    paths["predictors"] = tmp / "predictors.csv"
    return paths


def base_config(paths, **kw):
    defaults = dict(
        news=paths["news"],
        returns=paths["returns"],
        regime=paths["regime"],
        predictors=paths["predictors"],
        stock_returns=paths["stock_returns"],
        train_months=26,
        min_train_months=24,
        variance_window=24,
    )
    defaults.update(kw)
    return PipelineConfig(**defaults)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def tree_digest(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.fixture(scope="module")
def run(universe_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("out")
    result = run_pipeline(base_config(universe_dir), out)
    return out, result


class TestRunPipeline:
    def test_all_files_emitted(self, run):
        out, result = run
        expected = {
            "stocks.csv", "mci_daily.csv", "mci_monthly.csv", "insample.csv",
            "oos.csv", "csfe.csv", "allocation.csv", "allocation_gross.csv",
            "sorted.csv", "summary.txt",
        }
        present = {p.name for p in out.iterdir() if p.is_file()}
        assert expected <= present
        figures = {p.name for p in (out / "figures").iterdir()}
        assert {"mci_monthly.png", "csfe.png", "forecasts.png", "sorted.png"} <= figures

    def test_csv_headers_match_interface(self, run):
        out, _ = run
        headers = {
            "mci_daily.csv": "date,type,variant,value",
            "mci_monthly.csv": "month,type,variant,value",
            "insample.csv": "predictor,control,beta,phi,t_beta,t_phi,r2,r2_up,r2_down,n",
            "oos.csv": "predictor,r2_os,r2_os_trunc,r2_os_up,r2_os_down,cw_stat,cw_p",
            "csfe.csv": "month,predictor,csfe_diff",
            "allocation.csv": "predictor,gamma,sharpe,sharpe_test,cer_gain,cer_p",
            "sorted.csv": "month,group,cum_return",
        }
        for name, header in headers.items():
            first = (out / name).read_text().splitlines()[0]
            assert first == header, name

    def test_expected_predictor_rows(self, run):
        out, _ = run
        rows = read_csv(out / "oos.csv")
        labels = [r["predictor"] for r in rows]
        for expected in ("mci_1_opt", "mci_2_neg", "mci_3", "sent_a", "econ_c",
                         "comb_mean", "comb_median", "comb_trimmed_mean",
                         "comb_dmspe_1", "comb_dmspe_0.9"):
            assert expected in labels

    def test_combination_truncation_blank_by_default(self, run):
        out, _ = run
        rows = {r["predictor"]: r for r in read_csv(out / "oos.csv")}
        assert rows["comb_mean"]["r2_os_trunc"] == ""
        assert rows["mci_2_opt"]["r2_os_trunc"] != ""

    def test_allocation_covers_gamma_grid(self, run):
        out, _ = run
        rows = read_csv(out / "allocation.csv")
        gammas = {r["gamma"] for r in rows if r["predictor"] == "mci_2_opt"}
        assert gammas == {"1.0", "3.0", "5.0"}

    def test_undefined_daily_values_omitted_not_blank(self, run):
        out, _ = run
        for line in (out / "mci_daily.csv").read_text().splitlines()[1:]:
            assert line.split(",")[3] != ""

    def test_mci_csv_type3_variant_none(self, run):
        out, _ = run
        rows = read_csv(out / "mci_monthly.csv")
        variants = {r["variant"] for r in rows if r["type"] == "3"}
        assert variants == {"none"}


class TestDeterminismAndDegradation:
    def test_byte_identical_across_runs_and_threads(self, universe_dir, tmp_path):
        digests = []
        for i, threads in enumerate((1, 1, 4)):
            out = tmp_path / f"out{i}"
            run_pipeline(base_config(universe_dir, threads=threads), out)
            digests.append(tree_digest(out))
        assert digests[0] == digests[1] == digests[2]

    def test_missing_regime_degrades_gracefully(self, universe_dir, tmp_path):
        with_cal = tmp_path / "with"
        without_cal = tmp_path / "without"
        run_pipeline(base_config(universe_dir), with_cal)
        run_pipeline(base_config(universe_dir, regime=None), without_cal)
        a = {r["predictor"]: r for r in read_csv(with_cal / "oos.csv")}
        b = {r["predictor"]: r for r in read_csv(without_cal / "oos.csv")}
        assert a.keys() == b.keys()
        for label in a:
            assert b[label]["r2_os_up"] == "" and b[label]["r2_os_down"] == ""
            assert a[label]["r2_os"] == b[label]["r2_os"]
            assert a[label]["cw_stat"] == b[label]["cw_stat"]

    def test_missing_stock_panel_skips_sorted(self, universe_dir, tmp_path):
        out = tmp_path / "nopanel"
        result = run_pipeline(base_config(universe_dir, stock_returns=None), out)
        assert not (out / "sorted.csv").exists()
        assert any("stock return panel" in n for n in result.notes)

    def test_stage_error_tagged(self, universe_dir, tmp_path):
        cfg = base_config(universe_dir, news=universe_dir["news"].parent / "missing.jsonl")
        with pytest.raises(PipelineStageError, match=r"\[ingest\]"):
            run_pipeline(cfg, tmp_path / "boom")

    def test_no_connected_news_degrades_gracefully(self, tmp_path):
        # every index series is constant zero: analytic stages skip them
        cfg = SyntheticConfig(n_stocks=14, n_months=40, articles_per_day=5.0,
                              connected_share=0.0, seed=4)
        paths = write_universe(generate_universe(cfg), tmp_path / "data")
        out = tmp_path / "out"
        result = run_pipeline(
            PipelineConfig(news=paths["news"], returns=paths["returns"],
                           train_months=26, min_train_months=24, variance_window=24),
            out,
        )
        assert any("degenerate" in n for n in result.notes)
        assert (out / "oos.csv").read_text().count("\n") == 1  # header only
        assert (out / "mci_monthly.csv").read_text().count("\n") > 1

    def test_combination_member_list_and_truncation_config(self, universe_dir, tmp_path):
        out = tmp_path / "combo"
        cfg = base_config(
            universe_dir,
            combination_members=("sent_a", "sent_b"),
            combination_schemes=("mean", "dmspe:0.9"),
            truncate_combinations=True,
        )
        run_pipeline(cfg, out)
        rows = {r["predictor"]: r for r in read_csv(out / "oos.csv")}
        assert "comb_mean" in rows and "comb_dmspe_0.9" in rows
        assert "comb_trimmed_mean" not in rows
        assert rows["comb_mean"]["r2_os_trunc"] != ""


CONFIG_TEXT = """
[synthetic]
n_stocks = 14
n_months = 40
articles_per_day = 5.0
planted_beta = -0.5
seed = 9

[pipeline]
news = data/news.jsonl
returns = data/returns.csv
regime = data/regime.csv
stock_returns = data/stock_returns.csv
train_months = 26
min_train_months = 24
variance_window = 24
gammas = 1,3
score_types = 2,3
variants = opt
"""


class TestCli:
    @pytest.fixture()
    def config_file(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text(CONFIG_TEXT)
        return path

    def test_generate_then_run_then_summarize(self, config_file, tmp_path, capsys):
        data = tmp_path / "data"
        assert main(["generate", "--config", str(config_file), "--out", str(data)]) == 0
        assert (data / "news.jsonl").exists()
        out = tmp_path / "results"
        assert main(["run", "--config", str(config_file), "--out", str(out)]) == 0
        assert (out / "summary.txt").exists()
        capsys.readouterr()
        assert main(["summarize", "--in", str(out)]) == 0
        assert "out-of-sample" in capsys.readouterr().out

    def test_seed_override_changes_output(self, config_file, tmp_path):
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        main(["generate", "--config", str(config_file), "--out", str(a)])
        main(["generate", "--config", str(config_file), "--out", str(b), "--seed", "77"])
        main(["generate", "--config", str(config_file), "--out", str(c), "--seed", "77"])
        assert (a / "news.jsonl").read_bytes() != (b / "news.jsonl").read_bytes()
        assert (b / "news.jsonl").read_bytes() == (c / "news.jsonl").read_bytes()

    def test_run_failure_exit_code(self, config_file, tmp_path, capsys):
        # config points at data that was never generated
        code = main(["run", "--config", str(config_file), "--out", str(tmp_path / "x")])
        assert code == 1
        assert "[ingest]" in capsys.readouterr().err

    def test_installed_entry_point(self, config_file, tmp_path):
        data = tmp_path / "cli_data"
        proc = subprocess.run(
            [sys.executable, "-m", "newsconn.cli", "generate",
             "--config", str(config_file), "--out", str(data)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (data / "returns.csv").exists()


class TestConfigParsing:
    def test_synthetic_section(self, tmp_path):
        path = tmp_path / "cfg.ini"
        path.write_text(CONFIG_TEXT)
        cfg = load_synthetic_config(path)
        assert cfg.n_stocks == 14 and cfg.planted_beta == -0.5

    def test_pipeline_section_paths_relative_to_config(self, tmp_path):
        path = tmp_path / "cfg.ini"
        path.write_text(CONFIG_TEXT)
        cfg = load_pipeline_config(path)
        assert cfg.news == tmp_path / "data/news.jsonl"
        assert cfg.gammas == (1.0, 3.0)
        assert cfg.combos() == [(2, "opt"), (3, None)]

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.ini"
        path.write_text("[pipeline]\nnews = a\nreturns = b\nbogus = 1\n")
        with pytest.raises(ConfigError, match="bogus"):
            load_pipeline_config(path)

    def test_threads_env_var(self, tmp_path, monkeypatch):
        path = tmp_path / "cfg.ini"
        path.write_text("[pipeline]\nnews = a\nreturns = b\n")
        monkeypatch.setenv("NEWSCONN_THREADS", "6")
        assert load_pipeline_config(path).threads == 6

    def test_missing_section(self, tmp_path):
        path = tmp_path / "cfg.ini"
        path.write_text("[other]\nx = 1\n")
        with pytest.raises(ConfigError, match="synthetic"):
            load_synthetic_config(path)
