# File: tests/test_cli.py

import json
from pathlib import Path

import pandas as pd
import pytest

from app import build_parser, main
from commands.simulate import experiment_from_section
from utils.helpers import load_config, validate_experiment_data

CONFIG_DIR = Path(__file__).parents[1] / "config"

FAST_EXPERIMENT = """
[experiment]
test_kind = "{kind}"
j = 1
magnitudes = {magnitudes}
sample_sizes = [40]
replicates = 3
pivot_replicates = 5000
seed = 7
"""


@pytest.fixture
def env(tmp_path, monkeypatch):
    monkeypatch.setenv("RELCHANGE_OUT_DIR", str(tmp_path / "out"))
    monkeypatch.delenv("RELCHANGE_DB_URL", raising=False)
    monkeypatch.delenv("RELCHANGE_QUANTILE_CACHE", raising=False)
    return tmp_path


def write_config(path, kind="eigenvalue", magnitudes="[0.0, 0.2]"):
    path.write_text(FAST_EXPERIMENT.format(kind=kind, magnitudes=magnitudes))
    return path


class TestQuantiles:
    def test_writes_cache(self, env, capsys):
        out = env / "q.csv"

        code = main(["quantiles", "--K", "20", "--R", "5000", "--seed", "1", "--out", str(out)])

        frame = pd.read_csv(out)
        assert code == 0
        assert len(frame) == 10_001
        assert frame["K"].iloc[0] == 20
        assert "q_0.95" in capsys.readouterr().out

    def test_identical_invocations_identical_files(self, env):
        main(["quantiles", "--R", "4000", "--seed", "3", "--out", str(env / "a.csv")])
        main(["quantiles", "--R", "4000", "--seed", "3", "--out", str(env / "b.csv")])

        assert (env / "a.csv").read_bytes() == (env / "b.csv").read_bytes()

    def test_default_cache_location(self, env):
        code = main(["quantiles", "--R", "2000", "--seed", "4", "--quantile-cache", str(env / "cache")])

        assert code == 0
        assert (env / "cache" / "pivot_K20_R2000_seed4.csv").exists()


class TestSimulate:
    def test_writes_tables_and_registry(self, env):
        config = write_config(env / "fast.toml")

        code = main(["simulate", str(config), "--quantile-cache", str(env / "cache")])

        frame = pd.read_csv(env / "out" / "fast.csv")
        payload = json.loads((env / "out" / "fast.json").read_text())
        assert code == 0
        assert len(frame) == 2
        assert payload["config"]["seed"] == 7
        assert (env / "out" / "results.db").exists()

    def test_eigenfunction_angles(self, env):
        config = write_config(env / "angles.toml", kind="eigenfunction", magnitudes='["0", "pi/4"]')

        code = main(["simulate", str(config), "--no-registry", "--quantile-cache", str(env / "cache")])

        frame = pd.read_csv(env / "out" / "angles.csv")
        assert code == 0
        assert frame["magnitude"].iloc[1] == pytest.approx(0.7853981634)

    def test_seed_flag_overrides_config(self, env):
        config = write_config(env / "seeded.toml")

        main(["simulate", str(config), "--no-registry", "--seed", "11", "--quantile-cache", str(env / "cache")])

        payload = json.loads((env / "out" / "seeded.json").read_text())
        assert payload["config"]["seed"] == 11

    def test_empty_magnitudes(self, env, capsys):
        config = write_config(env / "empty.toml", magnitudes="[]")

        code = main(["simulate", str(config), "--no-registry"])

        assert code == 1
        assert "magnitudes" in capsys.readouterr().err

    def test_unknown_test_kind(self, env, capsys):
        config = write_config(env / "kind.toml", kind="mean")

        code = main(["simulate", str(config), "--no-registry"])

        assert code == 1
        err = capsys.readouterr().err
        assert "eigenvalue" in err and "eigenfunction" in err

    def test_missing_config(self, env):
        assert main(["simulate", str(env / "nope.toml")]) == 1

    def test_shipped_config_shape(self):
        config = experiment_from_section(load_config(CONFIG_DIR / "eigenvalue_j1_iid.toml")["experiment"])

        assert len(config.resolved_magnitudes) == 9
        assert config.sample_sizes == (200, 400, 600)

    def test_shipped_sweep_config(self):
        section = load_config(CONFIG_DIR / "epsilon_sweep.toml")["experiment"]

        config = experiment_from_section(section)

        assert validate_experiment_data(section) == (True, "")
        assert (config.test_kind, config.j, config.sample_sizes) == ("eigenfunction", 1, (400,))
        assert config.dependence == "iid"
        assert 0.0 in section["epsilons"]

    def test_wrongly_typed_field(self, env, capsys):
        config = env / "typed.toml"
        config.write_text(FAST_EXPERIMENT.format(kind="eigenvalue", magnitudes="[0.0]") + 'delta = "0.1"\n')

        code = main(["simulate", str(config), "--no-registry"])

        assert code == 1
        assert "delta" in capsys.readouterr().err


class TestGenerateAndAnalyze:
    def test_round_trip(self, env, capsys):
        daily = env / "daily.csv"

        generated = main(["generate", "--years", "12", "--seed", "5", "--break", "rotation",
                          "--magnitude", "pi/3", "--break-after", "6", "--output", str(daily)])
        analyzed = main(["analyze", str(daily), "--pivot-replicates", "5000",
                         "--j-fun", "1,2", "--j-val", "1,2,3", "--angles", "pi/8,pi/4",
                         "--quantile-cache", str(env / "cache")])

        assert generated == 0
        assert analyzed == 0
        report = json.loads((env / "out" / "report.json").read_text())
        assert report["n_years"] == 12
        assert len(report["eigenfunction_relevance"]) == 4
        assert len(report["eigenvalue_relevance"]) == 9
        assert "change after" in capsys.readouterr().out

    def test_analyze_config_file(self, env):
        daily = env / "daily.csv"
        main(["generate", "--years", "10", "--seed", "6", "--output", str(daily)])
        config = env / "analysis.toml"
        config.write_text('[analysis]\nangles = ["pi/4"]\nj_fun = [1]\nj_val = [1]\npivot_replicates = 5000\n')

        code = main(["analyze", str(daily), "--config", str(config), "--no-registry"])

        frame = pd.read_csv(env / "out" / "eigenfunction_relevance.csv")
        assert code == 0
        assert frame["threshold"].tolist() == ["phi=pi/4"]

    def test_unreadable_csv(self, env):
        bad = env / "bad.csv"
        bad.write_text("date,value\nyesterday,1\n")

        assert main(["analyze", str(bad), "--no-registry"]) == 1

    def test_mean_offset(self, env):
        daily = env / "offset.csv"

        code = main(["generate", "--years", "4", "--seed", "1", "--mean-offset", "10", "--output", str(daily)])

        assert code == 0
        assert pd.read_csv(daily)["value"].mean() == pytest.approx(10.0, abs=1.0)

    def test_generate_without_seed_is_reproducible(self, env):
        main(["generate", "--years", "4", "--output", str(env / "a.csv")])
        main(["generate", "--years", "4", "--output", str(env / "b.csv")])

        assert (env / "a.csv").read_bytes() == (env / "b.csv").read_bytes()

    def test_generate_rejects_too_few_years(self, env, capsys):
        code = main(["generate", "--years", "2", "--output", str(env / "short.csv")])

        assert code == 1
        assert not (env / "short.csv").exists()
        assert "at least 4" in capsys.readouterr().err


def test_argument_errors_exit_with_two():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["simulate"])

    assert info.value.code == 2


def test_workers_must_be_positive(env):
    with pytest.raises(SystemExit) as info:
        main(["quantiles", "--workers", "0"])

    assert info.value.code == 2
