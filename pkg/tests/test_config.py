"""Config tests — schema defaults, file loading, error reporting and CLI overrides.

Covers:
- default_config: evaluation parameters, derived upload time, degree profile
- config/default_run.json loads and matches the built-in defaults
- config_from_dict: lambda alias, b_over_r vs data size/uplink, profile pmf,
  loads above lambda, unknown keys
- load_config: missing file, malformed JSON, line numbers in problems
- apply_overrides: experiment, seed shift, workers, output dir
- output directory from the environment
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from collaboration.config import (
    OUTPUT_DIR_ENV,
    apply_overrides,
    config_from_dict,
    default_config,
    load_config,
)
from collaboration.models import ConfigurationError, Experiment, RegionSelection

REPO_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_RUN = REPO_ROOT / "config" / "default_run.json"


def write_config(tmp_path: Path, data: dict | str) -> Path:
    path = tmp_path / "run.json"
    text = data if isinstance(data, str) else json.dumps(data, indent=2)
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Defaults
# ---------------------------------------------------------------------------

class TestDefaults:
    def test_evaluation_parameters(self):
        config = default_config()
        p = config.params
        assert (p.lam, p.mu, p.gamma) == (0.9, 1.0, 5.0)
        assert p.b_over_r == pytest.approx(1.6)
        assert (p.d_bar, p.s_bar, p.x_bar, p.p_u) == (1.6, 0.06, 0.6, 0.5)

    def test_profile(self):
        profile = default_config().profile
        assert profile.support == (6, 7, 8, 9)
        assert profile.mean_degree == pytest.approx(7.5)

    def test_run_settings(self):
        config = default_config()
        assert config.experiment == Experiment.TABLE1
        assert config.seeds == list(range(8))
        assert config.region_selection == RegionSelection.HIGHEST
        assert config.sweep.grid_points == 101
        assert config.sim.n_static == 800 and config.sim.n_dynamic == 1000

    def test_shipped_file_matches_defaults(self):
        loaded = load_config(DEFAULT_RUN)
        expected = default_config()
        assert loaded.params == expected.params
        assert loaded.profile == expected.profile
        assert loaded.sweep == expected.sweep
        assert loaded.sim == expected.sim


# ---------------------------------------------------------------------------
# Documents
# ---------------------------------------------------------------------------

class TestConfigFromDict:
    def test_lambda_alias(self):
        config = config_from_dict({"params": {"lambda": 0.5}, "sweep": {"loads": [0.2], "table_load": 0.3,
                                                                        "workload_load": 0.4}})
        assert config.params.lam == 0.5

    def test_direct_upload_time(self):
        assert config_from_dict({"params": {"b_over_r": 0.8}}).params.b_over_r == 0.8

    def test_upload_from_size_and_rate(self):
        config = config_from_dict({"params": {"data_size_kb": 1000, "uplink_mbps": 4}})
        assert config.params.b_over_r == pytest.approx(2.0)

    def test_upload_given_twice(self):
        with pytest.raises(ConfigurationError, match="not both"):
            config_from_dict({"params": {"b_over_r": 1.0, "data_size_kb": 1000, "uplink_mbps": 4}})

    def test_size_without_rate(self):
        with pytest.raises(ConfigurationError, match="together"):
            config_from_dict({"params": {"data_size_kb": 1000}})

    def test_unstable_rates(self):
        with pytest.raises(ConfigurationError, match="must be below mu"):
            config_from_dict({"params": {"lambda": 1.0}})

    def test_loads_above_lambda(self):
        with pytest.raises(ConfigurationError, match="exceed lambda"):
            config_from_dict({"params": {"lambda": 0.5}})

    def test_profile_pmf(self):
        config = config_from_dict({"profile": {"support": [2, 4], "pmf": [0.25, 0.75]}})
        assert config.profile.mean_degree == pytest.approx(3.5)

    def test_bad_pmf(self):
        with pytest.raises(ConfigurationError, match="pmf sums"):
            config_from_dict({"profile": {"support": [2, 4], "pmf": [0.5, 0.6]}})

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError) as exc:
            config_from_dict({"parms": {}})
        assert any(p.startswith("parms") for p in exc.value.problems)

    def test_every_problem_reported(self):
        with pytest.raises(ConfigurationError) as exc:
            config_from_dict({"params": {"mu": -1, "gamma": 0}, "workers": 0})
        assert len(exc.value.problems) == 3

    def test_unknown_experiment(self):
        with pytest.raises(ConfigurationError, match="experiment"):
            config_from_dict({"experiment": "table9"})


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

class TestLoadConfig:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="cannot read config"):
            load_config(tmp_path / "absent.json")

    def test_malformed_json(self, tmp_path):
        path = write_config(tmp_path, '{\n  "experiment": "table1",\n}')
        with pytest.raises(ConfigurationError, match="line 3"):
            load_config(path)

    def test_top_level_must_be_object(self, tmp_path):
        with pytest.raises(ConfigurationError, match="JSON object"):
            load_config(write_config(tmp_path, "[1, 2]"))

    def test_problem_carries_line_number(self, tmp_path):
        path = write_config(tmp_path, {"experiment": "table1", "params": {"mu": -1.0}})
        with pytest.raises(ConfigurationError) as exc:
            load_config(path)
        [problem] = exc.value.problems
        assert problem.startswith("line 4: params.mu")

    def test_output_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "out"))
        config = load_config(write_config(tmp_path, {"experiment": "feasibility"}))
        assert config.experiment == Experiment.FEASIBILITY
        assert config.output_dir == str(tmp_path / "out")

    def test_file_beats_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_DIR_ENV, "elsewhere")
        config = load_config(write_config(tmp_path, {"output_dir": "mine"}))
        assert config.output_dir == "mine"


# ---------------------------------------------------------------------------
# CLI overrides
# ---------------------------------------------------------------------------

class TestOverrides:
    def test_no_flags_is_identity(self):
        config = default_config()
        assert apply_overrides(config) == config

    def test_experiment(self):
        config = apply_overrides(default_config(), experiment="pricing_sweep")
        assert config.experiment == Experiment.PRICING_SWEEP

    def test_seed_shifts_range(self):
        config = apply_overrides(default_config(), seed=100)
        assert config.seeds == list(range(100, 108))

    def test_workers_and_output(self):
        config = apply_overrides(default_config(), workers=4, output_dir="runs")
        assert (config.workers, config.output_dir) == (4, "runs")

    def test_bad_flags_collected(self):
        with pytest.raises(ConfigurationError) as exc:
            apply_overrides(default_config(), experiment="nope", workers=0)
        assert len(exc.value.problems) == 2
        assert "unknown name 'nope'" in exc.value.problems[0]
