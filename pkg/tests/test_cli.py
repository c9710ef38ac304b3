"""CLI tests — argument parsing, exit codes and console output of d2d-mf."""

from __future__ import annotations

import json

import pytest

from cli.main import build_parser, main
from collaboration.models import Experiment
from collaboration.results import load_run_index


@pytest.fixture
def quick_config(tmp_path):
    path = tmp_path / "quick.json"
    path.write_text(json.dumps({"sweep": {"simulate": False}, "seeds": [0]}), encoding="utf-8")
    return path


class TestParser:
    def test_run_flags(self):
        args = build_parser().parse_args(
            ["run", "--experiment", "feasibility", "--seed", "3", "--workers", "2", "--out", "o"]
        )
        assert (args.command, args.experiment, args.seed, args.workers, args.out) == (
            "run", "feasibility", 3, 2, "o",
        )
        assert args.log_level == "WARNING"

    def test_no_command_prints_help(self, capsys):
        assert main([]) == 0
        assert "d2d-mf" in capsys.readouterr().out

    def test_unknown_command(self):
        assert main(["launch"]) == 2

    def test_bad_flag_type(self):
        assert main(["run", "--seed", "abc"]) == 2

    def test_help(self):
        assert main(["--help"]) == 0


class TestCommands:
    def test_experiments(self, capsys):
        assert main(["experiments"]) == 0
        assert capsys.readouterr().out.split() == Experiment.names()

    def test_validate_ok(self, quick_config, capsys):
        assert main(["validate", "--config", str(quick_config)]) == 0
        out = capsys.readouterr().out
        assert "Config OK" in out
        assert "B/r=1.6" in out
        assert "mean 7.5" in out

    def test_validate_reports_problems(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "params": {\n    "mu": -1\n  }\n}', encoding="utf-8")
        assert main(["validate", "--config", str(path)]) == 2
        err = capsys.readouterr().err
        assert "invalid configuration" in err
        assert "line 3: params.mu" in err

    def test_validate_requires_config(self):
        assert main(["validate"]) == 2

    def test_run_table1(self, quick_config, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code = main(["run", "--config", str(quick_config), "--experiment", "table1", "--out", str(out_dir)])
        assert code == 0
        out = capsys.readouterr().out
        assert "Experiment: table1" in out
        [entry] = load_run_index(out_dir)
        assert entry["exit_code"] == 0

    def test_run_unknown_experiment(self, quick_config, tmp_path, capsys):
        code = main(["run", "--config", str(quick_config), "--experiment", "table9", "--out", str(tmp_path)])
        assert code == 2
        assert "unknown name 'table9'" in capsys.readouterr().err
        assert load_run_index(tmp_path) == []

    def test_run_infeasible(self, tmp_path, capsys):
        path = tmp_path / "tight.json"
        path.write_text(json.dumps({"experiment": "feasibility", "params": {"d_bar": 0.5}}), encoding="utf-8")
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == 1
        assert "Delay cap" in capsys.readouterr().err
