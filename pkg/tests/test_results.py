"""Results tests — run directories, CSV tables, plot series, metadata and the run index."""

from __future__ import annotations

import json
from datetime import datetime, timezone

import numpy as np
import pytest

from collaboration.config import default_config
from collaboration.meanfield import stationary_point
from collaboration.models import DegreeProfile, GraphMode, SimConfig
from collaboration.results import (
    METADATA_FILE,
    PLOTS_DIR,
    SNAPSHOT_COLUMNS,
    aggregate_rows,
    append_run_index,
    list_run_files,
    load_metadata,
    load_run_index,
    read_csv,
    run_directory,
    snapshot_rows,
    stationary_rows,
    write_csv,
    write_metadata,
    write_plot_series,
    write_snapshots,
)
from collaboration.simulator import simulate

STAMP = datetime(2024, 5, 1, 12, 0, 0, tzinfo=timezone.utc)


@pytest.fixture
def run_dir(tmp_path):
    return run_directory(tmp_path, "table1", STAMP)


@pytest.fixture(scope="module")
def snapshot_result():
    config = SimConfig(
        n_users=50, profile=DegreeProfile.uniform([2, 3]), mode=GraphMode.STATIC,
        lam=0.9, mu=1.0, x=0.5, t_end=2.0, sample_every=1.0, seed=4,
    )
    return simulate(config)


# ---------------------------------------------------------------------------
# Directories
# ---------------------------------------------------------------------------

class TestRunDirectory:
    def test_layout(self, tmp_path, run_dir):
        assert run_dir == tmp_path / "table1" / "20240501T120000Z"
        assert run_dir.is_dir()

    def test_never_reused(self, tmp_path, run_dir):
        second = run_directory(tmp_path, "table1", STAMP)
        third = run_directory(tmp_path, "table1", STAMP)
        assert second.name == "20240501T120000Z-1"
        assert third.name == "20240501T120000Z-2"

    def test_list_files(self, run_dir):
        write_csv(run_dir / "a.csv", [{"x": 1}])
        write_plot_series(run_dir, "curve", [0, 1], [1, 2])
        paths = [f["path"] for f in list_run_files(run_dir)]
        assert paths == ["a.csv", f"{PLOTS_DIR}/curve.dat"]

    def test_list_missing_dir(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            list_run_files(tmp_path / "nope")


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

class TestTables:
    def test_header_and_rows(self, run_dir):
        path = write_csv(run_dir / "t.csv", [{"k": 6, "s": np.float64(0.5)}, {"k": 7, "s": None}])
        assert path.read_text(encoding="utf-8").splitlines() == ["k,s", "6,0.5", "7,"]
        assert read_csv(path) == [{"k": "6", "s": "0.5"}, {"k": "7", "s": ""}]

    def test_explicit_columns_for_empty_table(self, run_dir):
        path = write_csv(run_dir / "empty.csv", [], columns=["k", "i"])
        assert path.read_text(encoding="utf-8") == "k,i\n"

    def test_empty_table_needs_columns(self, run_dir):
        with pytest.raises(ValueError, match="zero rows"):
            write_csv(run_dir / "empty.csv", [])

    def test_plot_series(self, run_dir):
        path = write_plot_series(run_dir, "s1_k6", [0.1, 0.2], [0.3, 0.4], "load", "s")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "# load s"
        np.testing.assert_allclose(np.loadtxt(path), [[0.1, 0.3], [0.2, 0.4]])

    def test_plot_shape_mismatch(self, run_dir):
        with pytest.raises(ValueError, match="shape"):
            write_plot_series(run_dir, "bad", [0.1, 0.2], [0.3])

    def test_stationary_rows(self):
        profile = DegreeProfile.uniform([6, 7, 8, 9])
        sp = stationary_point(profile, 0.9, 1.0, 0.7 / 0.9)
        rows = stationary_rows(sp, profile)
        assert len(rows) == 4 * (sp.s_star.i_max + 1)
        assert rows[1] == {"k": 6, "i": 1, "s_star": pytest.approx(0.66504, abs=1e-4)}
        agg = aggregate_rows(sp)
        assert list(agg[0]) == ["i", "s_i", "s_k_i"]
        assert agg[0]["s_i"] == pytest.approx(1.0)
        assert agg[1]["s_i"] == pytest.approx(0.7, abs=1e-6)
        assert agg[1]["s_k_i"] > agg[1]["s_i"]

    def test_snapshot_rows(self, snapshot_result):
        result = snapshot_result
        rows = snapshot_rows(result, max_i=3)
        n_classes = len(result.classes)
        assert len(rows) == 3 * n_classes * 3
        assert {r["seed"] for r in rows} == {4}
        assert {r["i"] for r in rows} == {1, 2, 3}
        assert list(rows[0]) == list(SNAPSHOT_COLUMNS)
        sizes = dict(zip(result.classes, result.snapshots[0].class_sizes))
        assert all(r["n_class"] == sizes[r["k"]] for r in rows)
        assert sum(sizes.values()) == 50

    def test_write_snapshots(self, run_dir, snapshot_result):
        csv_path, json_path = write_snapshots(run_dir, "snapshots_static", [snapshot_result], max_i=2)
        assert (csv_path.name, json_path.name) == ("snapshots_static.csv", "snapshots_static.json")
        rows = read_csv(csv_path)
        assert list(rows[0]) == ["seed", "time", "k", "i", "s_hat", "n_class"]
        assert len(rows) == 3 * len(snapshot_result.classes) * 2
        [entry] = json.loads(json_path.read_text(encoding="utf-8"))["replications"]
        assert entry["seed"] == 4
        assert entry["config"]["n_users"] == 50
        assert entry["generated"] == entry["offloaded"] + entry["completed"] + entry["in_queue"]


# ---------------------------------------------------------------------------
# Metadata and index
# ---------------------------------------------------------------------------

class TestMetadata:
    def test_round_trip(self, run_dir):
        config = default_config()
        write_metadata(
            run_dir, config, wall_time=1.5, warnings=["w"], artifacts=["b.csv", "a.csv"],
            extra={"summary": {"x_l": 0.5}},
        )
        loaded, payload = load_metadata(run_dir)
        assert loaded == config
        assert payload["experiment"] == "table1"
        assert payload["artifacts"] == ["a.csv", "b.csv"]
        assert payload["summary"] == {"x_l": 0.5}
        assert payload["exit_code"] == 0
        assert {"python", "numpy", "scipy", "networkx", "pydantic"} <= set(payload["versions"])

    def test_load_from_file_path(self, run_dir):
        write_metadata(run_dir, default_config(), wall_time=0.0, exit_code=1)
        _, payload = load_metadata(run_dir / METADATA_FILE)
        assert payload["exit_code"] == 1
        assert json.loads((run_dir / METADATA_FILE).read_text())["seeds"] == list(range(8))

    def test_run_index(self, tmp_path):
        assert load_run_index(tmp_path) == []
        append_run_index(tmp_path, {"experiment": "table1", "exit_code": 0})
        append_run_index(tmp_path, {"experiment": "feasibility", "exit_code": 1})
        entries = load_run_index(tmp_path)
        assert [e["experiment"] for e in entries] == ["table1", "feasibility"]
