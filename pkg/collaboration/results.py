"""Run artifacts: directory layout, CSV tables, plot-data files and metadata.

Layout for one run::

    <output_dir>/<experiment>/<timestamp>/
        *.csv            result tables, one header row each
        snapshots_*.json sidecar of the matching snapshot table (configs, seeds, warnings)
        plots/*.dat      two-column x/y series, one file per curve
        metadata.json    config echo, package versions, seeds, wall time, warnings
    <output_dir>/runs.jsonl   append-only index of every run

Only the coordinating process writes here.
"""

from __future__ import annotations

import csv
import json
import logging
import platform
from datetime import datetime, timezone
from importlib import metadata as importlib_metadata
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from collaboration.models import DegreeProfile, RunConfig, SimResult, StationaryPoint

logger = logging.getLogger(__name__)

METADATA_FILE = "metadata.json"
RUN_INDEX_FILE = "runs.jsonl"
PLOTS_DIR = "plots"
TRACKED_PACKAGES = ("numpy", "scipy", "networkx", "pydantic")


# ---------------------------------------------------------------------------
# Directory helpers
# ---------------------------------------------------------------------------

def run_directory(output_dir: str | Path, experiment: str, timestamp: datetime | None = None) -> Path:
    """Create and return ``<output_dir>/<experiment>/<timestamp>/``, never reusing one."""
    stamp = (timestamp or datetime.now(timezone.utc)).strftime("%Y%m%dT%H%M%SZ")
    base = Path(output_dir) / experiment
    d = base / stamp
    suffix = 1
    while d.exists():
        d = base / f"{stamp}-{suffix}"
        suffix += 1
    d.mkdir(parents=True)
    return d


def _plots_dir(run_dir: Path) -> Path:
    d = run_dir / PLOTS_DIR
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# Tables and plot data
# ---------------------------------------------------------------------------

def _cell(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if value is None:
        return ""
    return value


def write_csv(path: str | Path, rows: Sequence[dict], columns: Sequence[str] | None = None) -> Path:
    """Write dict rows under a header row; columns default to the first row's keys."""
    path = Path(path)
    if columns is None:
        if not rows:
            raise ValueError(f"cannot infer CSV columns for {path.name} from zero rows")
        columns = list(rows[0])
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: _cell(row.get(c)) for c in columns})
    logger.info("Wrote %s (%d rows)", path, len(rows))
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def write_plot_series(
    run_dir: Path, name: str, x: Sequence[float], y: Sequence[float],
    x_label: str = "x", y_label: str = "y",
) -> Path:
    """One curve as whitespace-separated x/y columns under a ``#`` header."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"plot series {name}: x has shape {x.shape}, y has {y.shape}")
    path = _plots_dir(run_dir) / f"{name}.dat"
    np.savetxt(path, np.column_stack([x, y]), fmt="%.10g", header=f"{x_label} {y_label}")
    return path


def stationary_rows(sp: StationaryPoint, profile: DegreeProfile) -> list[dict]:
    """(k, i, s_star) for every degree class and queue length."""
    return [
        {"k": k, "i": i, "s_star": float(sp.s_star.s[c, i])}
        for c, k in enumerate(profile.support)
        for i in range(sp.s_star.i_max + 1)
    ]


def aggregate_rows(sp: StationaryPoint) -> list[dict]:
    """(i, s_i, s_k_i): degree-averaged and degree-weighted tails of the stationary point."""
    return [
        {"i": i, "s_i": float(sp.tail[i]), "s_k_i": float(sp.weighted_tail[i])}
        for i in range(sp.tail.size)
    ]


SNAPSHOT_COLUMNS = ("seed", "time", "k", "i", "s_hat", "n_class")


def snapshot_rows(result: SimResult, max_i: int | None = None) -> list[dict]:
    """(seed, time, k, i, s_hat, n_class) long-format rows for one replication."""
    rows = []
    for snap in result.snapshots:
        depth = snap.s_hat.shape[1] - 1 if max_i is None else min(max_i, snap.s_hat.shape[1] - 1)
        for c, k in enumerate(snap.classes):
            for i in range(1, depth + 1):
                rows.append({
                    "seed": result.config.seed,
                    "time": snap.time,
                    "k": k,
                    "i": i,
                    "s_hat": float(snap.s_hat[c, i]),
                    "n_class": snap.class_sizes[c],
                })
    return rows


def write_snapshots(
    run_dir: Path, name: str, results: Sequence[SimResult], max_i: int | None = None
) -> tuple[Path, Path]:
    """``<name>.csv`` with every replication's snapshots plus a ``<name>.json`` sidecar.

    The sidecar lists, per replication, the full SimConfig, its seed, warnings,
    conservation counters and graph component counts.
    """
    rows = [row for r in results for row in snapshot_rows(r, max_i)]
    csv_path = write_csv(run_dir / f"{name}.csv", rows, SNAPSHOT_COLUMNS)
    sidecar = {
        "replications": [
            {
                "seed": r.config.seed,
                "config": r.config.to_dict(),
                "warnings": list(r.warnings),
                "generated": int(r.generated),
                "offloaded": int(r.offloaded),
                "completed": int(r.completed),
                "in_queue": int(r.in_queue),
                "regenerations": int(r.regenerations),
                "component_counts": [int(c) for c in r.component_counts],
            }
            for r in results
        ],
    }
    json_path = run_dir / f"{name}.json"
    json_path.write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
    return csv_path, json_path


# ---------------------------------------------------------------------------
# Metadata and run index
# ---------------------------------------------------------------------------

def package_versions() -> dict[str, str]:
    versions = {"python": platform.python_version()}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = importlib_metadata.version(name)
        except importlib_metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_metadata(
    run_dir: Path,
    config: RunConfig,
    *,
    wall_time: float,
    warnings: list[str] | None = None,
    artifacts: list[str] | None = None,
    exit_code: int = 0,
    extra: dict[str, Any] | None = None,
) -> Path:
    """Write metadata.json for a finished (or failed) run."""
    payload = {
        "experiment": config.experiment.value,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "wall_time_s": wall_time,
        "exit_code": exit_code,
        "seeds": list(config.seeds),
        "versions": package_versions(),
        "warnings": list(warnings or []),
        "artifacts": sorted(artifacts or []),
        "config": config.to_dict(),
    }
    if extra:
        payload.update(extra)
    path = run_dir / METADATA_FILE
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def load_metadata(path: str | Path) -> tuple[RunConfig, dict]:
    """Read metadata.json (or the run directory holding it); returns (config, raw payload)."""
    path = Path(path)
    if path.is_dir():
        path = path / METADATA_FILE
    payload = json.loads(path.read_text(encoding="utf-8"))
    return RunConfig.from_dict(payload["config"]), payload


def append_run_index(output_dir: str | Path, entry: dict) -> None:
    """Append one run record as a JSON line to ``<output_dir>/runs.jsonl``."""
    path = Path(output_dir) / RUN_INDEX_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as f:
        f.write(json.dumps(entry) + "\n")


def load_run_index(output_dir: str | Path) -> list[dict]:
    path = Path(output_dir) / RUN_INDEX_FILE
    if not path.exists():
        return []
    entries = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            entries.append(json.loads(line))
    return entries


def list_run_files(run_dir: str | Path) -> list[dict]:
    """Every file under a run directory as {"path", "size"}, sorted by path."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise FileNotFoundError(f"Run directory not found: {run_dir}")
    return [
        {"path": str(p.relative_to(run_dir)), "size": p.stat().st_size}
        for p in sorted(run_dir.rglob("*"))
        if p.is_file()
    ]
