"""Run configuration schema, defaults and file/flag merging.

Config files are JSON validated by the pydantic models below and converted to
the plain ``RunConfig`` dataclass the harness works with. Precedence is
CLI flag > config file > built-in default. Upload time may be given directly
as ``b_over_r`` or as ``data_size_kb`` plus ``uplink_mbps``.
"""

from __future__ import annotations

import json
import os
from dataclasses import replace
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from collaboration.models import (
    ConfigurationError,
    DegreeProfile,
    Experiment,
    RegionSelection,
    RunConfig,
    SimSettings,
    SweepSpec,
    SystemParams,
    transmission_time,
)

OUTPUT_DIR_ENV = "D2D_MF_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"
DEFAULT_DATA_SIZE_KB = 2000.0
DEFAULT_UPLINK_MBPS = 10.0


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR


# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------

class SystemParamsModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    lam: float = Field(0.9, alias="lambda", ge=0)
    mu: float = Field(1.0, gt=0)
    gamma: float = Field(5.0, gt=0)
    b_over_r: float | None = Field(None, ge=0)
    data_size_kb: float | None = Field(None, ge=0)
    uplink_mbps: float | None = Field(None, gt=0)
    rho_c_m: float = Field(0.9, ge=0)
    rho_t_m: float = Field(0.3, ge=0)
    rho_c_s: float = Field(1.0, ge=0)
    d_bar: float = Field(1.6, gt=0)
    s_bar: float = Field(0.06, gt=0)
    x_bar: float = Field(0.6, ge=0)
    p_u: float = Field(0.5, gt=0)

    @model_validator(mode="after")
    def _check(self) -> "SystemParamsModel":
        if self.lam >= self.mu:
            raise ValueError(f"lambda ({self.lam}) must be below mu ({self.mu})")
        raw = (self.data_size_kb, self.uplink_mbps)
        if self.b_over_r is not None and any(v is not None for v in raw):
            raise ValueError("give either b_over_r or data_size_kb/uplink_mbps, not both")
        if (raw[0] is None) != (raw[1] is None):
            raise ValueError("data_size_kb and uplink_mbps must be given together")
        return self

    def upload_time(self) -> float:
        if self.b_over_r is not None:
            return self.b_over_r
        if self.data_size_kb is not None:
            return transmission_time(self.data_size_kb, self.uplink_mbps)
        return transmission_time(DEFAULT_DATA_SIZE_KB, DEFAULT_UPLINK_MBPS)

    def to_params(self) -> SystemParams:
        return SystemParams(
            lam=self.lam,
            mu=self.mu,
            gamma=self.gamma,
            b_over_r=self.upload_time(),
            rho_c_m=self.rho_c_m,
            rho_t_m=self.rho_t_m,
            rho_c_s=self.rho_c_s,
            d_bar=self.d_bar,
            s_bar=self.s_bar,
            x_bar=self.x_bar,
            p_u=self.p_u,
        )


class DegreeProfileModel(BaseModel):
    """Degree support with its pmf; a missing pmf means uniform."""
    model_config = ConfigDict(extra="forbid")

    support: list[int] = Field(default_factory=lambda: [6, 7, 8, 9], min_length=1)
    pmf: list[float] | None = None

    @model_validator(mode="after")
    def _check(self) -> "DegreeProfileModel":
        if any(k < 1 for k in self.support):
            raise ValueError("degrees must be >= 1")
        if any(b <= a for a, b in zip(self.support, self.support[1:])):
            raise ValueError("support must be strictly ascending")
        if self.pmf is not None:
            if len(self.pmf) != len(self.support):
                raise ValueError(f"pmf has {len(self.pmf)} entries for {len(self.support)} degrees")
            if any(p < 0 for p in self.pmf):
                raise ValueError("pmf entries must be nonnegative")
            if abs(sum(self.pmf) - 1.0) > 1e-9:
                raise ValueError(f"pmf sums to {sum(self.pmf)}, expected 1")
        return self

    def to_profile(self) -> DegreeProfile:
        if self.pmf is None:
            return DegreeProfile.uniform(self.support)
        total = sum(self.pmf)
        return DegreeProfile(tuple(self.support), tuple(p / total for p in self.pmf))


class SimOverrides(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_static: int = Field(800, ge=2)
    n_dynamic: int = Field(1000, ge=2)
    t_end: float = Field(200.0, gt=0)
    sample_every: float = Field(1.0, gt=0)
    regeneration_rate: float = Field(1.0, gt=0)
    late_fraction: float = Field(0.25, gt=0, le=1)
    i_max: int = Field(8, ge=1)

    def to_settings(self) -> SimSettings:
        return SimSettings(**self.model_dump())


class SweepModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    loads: list[float] = Field(default_factory=lambda: [round(0.1 * j, 1) for j in range(1, 10)], min_length=1)
    table_load: float = Field(0.7, gt=0)
    workload_load: float = Field(0.9, gt=0)
    v_values: list[float] = Field(default_factory=lambda: [5.0 * j for j in range(1, 21)], min_length=1)
    trace_v: float = Field(20.0, gt=0)
    horizon: int = Field(100, ge=1)
    static_sizes: list[int] = Field(default_factory=lambda: [100, 300, 800], min_length=1)
    dynamic_sizes: list[int] = Field(default_factory=lambda: [100, 300, 1000], min_length=1)
    simulate: bool = True
    grid_points: int = Field(101, ge=3)
    lipschitz_trials: int = Field(100, ge=1)
    dominance_pairs: int = Field(20, ge=1)
    decay_trajectories: int = Field(10, ge=2)
    decay_load: float = Field(0.3, gt=0)

    @model_validator(mode="after")
    def _check(self) -> "SweepModel":
        if any(load <= 0 for load in self.loads):
            raise ValueError("loads must be > 0")
        if any(v <= 0 for v in self.v_values):
            raise ValueError("v_values must be > 0")
        for name in ("static_sizes", "dynamic_sizes"):
            sizes = getattr(self, name)
            if any(n < 2 for n in sizes) or any(b <= a for a, b in zip(sizes, sizes[1:])):
                raise ValueError(f"{name} must be strictly ascending and >= 2")
        return self

    def to_spec(self) -> SweepSpec:
        return SweepSpec(**self.model_dump())


class RunConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment: Experiment = Experiment.TABLE1
    params: SystemParamsModel = Field(default_factory=SystemParamsModel)
    profile: DegreeProfileModel = Field(default_factory=DegreeProfileModel)
    sim: SimOverrides = Field(default_factory=SimOverrides)
    sweep: SweepModel = Field(default_factory=SweepModel)
    seeds: list[int] = Field(default_factory=lambda: list(range(8)), min_length=1)
    output_dir: str | None = None
    workers: int = Field(1, ge=1)
    tol: float = Field(1e-9, gt=0)
    search_tol: float = Field(1e-6, gt=0)
    root_tol: float = Field(1e-4, gt=0)
    i_max: int = Field(16, ge=1)
    region_selection: RegionSelection = RegionSelection.HIGHEST

    @model_validator(mode="after")
    def _check(self) -> "RunConfigModel":
        lam = self.params.lam
        loads = self.sweep.loads + [self.sweep.table_load, self.sweep.workload_load, self.sweep.decay_load]
        too_high = [load for load in loads if load > lam]
        if too_high:
            raise ValueError(f"collaborative loads {too_high} exceed lambda={lam}")
        return self

    def to_run_config(self) -> RunConfig:
        return RunConfig(
            experiment=self.experiment,
            params=self.params.to_params(),
            profile=self.profile.to_profile(),
            sim=self.sim.to_settings(),
            sweep=self.sweep.to_spec(),
            seeds=list(self.seeds),
            output_dir=self.output_dir or default_output_dir(),
            workers=self.workers,
            tol=self.tol,
            search_tol=self.search_tol,
            root_tol=self.root_tol,
            i_max=self.i_max,
            region_selection=self.region_selection,
        )


# ---------------------------------------------------------------------------
# Loading and merging
# ---------------------------------------------------------------------------

def default_config() -> RunConfig:
    """The evaluation configuration: λ=0.9, μ=1, γ=5, B/r=1.6, uniform degrees 6..9."""
    return RunConfigModel().to_run_config()


def _line_of(key: str, text: str) -> int | None:
    needle = f'"{key}"'
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def format_validation_error(exc: ValidationError, text: str | None = None) -> list[str]:
    """One ``field: message`` line per error, prefixed with the line number when found."""
    problems = []
    for err in exc.errors():
        loc = ".".join(str(part) for part in err["loc"]) or "<root>"
        line = None
        if text is not None:
            keys = [part for part in err["loc"] if isinstance(part, str)]
            line = _line_of(keys[-1], text) if keys else None
        prefix = f"line {line}: " if line is not None else ""
        problems.append(f"{prefix}{loc}: {err['msg']}")
    return problems


def config_from_dict(data: dict[str, Any], text: str | None = None) -> RunConfig:
    """Validate a parsed config document; ConfigurationError lists every problem."""
    try:
        return RunConfigModel.model_validate(data).to_run_config()
    except ValidationError as e:
        raise ConfigurationError(format_validation_error(e, text)) from e


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError([f"{path}: cannot read config ({e.strerror or e})"]) from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError([f"{path}: line {e.lineno} column {e.colno}: {e.msg}"]) from e
    if not isinstance(data, dict):
        raise ConfigurationError([f"{path}: top level must be a JSON object"])
    return config_from_dict(data, text)


def apply_overrides(
    config: RunConfig,
    *,
    experiment: str | None = None,
    seed: int | None = None,
    workers: int | None = None,
    output_dir: str | None = None,
) -> RunConfig:
    """Overlay CLI flags on a loaded config.

    ``seed`` shifts the replication seeds to seed, seed+1, ... keeping their count.
    """
    problems = []
    changes: dict[str, Any] = {}
    if experiment is not None:
        if experiment not in Experiment.names():
            problems.append(f"experiment: unknown name {experiment!r}; valid: {', '.join(Experiment.names())}")
        else:
            changes["experiment"] = Experiment(experiment)
    if seed is not None:
        changes["seeds"] = list(range(seed, seed + len(config.seeds)))
    if workers is not None:
        if workers < 1:
            problems.append(f"workers: must be >= 1, got {workers}")
        else:
            changes["workers"] = workers
    if output_dir is not None:
        changes["output_dir"] = output_dir
    if problems:
        raise ConfigurationError(problems)
    return replace(config, **changes)
