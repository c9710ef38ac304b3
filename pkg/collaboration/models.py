"""Shared data models for the D2D collaboration toolkit.

All models serialize to/from JSON. Numeric state (tail matrices, traces) is held
as numpy arrays and flattened to nested lists on the way out.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np


# ---------------------------------------------------------------------------
# Enums
# ---------------------------------------------------------------------------

class GraphMode(str, Enum):
    """How the collaboration graph evolves during a simulation."""
    STATIC = "static"
    DYNAMIC = "dynamic"


class PricingPolicy(str, Enum):
    """Leader pricing policies compared over a slot horizon."""
    OPTIMAL = "optimal"
    ADAPTED = "adapted"
    CONSTANT = "constant"


class RegionSelection(str, Enum):
    """Which component of a two-piece feasible region to expose as [x_l, x_u]."""
    HIGHEST = "highest"
    LOWEST = "lowest"


class Experiment(str, Enum):
    """Named experiments runnable from the CLI."""
    STATIONARY_SWEEP = "stationary_sweep"
    TABLE1 = "table1"
    CONVERGENCE_STUDY = "convergence_study"
    WORKLOAD_COMPARISON = "workload_comparison"
    FEASIBILITY = "feasibility"
    PRICING_SWEEP = "pricing_sweep"
    QUEUE_TRACE = "queue_trace"
    PROPERTY_SUITE = "property_suite"

    @classmethod
    def names(cls) -> list[str]:
        return [e.value for e in cls]


# ---------------------------------------------------------------------------
# JSON serialization helpers
# ---------------------------------------------------------------------------

def _serialize(obj: Any) -> Any:
    """Convert dataclass trees (with numpy leaves) to JSON-safe values."""
    if isinstance(obj, datetime):
        return obj.isoformat()
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "__dataclass_fields__"):
        return {k: _serialize(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {k: _serialize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_serialize(v) for v in obj]
    return obj


class JSONSerializable:
    """Mixin for dataclasses that need JSON round-trip."""

    def to_dict(self) -> dict:
        return _serialize(self)

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "JSONSerializable":
        """Override in subclasses that have nested model fields."""
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})

    @classmethod
    def from_json(cls, text: str) -> "JSONSerializable":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class CollaborationError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidArgumentError(CollaborationError, ValueError):
    """An operation was called outside its precondition."""


class EmptyTableError(CollaborationError, ValueError):
    """A tabulation had nothing to count (e.g. a graph with no edges)."""


class InfeasibleError(CollaborationError):
    """A stability condition or constraint set cannot be satisfied.

    Attributes:
        report: Structured diagnostics (bounds, intervals, caps) when available.
    """

    def __init__(self, message: str, report: dict | None = None):
        self.report = report or {}
        lines = [message]
        for key, value in self.report.items():
            lines.append(f"  {key}: {value}")
        super().__init__("\n".join(lines))


class NumericalFailureError(CollaborationError):
    """An iterative or integration routine failed to produce a valid state.

    Attributes:
        iterations: Iterations or steps performed before giving up.
        residual: Last observed residual / violation size.
    """

    def __init__(self, message: str, iterations: int = 0, residual: float = math.nan):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")


class ConfigurationError(CollaborationError):
    """A run configuration or parameter set is unusable.

    Attributes:
        problems: One human-readable line per offending field.
    """

    def __init__(self, problems: list[str]):
        self.problems = problems
        lines = ["Configuration is invalid:"]
        for p in problems:
            lines.append(f"  - {p}")
        super().__init__("\n".join(lines))


# ---------------------------------------------------------------------------
# Degree profile & system parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegreeProfile(JSONSerializable):
    """Degree support with its pmf p(k)."""
    support: tuple[int, ...]
    pmf: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(int(k) for k in self.support))
        object.__setattr__(self, "pmf", tuple(float(p) for p in self.pmf))
        problems = self.problems()
        if problems:
            raise InvalidArgumentError("Invalid degree profile: " + "; ".join(problems))

    def problems(self) -> list[str]:
        problems: list[str] = []
        if not self.support:
            problems.append("support is empty")
            return problems
        if len(self.support) != len(self.pmf):
            problems.append(f"support has {len(self.support)} entries but pmf has {len(self.pmf)}")
            return problems
        if any(k < 1 for k in self.support):
            problems.append("degrees must be >= 1")
        if any(b <= a for a, b in zip(self.support, self.support[1:])):
            problems.append("support must be strictly ascending")
        if any(p < 0 or not math.isfinite(p) for p in self.pmf):
            problems.append("pmf entries must be finite and nonnegative")
        elif abs(sum(self.pmf) - 1.0) > 1e-12:
            problems.append(f"pmf sums to {sum(self.pmf)!r}, expected 1")
        return problems

    @classmethod
    def uniform(cls, degrees: list[int] | range) -> "DegreeProfile":
        degrees = sorted(int(k) for k in degrees)
        if not degrees:
            raise InvalidArgumentError("Invalid degree profile: support is empty")
        return cls(tuple(degrees), tuple([1.0 / len(degrees)] * len(degrees)))

    @classmethod
    def homogeneous(cls, degree: int) -> "DegreeProfile":
        return cls((int(degree),), (1.0,))

    @classmethod
    def from_dict(cls, data: dict) -> "DegreeProfile":
        return cls(tuple(data["support"]), tuple(data["pmf"]))

    @property
    def degrees(self) -> np.ndarray:
        return np.asarray(self.support, dtype=float)

    @property
    def probabilities(self) -> np.ndarray:
        return np.asarray(self.pmf, dtype=float)

    @property
    def n_classes(self) -> int:
        return len(self.support)

    @property
    def mean_degree(self) -> float:
        return float(np.dot(self.probabilities, self.degrees))

    @property
    def k_min(self) -> int:
        return self.support[0]

    @property
    def k_max(self) -> int:
        return self.support[-1]

    @property
    def delta1(self) -> float:
        return self.k_max / self.mean_degree

    @property
    def delta2(self) -> float:
        return self.k_min / self.mean_degree

    def neighbor_pmf(self) -> np.ndarray:
        """Degree pmf seen from the end of a random edge, k'p(k')/k̄."""
        return self.degrees * self.probabilities / self.mean_degree

    def index_of(self, k: int) -> int:
        try:
            return self.support.index(int(k))
        except ValueError:
            raise InvalidArgumentError(f"Degree {k} is not in support {list(self.support)}") from None

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n iid degrees from the profile."""
        return rng.choice(np.asarray(self.support, dtype=np.int64), size=n, p=self.probabilities)


def transmission_time(data_size_kb: float, uplink_mbps: float) -> float:
    """Upload time B/r in normalized units (1 unit = 1 s) from KB and Mbps."""
    if uplink_mbps <= 0:
        raise InvalidArgumentError(f"uplink_mbps must be > 0, got {uplink_mbps}")
    return data_size_kb * 8.0 / 1000.0 / uplink_mbps


@dataclass(frozen=True)
class SystemParams(JSONSerializable):
    """Scalar rates, energy coefficients and caps of the offloading system.

    All times are in units of one mean local service time. ``b_over_r`` is the
    upload time B/r of one task; ``gamma`` may be ``math.inf`` (instant server).
    """
    lam: float = 0.9
    mu: float = 1.0
    gamma: float = 5.0
    b_over_r: float = 1.6
    rho_c_m: float = 0.9
    rho_t_m: float = 0.3
    rho_c_s: float = 1.0
    d_bar: float = 1.6
    s_bar: float = 0.06
    x_bar: float = 0.6
    p_u: float = 0.5

    def problems(self) -> list[str]:
        problems: list[str] = []
        if not self.lam >= 0:
            problems.append(f"lambda must be >= 0, got {self.lam}")
        if not self.mu > 0:
            problems.append(f"mu must be > 0, got {self.mu}")
        elif self.lam >= self.mu:
            problems.append(f"lambda ({self.lam}) must be below mu ({self.mu})")
        if not self.gamma > 0:
            problems.append(f"gamma must be > 0, got {self.gamma}")
        if not self.b_over_r >= 0:
            problems.append(f"b_over_r must be >= 0, got {self.b_over_r}")
        for name in ("rho_c_m", "rho_t_m", "rho_c_s"):
            if not getattr(self, name) >= 0:
                problems.append(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("d_bar", "s_bar", "p_u"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0, got {getattr(self, name)}")
        if not self.x_bar >= 0:
            problems.append(f"x_bar must be >= 0, got {self.x_bar}")
        return problems

    def validate(self) -> None:
        problems = self.problems()
        if problems:
            raise InvalidArgumentError("Invalid system parameters: " + "; ".join(problems))

    @property
    def local_cost(self) -> float:
        """Energy cost per locally processed task, ρ_c_m/μ²."""
        return self.rho_c_m / self.mu ** 2

    @property
    def upload_cost(self) -> float:
        """Energy cost per uploaded task, ρ_t_m·B/r."""
        return self.rho_t_m * self.b_over_r

    @property
    def server_cost(self) -> float:
        """Server energy cost per offloaded task, ρ_c_s/γ."""
        return 0.0 if math.isinf(self.gamma) else self.rho_c_s / self.gamma

    @property
    def offload_latency(self) -> float:
        """Upload plus server processing time, B/r + 1/γ."""
        return self.b_over_r + (0.0 if math.isinf(self.gamma) else 1.0 / self.gamma)


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Graph(JSONSerializable):
    """Undirected simple graph as per-user neighbor tuples."""
    n_users: int
    adjacency: tuple[tuple[int, ...], ...]
    degrees: tuple[int, ...]

    def validate(self) -> None:
        """Raise InvalidArgumentError unless the graph is simple and symmetric."""
        if len(self.adjacency) != self.n_users or len(self.degrees) != self.n_users:
            raise InvalidArgumentError("adjacency/degrees length does not match n_users")
        neighbor_sets = [set(nbrs) for nbrs in self.adjacency]
        for u, nbrs in enumerate(self.adjacency):
            if self.degrees[u] != len(nbrs):
                raise InvalidArgumentError(f"user {u}: degree {self.degrees[u]} != {len(nbrs)} neighbors")
            if len(neighbor_sets[u]) != len(nbrs):
                raise InvalidArgumentError(f"user {u} has duplicate edges")
            if u in neighbor_sets[u]:
                raise InvalidArgumentError(f"user {u} has a self-loop")
            for v in nbrs:
                if u not in neighbor_sets[v]:
                    raise InvalidArgumentError(f"edge ({u}, {v}) is not symmetric")

    @property
    def edge_count(self) -> int:
        return sum(self.degrees) // 2

    def edges(self) -> np.ndarray:
        """Undirected edges as an (E, 2) array with u < v."""
        pairs = [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v]
        return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        return cls(
            n_users=data["n_users"],
            adjacency=tuple(tuple(nbrs) for nbrs in data["adjacency"]),
            degrees=tuple(data["degrees"]),
        )


@dataclass(frozen=True)
class DynamicGraphModel(JSONSerializable):
    """Users with fixed expected degrees over a graph that is periodically rebuilt."""
    expected_degrees: tuple[int, ...]
    regeneration_rate: float = 1.0
    current: Graph | None = None

    @property
    def n_users(self) -> int:
        return len(self.expected_degrees)


# ---------------------------------------------------------------------------
# Mean-field state
# ---------------------------------------------------------------------------

@dataclass
class MeanFieldState(JSONSerializable):
    """Tail probabilities s[k, i] for degree class k and queue length i = 0..i_max."""
    s: np.ndarray

    def __post_init__(self):
        self.s = np.array(self.s, dtype=float, ndmin=2)

    @property
    def n_classes(self) -> int:
        return self.s.shape[0]

    @property
    def i_max(self) -> int:
        return self.s.shape[1] - 1

    @classmethod
    def empty(cls, n_classes: int, i_max: int) -> "MeanFieldState":
        s = np.zeros((n_classes, i_max + 1))
        s[:, 0] = 1.0
        return cls(s)

    @classmethod
    def heavy(cls, n_classes: int, i_max: int, depth: int = 3) -> "MeanFieldState":
        """Every user holds exactly ``depth`` tasks."""
        s = np.zeros((n_classes, i_max + 1))
        s[:, : depth + 1] = 1.0
        return cls(s)

    @classmethod
    def random(cls, n_classes: int, i_max: int, rng: np.random.Generator) -> "MeanFieldState":
        """A uniformly scattered valid state: sorted uniforms per class."""
        tails = -np.sort(-rng.random((n_classes, i_max)), axis=1)
        return cls(np.hstack([np.ones((n_classes, 1)), tails]))

    def violations(self) -> float:
        """Largest amount by which the state leaves the valid tail simplex."""
        s = self.s
        worst = max(
            float(np.max(np.abs(s[:, 0] - 1.0))),
            float(np.max(-s)) if s.size else 0.0,
            float(np.max(s - 1.0)) if s.size else 0.0,
        )
        if s.shape[1] > 1:
            worst = max(worst, float(np.max(s[:, 1:] - s[:, :-1])))
        return max(worst, 0.0)

    def validate(self, atol: float = 1e-12) -> None:
        if not np.all(np.isfinite(self.s)):
            raise InvalidArgumentError("state contains non-finite entries")
        worst = self.violations()
        if worst > atol:
            raise InvalidArgumentError(f"state is not a monotone tail matrix (violation {worst:.3e})")

    def dominates(self, other: "MeanFieldState", atol: float = 0.0) -> bool:
        """Entrywise s >= other - atol."""
        return bool(np.all(self.s >= other.s - atol))

    def copy(self) -> "MeanFieldState":
        return MeanFieldState(self.s.copy())

    @classmethod
    def from_dict(cls, data: dict) -> "MeanFieldState":
        return cls(np.asarray(data["s"], dtype=float))


@dataclass
class Drift(JSONSerializable):
    """ds/dt for every (k, i); row i = 0 is identically zero."""
    values: np.ndarray

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass
class Trajectory(JSONSerializable):
    """Sampled states of an ODE integration."""
    times: np.ndarray
    states: list[MeanFieldState] = field(default_factory=list)

    @property
    def final(self) -> MeanFieldState:
        return self.states[-1]

    def series(self, class_index: int, i: int) -> np.ndarray:
        return np.array([st.s[class_index, i] for st in self.states])


@dataclass
class StationaryPoint(JSONSerializable):
    """Zero of the mean-field drift plus its degree-averaged aggregates.

    ``tail[i]`` is Σ_k p(k)s*[k, i]; ``weighted_tail[i]`` is Σ_k p(k)·k·s*[k, i].
    """
    s_star: MeanFieldState
    x_c: float
    lam: float
    mu: float
    tail: np.ndarray
    weighted_tail: np.ndarray
    residual: float = 0.0
    iterations: int = 0

    @property
    def busy(self) -> float:
        return float(self.tail[1]) if self.tail.size > 1 else 0.0

    @property
    def mean_workload(self) -> float:
        """Mean queue length Σ_{i≥1} s_i*."""
        return float(np.sum(self.tail[1:]))

    @property
    def load(self) -> float:
        return self.x_c * self.lam


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

@dataclass
class SimConfig(JSONSerializable):
    """One discrete-event replication."""
    n_users: int
    profile: DegreeProfile
    mode: GraphMode = GraphMode.STATIC
    lam: float = 0.9
    mu: float = 1.0
    x: float = 0.0
    regeneration_rate: float = 1.0
    t_end: float = 200.0
    sample_every: float = 1.0
    seed: int = 0
    i_max: int = 8
    late_fraction: float = 0.25

    def __post_init__(self):
        self.mode = GraphMode(self.mode)

    @property
    def x_c(self) -> float:
        return 1.0 - self.x

    def validate(self) -> list[str]:
        """Raise on hard errors; return soft warnings (instability)."""
        problems: list[str] = []
        if self.n_users < 2:
            problems.append(f"n_users must be >= 2, got {self.n_users}")
        if not 0.0 <= self.x <= 1.0:
            problems.append(f"offload probability x must be in [0, 1], got {self.x}")
        if not self.t_end > 0:
            problems.append(f"t_end must be > 0, got {self.t_end}")
        if not self.sample_every > 0:
            problems.append(f"sample_every must be > 0, got {self.sample_every}")
        if not self.mu > 0 or not self.lam >= 0:
            problems.append(f"rates must satisfy lambda >= 0 and mu > 0, got {self.lam}, {self.mu}")
        if self.i_max < 1:
            problems.append(f"i_max must be >= 1, got {self.i_max}")
        if self.mode == GraphMode.DYNAMIC and not self.regeneration_rate > 0:
            problems.append(f"regeneration_rate must be > 0, got {self.regeneration_rate}")
        if not 0.0 < self.late_fraction <= 1.0:
            problems.append(f"late_fraction must be in (0, 1], got {self.late_fraction}")
        if problems:
            raise InvalidArgumentError("Invalid simulation config: " + "; ".join(problems))

        warnings: list[str] = []
        if self.x_c * self.lam >= self.mu:
            warnings.append(
                f"unstable: collaborative load x_c*lambda={self.x_c * self.lam:.4f} >= mu={self.mu}"
            )
        return warnings

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        data["profile"] = DegreeProfile.from_dict(data["profile"])
        return cls(**data)


@dataclass
class SimSnapshot(JSONSerializable):
    """Empirical tail matrix at one sampling time, grouped by degree class."""
    time: float
    classes: tuple[int, ...]
    class_sizes: tuple[int, ...]
    s_hat: np.ndarray
    offload_count: int = 0

    def value(self, k: int, i: int) -> float:
        return float(self.s_hat[self.classes.index(k), i])


@dataclass
class SimResult(JSONSerializable):
    """Snapshots plus conservation counters and diagnostics of one run."""
    config: SimConfig
    snapshots: list[SimSnapshot] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    generated: int = 0
    offloaded: int = 0
    completed: int = 0
    in_queue: int = 0
    events: int = 0
    regenerations: int = 0
    component_counts: list[int] = field(default_factory=list)

    @property
    def conserved(self) -> bool:
        return self.generated == self.offloaded + self.completed + self.in_queue

    @property
    def classes(self) -> tuple[int, ...]:
        return self.snapshots[0].classes if self.snapshots else ()

    def series(self, k: int, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(times, s_hat[k, i]) over all snapshots; NaN where the class is absent."""
        times = np.array([snap.time for snap in self.snapshots])
        values = np.array([
            snap.value(k, i) if k in snap.classes else math.nan for snap in self.snapshots
        ])
        return times, values

    def late_window_average(self, k: int, i: int, fraction: float | None = None) -> float:
        """Time average of s_hat[k, i] over the last ``fraction`` of the horizon."""
        fraction = self.config.late_fraction if fraction is None else fraction
        times, values = self.series(k, i)
        start = self.config.t_end * (1.0 - fraction)
        window = values[times >= start]
        if window.size == 0 or np.all(np.isnan(window)):
            raise EmptyTableError(f"no samples for class {k} in the late window")
        return float(np.nanmean(window))

    def late_window_variance(self, k: int, i: int, fraction: float | None = None) -> float:
        fraction = self.config.late_fraction if fraction is None else fraction
        times, values = self.series(k, i)
        window = values[times >= self.config.t_end * (1.0 - fraction)]
        return float(np.nanvar(window))


# ---------------------------------------------------------------------------
# Offloading & pricing
# ---------------------------------------------------------------------------

@dataclass
class FeasibleRegion(JSONSerializable):
    """Offloading probabilities meeting both the delay cap and the fairness cap.

    ``fairness_intervals`` is [0, x'_l] ∪ [x'_u, 1] (or [0, 1] when the cap never
    binds, in which case ``x_prime_l``/``x_prime_u`` are None).
    """
    delay_interval: tuple[float, float]
    fairness_intervals: list[tuple[float, float]]
    intersection: list[tuple[float, float]]
    x_l: float
    x_u: float
    x_prime_l: float | None = None
    x_prime_u: float | None = None
    warnings: list[str] = field(default_factory=list)

    def report(self) -> dict:
        return {
            "x_l_star": self.delay_interval[0],
            "x_u_star": self.delay_interval[1],
            "x_prime_l": self.x_prime_l,
            "x_prime_u": self.x_prime_u,
            "x_l": self.x_l,
            "x_u": self.x_u,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeasibleRegion":
        data = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        data["delay_interval"] = tuple(data["delay_interval"])
        data["fairness_intervals"] = [tuple(iv) for iv in data["fairness_intervals"]]
        data["intersection"] = [tuple(iv) for iv in data["intersection"]]
        return cls(**data)


@dataclass
class FairnessRegion(JSONSerializable):
    """Offloading probabilities whose busy-probability gap stays within the cap.

    ``x_prime_l`` is None when the left piece [0, x'_l] is empty, ``x_prime_u``
    when the right piece [x'_u, 1] is; both are None when the cap never binds.
    """
    intervals: list[tuple[float, float]]
    x_prime_l: float | None = None
    x_prime_u: float | None = None
    warnings: list[str] = field(default_factory=list)


@dataclass
class VirtualQueue:
    """Backlog enforcing the long-term overload cap."""
    X: float = 0.0

    def __post_init__(self):
        if self.X < 0:
            raise InvalidArgumentError(f"virtual queue backlog must be >= 0, got {self.X}")


@dataclass
class SlotTrace(JSONSerializable):
    """Per-slot record of one pricing horizon.

    ``backlogs`` has T+1 entries: X[0] .. X[T]; all other arrays have T.
    """
    policy: PricingPolicy
    V: float
    prices: np.ndarray
    offloads: np.ndarray
    backlogs: np.ndarray
    utilities: np.ndarray
    costs: np.ndarray

    @property
    def T(self) -> int:
        return len(self.prices)

    @property
    def avg_utility(self) -> float:
        return float(np.mean(self.utilities))

    @property
    def avg_cost(self) -> float:
        return float(np.mean(self.costs))

    @property
    def max_backlog(self) -> float:
        return float(np.max(self.backlogs))


@dataclass
class CheckResult(JSONSerializable):
    """Single numerical property check."""
    check_name: str = ""
    passed: bool = True
    message: str = ""
    value: float | None = None
    bound: float | None = None


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

@dataclass
class SimSettings(JSONSerializable):
    """Simulator defaults used by the experiments."""
    n_static: int = 800
    n_dynamic: int = 1000
    t_end: float = 200.0
    sample_every: float = 1.0
    regeneration_rate: float = 1.0
    late_fraction: float = 0.25
    i_max: int = 8


@dataclass
class SweepSpec(JSONSerializable):
    """Grids swept by the experiments."""
    loads: list[float] = field(default_factory=lambda: [round(0.1 * j, 1) for j in range(1, 10)])
    table_load: float = 0.7
    workload_load: float = 0.9
    v_values: list[float] = field(default_factory=lambda: [5.0 * j for j in range(1, 21)])
    trace_v: float = 20.0
    horizon: int = 100
    static_sizes: list[int] = field(default_factory=lambda: [100, 300, 800])
    dynamic_sizes: list[int] = field(default_factory=lambda: [100, 300, 1000])
    simulate: bool = True
    grid_points: int = 101
    lipschitz_trials: int = 100
    dominance_pairs: int = 20
    decay_trajectories: int = 10
    decay_load: float = 0.3


@dataclass
class RunConfig(JSONSerializable):
    """Everything one CLI run needs; echoed into the run metadata."""
    experiment: Experiment = Experiment.TABLE1
    params: SystemParams = field(default_factory=SystemParams)
    profile: DegreeProfile = field(default_factory=lambda: DegreeProfile.uniform([6, 7, 8, 9]))
    sim: SimSettings = field(default_factory=SimSettings)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    seeds: list[int] = field(default_factory=lambda: list(range(8)))
    output_dir: str = "results"
    workers: int = 1
    tol: float = 1e-9
    search_tol: float = 1e-6
    root_tol: float = 1e-4
    i_max: int = 16
    region_selection: RegionSelection = RegionSelection.HIGHEST

    def __post_init__(self):
        self.experiment = Experiment(self.experiment)
        self.region_selection = RegionSelection(self.region_selection)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        if "params" in data:
            data["params"] = SystemParams.from_dict(data["params"])
        if "profile" in data:
            data["profile"] = DegreeProfile.from_dict(data["profile"])
        if "sim" in data:
            data["sim"] = SimSettings.from_dict(data["sim"])
        if "sweep" in data:
            data["sweep"] = SweepSpec.from_dict(data["sweep"])
        return cls(**data)
