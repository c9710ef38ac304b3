"""Discrete-event simulation of N users collaborating by power-of-two choices.

Each user generates tasks at rate λ. A task is offloaded with probability x
(it leaves immediately); otherwise its generator polls one uniformly chosen
current neighbor and the task joins the strictly shorter of the two queues,
with a fair coin on ties. Users without neighbors keep their own tasks. Every
nonempty queue serves at rate μ. In dynamic mode the whole graph is rebuilt at
exponential times.

Event queue entries are ``(time, seq, kind, user)``; ``seq`` keeps ordering
deterministic for equal times.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import replace

import numpy as np

from collaboration.dispatch import run_parallel
from collaboration.graph import (
    build_configuration_graph,
    build_dynamic_model,
    component_count,
    regenerate_dynamic_graph,
)
from collaboration.meanfield import integrate, stationary_point
from collaboration.models import (
    DegreeProfile,
    GraphMode,
    InfeasibleError,
    InvalidArgumentError,
    MeanFieldState,
    SimConfig,
    SimResult,
    SimSnapshot,
)

logger = logging.getLogger(__name__)

_ARRIVAL = 0
_SERVICE = 1
_REGENERATE = 2

_BLOCK = 1 << 16


class _RandomStream:
    """Block-buffered uniforms and unit exponentials drawn from one generator."""

    def __init__(self, rng: np.random.Generator, block: int = _BLOCK):
        self.rng = rng
        self.block = block
        self._u: list[float] = []
        self._e: list[float] = []

    def uniform(self) -> float:
        if not self._u:
            self._u = self.rng.random(self.block).tolist()
            self._u.reverse()
        return self._u.pop()

    def exponential(self, rate: float) -> float:
        if not self._e:
            self._e = self.rng.standard_exponential(self.block).tolist()
            self._e.reverse()
        return self._e.pop() / rate


def simulate(config: SimConfig) -> SimResult:
    """Run one replication and return snapshots plus conservation counters."""
    warnings = config.validate()
    for w in warnings:
        logger.warning("Simulation n=%d seed=%d: %s", config.n_users, config.seed, w)

    rng = np.random.default_rng(config.seed)
    n = config.n_users

    model = None
    if config.mode == GraphMode.STATIC:
        graph = build_configuration_graph(n, config.profile, rng)
        if min(graph.degrees) < 1:
            raise InvalidArgumentError(
                f"static graph has {sum(d == 0 for d in graph.degrees)} users without neighbors"
            )
        class_keys = graph.degrees
    else:
        model = build_dynamic_model(n, config.profile, rng, config.regeneration_rate)
        graph = model.current
        class_keys = model.expected_degrees

    classes = tuple(sorted(set(class_keys)))
    class_index = {k: c for c, k in enumerate(classes)}
    user_class = [class_index[k] for k in class_keys]
    class_sizes = tuple(int(np.sum(np.asarray(class_keys) == k)) for k in classes)
    i_max = config.i_max
    # tail[c][i] = users of class c holding at least i tasks, for 1 <= i <= i_max
    tail = [[0] * (i_max + 1) for _ in classes]
    queues = [0] * n
    adjacency = graph.adjacency

    stream = _RandomStream(rng)
    lam, mu, x = config.lam, config.mu, config.x
    heap: list[tuple[float, int, int, int]] = []
    seq = 0

    if lam > 0:
        for u in range(n):
            heap.append((stream.exponential(lam), seq, _ARRIVAL, u))
            seq += 1
    if model is not None:
        heap.append((stream.exponential(config.regeneration_rate), seq, _REGENERATE, -1))
        seq += 1
    heapq.heapify(heap)

    result = SimResult(config=config, warnings=list(warnings))
    result.component_counts.append(component_count(graph))
    sample_times = np.arange(0.0, config.t_end + 1e-12, config.sample_every)
    next_sample = 0

    def record(t: float) -> None:
        s_hat = np.zeros((len(classes), i_max + 1))
        for c, size in enumerate(class_sizes):
            s_hat[c, 0] = 1.0
            s_hat[c, 1:] = np.asarray(tail[c][1:], dtype=float) / size
        result.snapshots.append(SimSnapshot(
            time=float(t),
            classes=classes,
            class_sizes=class_sizes,
            s_hat=s_hat,
            offload_count=result.offloaded,
        ))

    while heap:
        t, _, kind, u = heapq.heappop(heap)
        if t > config.t_end:
            break
        while next_sample < len(sample_times) and sample_times[next_sample] <= t:
            record(sample_times[next_sample])
            next_sample += 1
        result.events += 1

        if kind == _ARRIVAL:
            result.generated += 1
            heapq.heappush(heap, (t + stream.exponential(lam), seq, _ARRIVAL, u))
            seq += 1
            if stream.uniform() < x:
                result.offloaded += 1
                continue
            target = u
            neighbors = adjacency[u]
            if neighbors:
                v = neighbors[int(stream.uniform() * len(neighbors))]
                if queues[v] < queues[u] or (queues[v] == queues[u] and stream.uniform() < 0.5):
                    target = v
            queues[target] += 1
            length = queues[target]
            if length <= i_max:
                tail[user_class[target]][length] += 1
            if length == 1:
                heapq.heappush(heap, (t + stream.exponential(mu), seq, _SERVICE, target))
                seq += 1

        elif kind == _SERVICE:
            length = queues[u]
            if length <= i_max:
                tail[user_class[u]][length] -= 1
            queues[u] = length - 1
            result.completed += 1
            if length > 1:
                heapq.heappush(heap, (t + stream.exponential(mu), seq, _SERVICE, u))
                seq += 1

        else:
            graph = regenerate_dynamic_graph(model, rng)
            adjacency = graph.adjacency
            result.regenerations += 1
            heapq.heappush(heap, (t + stream.exponential(config.regeneration_rate), seq, _REGENERATE, -1))
            seq += 1

    while next_sample < len(sample_times):
        record(sample_times[next_sample])
        next_sample += 1

    result.in_queue = sum(queues)
    if model is not None:
        result.component_counts.append(component_count(graph))
    if not result.conserved:
        result.warnings.append("task conservation violated")
        logger.warning("Task conservation violated: %s", _counters(result))
    logger.info(
        "Simulation %s n=%d seed=%d done: %d events, %s",
        config.mode.value, n, config.seed, result.events, _counters(result),
    )
    return result


def _counters(result: SimResult) -> str:
    return (
        f"generated={result.generated} offloaded={result.offloaded} "
        f"completed={result.completed} in_queue={result.in_queue}"
    )


def run_simulation(config: SimConfig) -> list[SimSnapshot]:
    """Snapshots of one replication."""
    return simulate(config).snapshots


def run_replications(configs: list[SimConfig], workers: int = 1) -> list[SimResult]:
    """Independent replications, possibly in worker processes, in input order."""
    return run_parallel(simulate, configs, workers)


def seed_average(results: list[SimResult], k: int, i: int) -> float:
    """Late-window average of s_hat[k, i], averaged over replications."""
    return float(np.mean([r.late_window_average(k, i) for r in results]))


# ---------------------------------------------------------------------------
# Convergence study
# ---------------------------------------------------------------------------

def convergence_study(
    base_config: SimConfig,
    sizes: list[int],
    seeds: list[int],
    workers: int = 1,
    tol: float = 1e-9,
) -> dict[int, dict]:
    """Per-size trajectories of s_hat[k_min, 1] against the mean-field solution.

    For each size the report holds ``times``, the seed-averaged ``mean`` series,
    the per-seed ``series``, the mean-field ``theory`` trajectory from the empty
    state, and seed-averaged ``late_variance``, ``late_deviation`` (late-window
    mean vs the stationary value) and ``sup_deviation`` (largest gap to the
    mean-field trajectory over the horizon).
    """
    if not sizes:
        raise InvalidArgumentError("sizes must be nonempty")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InvalidArgumentError(f"sizes must be strictly ascending, got {sizes}")
    if not seeds:
        raise InvalidArgumentError("seeds must be nonempty")

    profile = base_config.profile
    k_min = profile.k_min
    sp = stationary_point(profile, base_config.lam, base_config.mu, base_config.x_c, tol)
    steady = float(sp.s_star.s[0, 1])
    trajectory = integrate(
        MeanFieldState.empty(profile.n_classes, sp.s_star.i_max),
        profile, base_config.lam, base_config.mu, base_config.x_c,
        base_config.t_end, sample_every=base_config.sample_every,
    )
    theory_times = trajectory.times
    theory = trajectory.series(0, 1)

    configs = [replace(base_config, n_users=n, seed=seed) for n in sizes for seed in seeds]
    results = run_replications(configs, workers)

    report: dict[int, dict] = {}
    for j, n in enumerate(sizes):
        runs = results[j * len(seeds):(j + 1) * len(seeds)]
        series = []
        for r in runs:
            times, values = r.series(k_min, 1)
            series.append(values)
        series = np.asarray(series)
        reference = np.interp(times, theory_times, theory)
        report[n] = {
            "results": runs,
            "times": times,
            "series": series,
            "mean": np.nanmean(series, axis=0),
            "theory": reference,
            "stationary": steady,
            "late_variance": float(np.mean([r.late_window_variance(k_min, 1) for r in runs])),
            "late_deviation": float(np.mean([abs(r.late_window_average(k_min, 1) - steady) for r in runs])),
            "sup_deviation": float(np.mean(np.nanmax(np.abs(series - reference[None, :]), axis=1))),
        }
        logger.info(
            "Convergence n=%d: late variance %.3e, late deviation %.4f, sup deviation %.4f",
            n, report[n]["late_variance"], report[n]["late_deviation"], report[n]["sup_deviation"],
        )
    return report


# ---------------------------------------------------------------------------
# Workload baseline
# ---------------------------------------------------------------------------

def mm1_mean_workload(lam: float, mu: float) -> float:
    """Mean number in system of an M/M/1 queue, ρ/(1-ρ)."""
    if not mu > 0 or lam < 0:
        raise InvalidArgumentError(f"rates must satisfy lambda >= 0 and mu > 0, got {lam}, {mu}")
    if lam >= mu:
        raise InfeasibleError("M/M/1 queue is unstable", {"lambda": lam, "mu": mu})
    rho = lam / mu
    return rho / (1.0 - rho)


def workload_reduction(
    profile: DegreeProfile, lam: float, mu: float, x_c: float, tol: float = 1e-9
) -> float:
    """1 − collaborative mean workload / M/M/1 workload at the same load x_cλ."""
    baseline = mm1_mean_workload(x_c * lam, mu)
    if baseline == 0.0:
        return 0.0
    sp = stationary_point(profile, lam, mu, x_c, tol)
    return 1.0 - sp.mean_workload / baseline


def largest_degree_workload(
    profile: DegreeProfile, lam: float, mu: float, x_c: float, tol: float = 1e-9
) -> float:
    """Mean workload of the largest-degree class, Σ_{i≥1} s*[k_max, i]."""
    sp = stationary_point(profile, lam, mu, x_c, tol)
    return float(np.sum(sp.s_star.s[-1, 1:]))


def late_window_average(
    snapshots: list[SimSnapshot], t_end: float, fraction: float = 0.25
) -> dict[int, np.ndarray]:
    """Per-class time average of the tail vector over the last ``fraction`` of [0, t_end]."""
    start = t_end * (1.0 - fraction)
    window = [snap for snap in snapshots if snap.time >= start]
    sums: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    for snap in window:
        for c, k in enumerate(snap.classes):
            sums[k] = sums.get(k, 0.0) + snap.s_hat[c]
            counts[k] = counts.get(k, 0) + 1
    return {k: sums[k] / counts[k] for k in sorted(sums)}
