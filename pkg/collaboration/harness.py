"""Experiment harness: runs one named experiment and writes its artifacts.

Every experiment receives a ``RunContext`` that owns the run directory and
collects artifacts, warnings and summary values. ``run`` maps failures to
exit codes (1 for infeasible or numerical failures, 2 for configuration
problems) and always writes metadata.json plus a run-index entry.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from collaboration.dispatch import run_parallel
from collaboration.meanfield import (
    class_workload,
    stationary_point,
    stationary_point_ode,
    truncation_depth,
)
from collaboration.models import (
    CollaborationError,
    ConfigurationError,
    Experiment,
    GraphMode,
    InfeasibleError,
    InvalidArgumentError,
    NumericalFailureError,
    PricingPolicy,
    RunConfig,
    SimConfig,
    SimResult,
    StationaryPoint,
)
from collaboration.offload import (
    StationaryCache,
    class_busy_probabilities,
    delay_components,
    feasible_region,
)
from collaboration.pricing import (
    optimal_static_utility,
    queue_bound,
    run_horizon,
    sweep_summary,
    trace_rows,
    utility_gap_bound,
)
from collaboration.properties import run_property_suite
from collaboration.results import (
    aggregate_rows,
    append_run_index,
    run_directory,
    stationary_rows,
    write_csv,
    write_metadata,
    write_plot_series,
    write_snapshots,
)
from collaboration.simulator import (
    convergence_study,
    mm1_mean_workload,
    run_replications,
    seed_average,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


@dataclass
class RunOutcome:
    """Exit status and the files one run produced."""
    exit_code: int
    run_dir: Path | None
    artifacts: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    message: str = ""


class RunContext:
    """Per-run state shared by the experiment functions."""

    def __init__(self, config: RunConfig, run_dir: Path):
        self.config = config
        self.run_dir = run_dir
        self.artifacts: list[str] = []
        self.warnings: list[str] = []
        self.summary: dict = {}
        self.exit_code = EXIT_OK

    @property
    def params(self):
        return self.config.params

    @property
    def profile(self):
        return self.config.profile

    def warn(self, message: str) -> None:
        if message not in self.warnings:
            self.warnings.append(message)
            logger.warning(message)

    def csv(self, name: str, rows: list[dict], columns: list[str] | None = None) -> None:
        path = write_csv(self.run_dir / f"{name}.csv", rows, columns)
        self.artifacts.append(str(path.relative_to(self.run_dir)))

    def plot(self, name: str, x, y, x_label: str = "x", y_label: str = "y") -> None:
        path = write_plot_series(self.run_dir, name, x, y, x_label, y_label)
        self.artifacts.append(str(path.relative_to(self.run_dir)))

    def snapshots(self, name: str, results: list[SimResult]) -> None:
        for path in write_snapshots(self.run_dir, name, results):
            self.artifacts.append(path.name)

    def json(self, name: str, payload: dict) -> None:
        path = self.run_dir / f"{name}.json"
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        self.artifacts.append(path.name)

    def x_c(self, load: float) -> float:
        """Collaborative fraction x_c giving collaborative load x_cλ = ``load``."""
        lam = self.params.lam
        if lam <= 0 or not 0.0 < load <= lam:
            raise ConfigurationError([f"collaborative load {load} is not reachable with lambda={lam}"])
        return load / lam

    def depth(self, x_c: float) -> int:
        return max(self.config.i_max, truncation_depth(self.profile, self.params.lam, self.params.mu, x_c))

    def sim_configs(self, mode: GraphMode, n_users: int, x_c: float) -> list[SimConfig]:
        sim = self.config.sim
        return [
            SimConfig(
                n_users=n_users,
                profile=self.profile,
                mode=mode,
                lam=self.params.lam,
                mu=self.params.mu,
                x=1.0 - x_c,
                regeneration_rate=sim.regeneration_rate,
                t_end=sim.t_end,
                sample_every=sim.sample_every,
                seed=seed,
                i_max=sim.i_max,
                late_fraction=sim.late_fraction,
            )
            for seed in self.config.seeds
        ]


def _solve_job(job: tuple) -> StationaryPoint:
    profile, lam, mu, x_c, tol, i_max = job
    return stationary_point(profile, lam, mu, x_c, tol, i_max=i_max)


def _solve_loads(ctx: RunContext, loads: list[float]) -> list[StationaryPoint]:
    p = ctx.params
    jobs = []
    for load in loads:
        x_c = ctx.x_c(load)
        jobs.append((ctx.profile, p.lam, p.mu, x_c, ctx.config.tol, ctx.depth(x_c)))
    return run_parallel(_solve_job, jobs, ctx.config.workers)


# ---------------------------------------------------------------------------
# Mean-field experiments
# ---------------------------------------------------------------------------

def run_stationary_sweep(ctx: RunContext) -> None:
    """Stationary tails per degree class across collaborative loads."""
    loads = list(ctx.config.sweep.loads)
    points = _solve_loads(ctx, loads)
    rows = []
    for load, sp in zip(loads, points):
        for c, k in enumerate(ctx.profile.support):
            rows.append({
                "load": load,
                "k": k,
                "s1": float(sp.s_star.s[c, 1]),
                "s2": float(sp.s_star.s[c, 2]) if sp.s_star.i_max >= 2 else 0.0,
                "workload": float(class_workload(sp)[c]),
            })
    ctx.csv("stationary_sweep", rows)
    ctx.csv("stationary_aggregates", [
        {"load": load, "busy": sp.busy, "mean_workload": sp.mean_workload,
         "residual": sp.residual, "iterations": sp.iterations}
        for load, sp in zip(loads, points)
    ])
    for c, k in enumerate(ctx.profile.support):
        ctx.plot(f"s1_k{k}", loads, [sp.s_star.s[c, 1] for sp in points], "load", f"s1_k{k}")
        ctx.plot(f"s2_k{k}", loads, [sp.s_star.s[c, 2] for sp in points], "load", f"s2_k{k}")

    if ctx.config.sweep.simulate:
        sim_rows = []
        for load in loads:
            results = run_replications(
                ctx.sim_configs(GraphMode.STATIC, ctx.config.sim.n_static, ctx.x_c(load)),
                ctx.config.workers,
            )
            for r in results:
                for w in r.warnings:
                    ctx.warn(w)
            for k in ctx.profile.support:
                sim_rows.append({"load": load, "k": k, "s1_sim": seed_average(results, k, 1)})
        ctx.csv("stationary_sweep_sim", sim_rows)
        for k in ctx.profile.support:
            ctx.plot(
                f"s1_k{k}_sim", loads, [r["s1_sim"] for r in sim_rows if r["k"] == k], "load", f"s1_k{k}_sim"
            )


def run_table1(ctx: RunContext) -> None:
    """Theory against simulation for s*[k, 1] and s*[k, 2] at the table load."""
    p = ctx.params
    load = ctx.config.sweep.table_load
    x_c = ctx.x_c(load)
    sp = stationary_point(ctx.profile, p.lam, p.mu, x_c, ctx.config.tol, i_max=ctx.depth(x_c))
    ode = stationary_point_ode(ctx.profile, p.lam, p.mu, x_c, i_max=sp.s_star.i_max)
    ctx.csv("stationary_point", stationary_rows(sp, ctx.profile))
    ctx.csv("stationary_aggregates", aggregate_rows(sp))

    sims: dict[str, list] = {}
    if ctx.config.sweep.simulate:
        sim = ctx.config.sim
        for mode, n in ((GraphMode.STATIC, sim.n_static), (GraphMode.DYNAMIC, sim.n_dynamic)):
            sims[mode.value] = run_replications(ctx.sim_configs(mode, n, x_c), ctx.config.workers)
            ctx.snapshots(f"snapshots_{mode.value}", sims[mode.value])
            for r in sims[mode.value]:
                for w in r.warnings:
                    ctx.warn(w)

    rows = []
    for c, k in enumerate(ctx.profile.support):
        for i in (1, 2):
            theory = float(sp.s_star.s[c, i])
            row = {"k": k, "i": i, "theory": theory, "ode": float(ode.s_star.s[c, i])}
            errors = []
            for mode in (GraphMode.STATIC, GraphMode.DYNAMIC):
                if mode.value in sims:
                    value = seed_average(sims[mode.value], k, i)
                    row[f"sim_{mode.value}"] = value
                    errors.append(abs(value - theory))
                else:
                    row[f"sim_{mode.value}"] = None
            row["max_error"] = max(errors) if errors else None
            rows.append(row)
    ctx.csv("table1", rows, ["k", "i", "theory", "ode", "sim_static", "sim_dynamic", "max_error"])
    ctx.summary["table1_max_error"] = max(
        (r["max_error"] for r in rows if r["max_error"] is not None), default=None
    )


def run_convergence_study(ctx: RunContext) -> None:
    """Late-window error of the smallest-degree class against system size."""
    sim, sweep = ctx.config.sim, ctx.config.sweep
    x_c = ctx.x_c(sweep.table_load)
    rows = []
    for mode, sizes, n_default in (
        (GraphMode.STATIC, sweep.static_sizes, sim.n_static),
        (GraphMode.DYNAMIC, sweep.dynamic_sizes, sim.n_dynamic),
    ):
        base = ctx.sim_configs(mode, n_default, x_c)[0]
        report = convergence_study(base, list(sizes), list(ctx.config.seeds), ctx.config.workers, ctx.config.tol)
        for n, entry in report.items():
            ctx.snapshots(f"snapshots_{mode.value}_n{n}", entry["results"])
            rows.append({
                "mode": mode.value,
                "n": n,
                "stationary": entry["stationary"],
                "late_variance": entry["late_variance"],
                "late_deviation": entry["late_deviation"],
                "sup_deviation": entry["sup_deviation"],
            })
            ctx.plot(f"{mode.value}_n{n}_mean", entry["times"], entry["mean"], "t", "s_hat")
        first = report[sizes[0]]
        ctx.plot(f"{mode.value}_theory", first["times"], first["theory"], "t", "s")
        deviations = [report[n]["late_deviation"] for n in sizes]
        if deviations[-1] >= deviations[0]:
            ctx.warn(
                f"{mode.value}: late-window deviation did not shrink from n={sizes[0]} "
                f"({deviations[0]:.4f}) to n={sizes[-1]} ({deviations[-1]:.4f})"
            )
    ctx.csv("convergence", rows)


def run_workload_comparison(ctx: RunContext) -> None:
    """Collaborative workload against an isolated M/M/1 user at the same load."""
    sweep = ctx.config.sweep
    loads = sorted(set(sweep.loads) | {sweep.workload_load})
    points = _solve_loads(ctx, loads)
    rows = []
    for load, sp in zip(loads, points):
        baseline = mm1_mean_workload(load, ctx.params.mu)
        rows.append({
            "load": load,
            "mean_workload": sp.mean_workload,
            "largest_degree_workload": float(class_workload(sp)[-1]),
            "mm1_workload": baseline,
            "reduction": 1.0 - sp.mean_workload / baseline if baseline > 0 else 0.0,
        })
    ctx.csv("workload_comparison", rows)
    for column in ("mean_workload", "largest_degree_workload", "mm1_workload"):
        ctx.plot(column, loads, [r[column] for r in rows], "load", column)
    headline = next(r for r in rows if r["load"] == sweep.workload_load)
    ctx.summary["workload_reduction"] = headline["reduction"]
    logger.info("Workload reduced by %.1f%% at load %.2f", 100 * headline["reduction"], sweep.workload_load)


# ---------------------------------------------------------------------------
# Offloading and pricing experiments
# ---------------------------------------------------------------------------

def _region(ctx: RunContext):
    region = feasible_region(
        ctx.params, ctx.profile, ctx.config.root_tol,
        selection=ctx.config.region_selection,
        search_tol=ctx.config.search_tol,
        grid_points=ctx.config.sweep.grid_points,
        i_max=ctx.config.i_max,
    )
    for w in region.warnings:
        ctx.warn(w)
    ctx.json("region", region.report())
    return region


def run_feasibility(ctx: RunContext) -> None:
    """Delay and fairness curves over x plus the resulting feasible region."""
    region = _region(ctx)
    cache = StationaryCache(ctx.params, ctx.profile, ctx.config.search_tol, ctx.config.i_max)
    xs = np.linspace(0.0, 1.0, ctx.config.sweep.grid_points)
    rows = []
    for x in xs:
        try:
            d_o, d_q = delay_components(float(x), ctx.params, ctx.profile, cache=cache)
            busy = class_busy_probabilities(float(x), ctx.params, ctx.profile, cache=cache)
            gap = float(busy[-1] - busy[0])
        except InfeasibleError:
            d_o, d_q, gap = float(x) * ctx.params.offload_latency, math.inf, math.inf
        rows.append({"x": float(x), "d_o": d_o, "d_q": d_q, "delay": d_o + d_q, "gap": gap})
    ctx.csv("feasibility_grid", rows)
    for column in ("delay", "d_o", "d_q", "gap"):
        ctx.plot(column, xs, [r[column] for r in rows], "x", column)
    ctx.summary["region"] = region.report()


def run_pricing_sweep(ctx: RunContext) -> None:
    """Time-average utility, cost and backlog of each policy across V."""
    region = _region(ctx)
    sweep = ctx.config.sweep
    rows = sweep_summary(sweep.v_values, region, ctx.params, sweep.horizon, list(ctx.config.seeds))
    u_star = optimal_static_utility(region, ctx.params)
    for row in rows:
        row["u_star"] = u_star
        row["utility_lower_bound"] = utility_gap_bound(row["V"], region, ctx.params)
    ctx.csv("pricing_sweep", rows)
    for policy in PricingPolicy:
        mine = [r for r in rows if r["policy"] == policy.value]
        vs = [r["V"] for r in mine]
        ctx.plot(f"utility_{policy.value}", vs, [r["avg_utility"] for r in mine], "V", "avg_utility")
        ctx.plot(f"cost_{policy.value}", vs, [r["avg_cost"] for r in mine], "V", "avg_cost")
    ctx.summary["u_star"] = u_star


def run_queue_trace(ctx: RunContext) -> None:
    """Per-slot backlog, price and offloading of each policy at one V."""
    region = _region(ctx)
    sweep = ctx.config.sweep
    V = sweep.trace_v
    bound = queue_bound(V, region, ctx.params)
    rows = []
    for policy in PricingPolicy:
        trace = run_horizon(sweep.horizon, V, policy, region, ctx.params, seed=ctx.config.seeds[0])
        rows.extend(trace_rows(trace))
        ctx.plot(f"backlog_{policy.value}", np.arange(trace.T + 1), trace.backlogs, "n", "X")
        if policy == PricingPolicy.OPTIMAL and trace.max_backlog > bound:
            ctx.warn(f"backlog {trace.max_backlog:.6f} exceeded its bound {bound:.6f}")
    ctx.csv("queue_trace", rows)
    ctx.plot("backlog_bound", [0, sweep.horizon], [bound, bound], "n", "X")
    ctx.summary["queue_bound"] = bound


def run_properties(ctx: RunContext) -> None:
    """Structural checks on the mean-field model; any failure makes the run fail."""
    p, sweep = ctx.params, ctx.config.sweep
    results = run_property_suite(
        ctx.profile, p.lam, p.mu, ctx.x_c(sweep.table_load),
        decay_x_c=ctx.x_c(sweep.decay_load),
        loads=list(sweep.loads),
        tol=ctx.config.tol,
        seed=ctx.config.seeds[0],
        lipschitz_trials=sweep.lipschitz_trials,
        dominance_pairs=sweep.dominance_pairs,
        decay_trajectories=sweep.decay_trajectories,
    )
    ctx.csv("properties", [r.to_dict() for r in results], ["check_name", "passed", "value", "bound", "message"])
    failed = [r.check_name for r in results if not r.passed]
    ctx.summary["failed_checks"] = failed
    if failed:
        ctx.warn(f"property checks failed: {', '.join(failed)}")
        ctx.exit_code = EXIT_FAILURE


EXPERIMENTS: dict[Experiment, Callable[[RunContext], None]] = {
    Experiment.STATIONARY_SWEEP: run_stationary_sweep,
    Experiment.TABLE1: run_table1,
    Experiment.CONVERGENCE_STUDY: run_convergence_study,
    Experiment.WORKLOAD_COMPARISON: run_workload_comparison,
    Experiment.FEASIBILITY: run_feasibility,
    Experiment.PRICING_SWEEP: run_pricing_sweep,
    Experiment.QUEUE_TRACE: run_queue_trace,
    Experiment.PROPERTY_SUITE: run_properties,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def run(config: RunConfig) -> RunOutcome:
    """Execute ``config.experiment`` and write its artifacts under a fresh run directory."""
    try:
        config.params.validate()
    except InvalidArgumentError as e:
        return RunOutcome(EXIT_USAGE, None, message=str(e))

    started = time.perf_counter()
    run_dir = run_directory(config.output_dir, config.experiment.value)
    ctx = RunContext(config, run_dir)
    logger.info("Experiment %s started in %s", config.experiment.value, run_dir)
    message = ""
    try:
        EXPERIMENTS[config.experiment](ctx)
    except InfeasibleError as e:
        ctx.exit_code, message = EXIT_FAILURE, str(e)
        ctx.json("infeasibility", {"message": str(e).splitlines()[0], **e.report})
    except NumericalFailureError as e:
        ctx.exit_code, message = EXIT_FAILURE, str(e)
    except ConfigurationError as e:
        ctx.exit_code, message = EXIT_USAGE, str(e)
    except CollaborationError as e:
        ctx.exit_code, message = EXIT_FAILURE, str(e)
    if message:
        logger.error("Experiment %s failed: %s", config.experiment.value, message)

    wall_time = time.perf_counter() - started
    write_metadata(
        run_dir, config,
        wall_time=wall_time,
        warnings=ctx.warnings,
        artifacts=ctx.artifacts,
        exit_code=ctx.exit_code,
        extra={"summary": ctx.summary, "error": message} if message else {"summary": ctx.summary},
    )
    append_run_index(config.output_dir, {
        "experiment": config.experiment.value,
        "run_dir": str(run_dir),
        "exit_code": ctx.exit_code,
        "wall_time_s": wall_time,
    })
    logger.info("Experiment %s finished in %.1fs with exit code %d", config.experiment.value, wall_time, ctx.exit_code)
    return RunOutcome(ctx.exit_code, run_dir, list(ctx.artifacts), list(ctx.warnings), message)
