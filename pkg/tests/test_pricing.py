"""Pricing tests — virtual queue, threshold price controller and baseline policies.

Covers:
- queue_update, service_utility, drift_bound_constant arithmetic
- price_threshold / optimal_price / queue_bound at the evaluation parameters
- adapted_probability, optimal_static_utility, utility_gap_bound
- run_horizon: constant and adapted baselines, exact backlog bound, overload cap,
  per-slot drift-minus-utility bound, utility/cost trends in V
- trace_rows and sweep_summary
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from collaboration.models import (
    ConfigurationError,
    FeasibleRegion,
    InfeasibleError,
    InvalidArgumentError,
    PricingPolicy,
    SystemParams,
)
from collaboration.offload import system_cost
from collaboration.pricing import (
    adapted_probability,
    drift_bound_constant,
    drift_minus_utility,
    low_price,
    optimal_price,
    optimal_static_utility,
    price_threshold,
    queue_bound,
    queue_update,
    run_horizon,
    service_utility,
    sweep_summary,
    trace_rows,
    utility_gap_bound,
)

X_L, X_U = 0.49953, 0.72978
V_GRID = [5.0, 10.0, 20.0, 50.0, 100.0]
V_SWEEP = [5.0 * j for j in range(1, 21)]


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------

@pytest.fixture
def params():
    return SystemParams()


@pytest.fixture
def region():
    return FeasibleRegion(
        delay_interval=(0.26586, X_U),
        fairness_intervals=[(0.0, 0.08505), (X_L, 1.0)],
        intersection=[(X_L, X_U)],
        x_l=X_L,
        x_u=X_U,
    )


def u_low(params):
    return service_utility(X_U, low_price(params), params)


def u_high(params):
    return service_utility(X_L, params.p_u, params)


# ---------------------------------------------------------------------------
# Per-slot arithmetic
# ---------------------------------------------------------------------------

class TestSlotArithmetic:
    def test_queue_stays_empty_at_low_offloading(self, params):
        assert queue_update(0.0, X_L, params) == 0.0

    def test_queue_grows_at_high_offloading(self, params):
        assert queue_update(0.0, X_U, params) == pytest.approx(0.9 * X_U - 0.6)

    def test_queue_never_grows_when_cap_exceeds_rate(self, params):
        relaxed = replace(params, x_bar=1.0)
        X = 0.0
        for _ in range(50):
            X = queue_update(X, 1.0, relaxed)
        assert X == 0.0

    def test_negative_backlog_rejected(self, params):
        with pytest.raises(InvalidArgumentError, match="backlog"):
            queue_update(-1.0, 0.5, params)

    def test_utility(self, params):
        assert service_utility(0.0, 0.42, params) == 0.0
        assert service_utility(X_U, 0.42, params) == pytest.approx(0.9 * X_U * 0.22)
        assert service_utility(0.6, params.server_cost, params) == pytest.approx(0.0)

    def test_drift_constant(self, params):
        assert drift_bound_constant(params) == pytest.approx(0.18)
        assert drift_bound_constant(replace(params, x_bar=0.9)) == pytest.approx(0.5 * 0.81)
        assert drift_bound_constant(replace(params, x_bar=0.0)) == pytest.approx(0.5 * 0.81)

    def test_low_price(self, params):
        assert low_price(params) == pytest.approx(0.42)


# ---------------------------------------------------------------------------
# Threshold controller
# ---------------------------------------------------------------------------

class TestThreshold:
    def test_threshold_value(self, params, region):
        expected = 20 * (X_U * 0.42 - X_L * 0.5) / (X_U - X_L) - 20 * 0.2
        assert price_threshold(20.0, region, params) == pytest.approx(expected)
        assert expected == pytest.approx(0.9288, abs=1e-3)

    def test_empty_backlog_gets_low_price(self, params, region):
        assert optimal_price(0.0, 20.0, region, params) == pytest.approx(0.42)

    def test_tie_gets_low_price(self, params, region):
        x_star = price_threshold(20.0, region, params)
        assert optimal_price(x_star, 20.0, region, params) == pytest.approx(0.42)

    def test_large_backlog_gets_ceiling(self, params, region):
        assert optimal_price(1e9, 20.0, region, params) == 0.5

    def test_tiny_v(self, params, region):
        assert optimal_price(1e-3, 1e-6, region, params) == 0.5

    def test_v_must_be_positive(self, params, region):
        with pytest.raises(InvalidArgumentError, match="V"):
            optimal_price(0.0, 0.0, region, params)

    def test_low_price_out_of_range(self, params, region):
        with pytest.raises(ConfigurationError, match="break-even"):
            optimal_price(0.0, 20.0, region, replace(params, rho_c_m=0.3))

    def test_degenerate_region(self, params):
        flat = FeasibleRegion((0.5, 0.5), [(0.0, 1.0)], [(0.5, 0.5)], 0.5, 0.5)
        with pytest.raises(InvalidArgumentError, match="x_l < x_u"):
            price_threshold(20.0, flat, params)

    def test_queue_bound_value(self, params, region):
        expected = price_threshold(20.0, region, params) + X_U * 0.9 - 0.6
        assert queue_bound(20.0, region, params) == pytest.approx(expected)
        assert expected == pytest.approx(0.9856, abs=1e-3)

    def test_queue_bound_linear_in_v(self, params, region):
        growth = queue_bound(40.0, region, params) - queue_bound(20.0, region, params)
        assert growth == pytest.approx(price_threshold(20.0, region, params))

    def test_queue_bound_small_v_limit(self, params, region):
        assert queue_bound(1e-9, region, params) == pytest.approx(X_U * 0.9 - 0.6, abs=1e-8)


# ---------------------------------------------------------------------------
# Static benchmarks
# ---------------------------------------------------------------------------

class TestBenchmarks:
    def test_adapted_probability(self, params, region):
        theta = adapted_probability(region, params)
        assert theta == pytest.approx((0.6 - 0.9 * X_L) / (0.9 * (X_U - X_L)))
        assert theta == pytest.approx(0.726, abs=1e-3)

    def test_adapted_probability_out_of_range(self, params, region):
        with pytest.raises(ConfigurationError, match="overload cap"):
            adapted_probability(region, replace(params, x_bar=0.8))

    def test_optimal_static_utility(self, params, region):
        assert optimal_static_utility(region, params) == pytest.approx(0.14186, abs=1e-4)

    def test_cap_above_all_offloading(self, params, region):
        assert optimal_static_utility(region, replace(params, x_bar=0.8)) == pytest.approx(u_low(params))

    def test_cap_below_ceiling_load(self, params, region):
        with pytest.raises(InfeasibleError, match="Overload cap"):
            optimal_static_utility(region, replace(params, x_bar=0.3))

    def test_gap_bound(self, params, region):
        assert utility_gap_bound(20.0, region, params) == pytest.approx(
            optimal_static_utility(region, params) - 0.18 / 20.0
        )


# ---------------------------------------------------------------------------
# Horizon runs
# ---------------------------------------------------------------------------

class TestHorizon:
    def test_constant_policy(self, params, region):
        trace = run_horizon(100, 20.0, PricingPolicy.CONSTANT, region, params)
        assert np.all(trace.offloads == X_L)
        assert np.all(trace.backlogs == 0.0)
        assert trace.avg_cost == pytest.approx(0.9 * (0.9 + 0.08 * X_L))

    def test_backlogs_have_one_extra_entry(self, params, region):
        trace = run_horizon(10, 20.0, "optimal", region, params)
        assert trace.T == 10
        assert trace.backlogs.shape == (11,)
        assert trace.backlogs[0] == 0.0

    @pytest.mark.parametrize("V", V_GRID)
    def test_backlog_bound_is_exact(self, params, region, V):
        trace = run_horizon(10_000, V, PricingPolicy.OPTIMAL, region, params)
        assert np.all(trace.backlogs >= 0.0)
        assert trace.max_backlog <= queue_bound(V, region, params)

    @pytest.mark.parametrize("V", V_GRID)
    def test_overload_cap_optimal(self, params, region, V):
        T = 10_000
        trace = run_horizon(T, V, PricingPolicy.OPTIMAL, region, params)
        avg_load = float(np.mean(trace.offloads)) * params.lam
        assert avg_load <= params.x_bar + queue_bound(V, region, params) / T + 1e-12
        assert avg_load <= params.x_bar + 1e-3

    @pytest.mark.slow
    def test_overload_cap_adapted(self, params, region):
        loads = [
            float(np.mean(run_horizon(100_000, 20.0, PricingPolicy.ADAPTED, region, params, seed=s).offloads))
            for s in range(4)
        ]
        assert np.mean(loads) * params.lam <= params.x_bar + 1e-3

    @pytest.mark.parametrize("V", V_GRID)
    def test_utility_guarantee(self, params, region, V):
        for T in (100, 10_000):
            trace = run_horizon(T, V, PricingPolicy.OPTIMAL, region, params)
            assert trace.avg_utility >= utility_gap_bound(V, region, params) - 1e-9

    def test_drift_minus_utility_bound(self, params, region):
        trace = run_horizon(500, 20.0, PricingPolicy.OPTIMAL, region, params)
        for n in range(trace.T):
            lhs, rhs = drift_minus_utility(trace.backlogs[n], trace.offloads[n], trace.prices[n], 20.0, params)
            assert lhs <= rhs + 1e-12

    def test_adapted_is_seeded(self, params, region):
        a = run_horizon(200, 20.0, PricingPolicy.ADAPTED, region, params, seed=3)
        b = run_horizon(200, 20.0, PricingPolicy.ADAPTED, region, params, seed=3)
        np.testing.assert_array_equal(a.prices, b.prices)
        assert set(np.unique(a.prices)) <= {low_price(params), params.p_u}

    def test_horizon_must_be_positive(self, params, region):
        with pytest.raises(InvalidArgumentError, match="T"):
            run_horizon(0, 20.0, PricingPolicy.OPTIMAL, region, params)

    @pytest.mark.parametrize("T", [100, pytest.param(10_000, marks=pytest.mark.slow)])
    def test_optimal_utility_non_decreasing_in_v(self, params, region, T):
        traces = [run_horizon(T, V, PricingPolicy.OPTIMAL, region, params) for V in V_SWEEP]
        low_slots = [int(np.sum(t.prices < params.p_u)) for t in traces]
        assert low_slots == sorted(low_slots)
        utilities = [t.avg_utility for t in traces]
        assert all(b >= a or b == pytest.approx(a, rel=1e-12) for a, b in zip(utilities, utilities[1:]))

    @pytest.mark.parametrize("T", [100, pytest.param(10_000, marks=pytest.mark.slow)])
    def test_optimal_cost_non_increasing_in_v(self, params, region, T):
        costs = [run_horizon(T, V, PricingPolicy.OPTIMAL, region, params).avg_cost for V in V_SWEEP]
        assert all(b <= a or b == pytest.approx(a, rel=1e-12) for a, b in zip(costs, costs[1:]))

    @pytest.mark.parametrize("V", V_GRID)
    def test_optimal_beats_constant(self, params, region, V):
        optimal = run_horizon(100, V, PricingPolicy.OPTIMAL, region, params)
        constant = run_horizon(100, V, PricingPolicy.CONSTANT, region, params)
        assert optimal.avg_utility > constant.avg_utility
        assert optimal.avg_cost < constant.avg_cost

    @pytest.mark.parametrize("T", [100, pytest.param(10_000, marks=pytest.mark.slow)])
    def test_optimal_beats_adapted_mean(self, params, region, T):
        theta = adapted_probability(region, params)
        c_low = system_cost(X_U, low_price(params), params)
        c_high = system_cost(X_L, params.p_u, params)
        for V in V_SWEEP:
            optimal = run_horizon(T, V, PricingPolicy.OPTIMAL, region, params)
            assert optimal.avg_utility > theta * u_low(params) + (1.0 - theta) * u_high(params), V
            assert optimal.avg_cost < theta * c_low + (1.0 - theta) * c_high, V

    @pytest.mark.parametrize(
        "T, V",
        [(100, V) for V in V_SWEEP] + [pytest.param(10_000, V, marks=pytest.mark.slow) for V in V_SWEEP],
    )
    def test_optimal_beats_adapted(self, params, region, T, V):
        optimal = run_horizon(T, V, PricingPolicy.OPTIMAL, region, params)
        adapted = [run_horizon(T, V, PricingPolicy.ADAPTED, region, params, seed=s) for s in range(8)]
        assert optimal.avg_utility > np.mean([t.avg_utility for t in adapted])
        assert optimal.avg_cost < np.mean([t.avg_cost for t in adapted])


# ---------------------------------------------------------------------------
# Rows and sweeps
# ---------------------------------------------------------------------------

class TestRows:
    def test_trace_rows(self, params, region):
        trace = run_horizon(5, 20.0, PricingPolicy.OPTIMAL, region, params)
        rows = trace_rows(trace)
        assert len(rows) == 5
        assert list(rows[0]) == ["n", "policy", "V", "p", "x", "X", "u", "c"]
        assert rows[0]["policy"] == "optimal"
        assert rows[1]["X"] == pytest.approx(trace.backlogs[1])

    def test_sweep_summary(self, params, region):
        rows = sweep_summary(iter([10.0, 20.0]), region, params, T=50, seeds=[0, 1])
        assert len(rows) == 6
        assert {r["policy"] for r in rows} == {"optimal", "adapted", "constant"}
        for r in rows:
            assert r["max_X"] <= r["bound"] or r["policy"] == "adapted"

    def test_sweep_needs_seeds(self, params, region):
        with pytest.raises(InvalidArgumentError, match="seeds"):
            sweep_summary([10.0], region, params, T=10, seeds=[])
