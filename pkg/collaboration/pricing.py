"""Leader's side of the pricing game: a virtual-queue price controller.

The server posts one price per slot. Users answer with x_u when offloading is
no dearer than computing locally and with x_l otherwise, so only two prices
matter: the break-even price ρ_c_m/μ² − ρ_t_m·B/r and the ceiling p_u. A
virtual queue X accumulates offloaded load above the overload cap x̄; the
controller posts the low price while X is below a V-proportional threshold.
"""

from __future__ import annotations

import logging
from typing import Iterable

import numpy as np

from collaboration.models import (
    ConfigurationError,
    FeasibleRegion,
    InfeasibleError,
    InvalidArgumentError,
    PricingPolicy,
    SlotTrace,
    SystemParams,
    VirtualQueue,
)
from collaboration.offload import offload_decision, system_cost

logger = logging.getLogger(__name__)


def low_price(params: SystemParams) -> float:
    """Break-even price at which offloading costs a user as much as local work."""
    return params.local_cost - params.upload_cost


def _check_low_price(params: SystemParams) -> float:
    p_low = low_price(params)
    if not 0.0 < p_low <= params.p_u:
        raise ConfigurationError([
            f"break-even price rho_c_m/mu^2 - rho_t_m*B/r = {p_low:.6g} must lie in (0, p_u={params.p_u}]"
        ])
    return p_low


def _check_region(region: FeasibleRegion) -> None:
    if not region.x_l < region.x_u:
        raise InvalidArgumentError(
            f"price threshold needs x_l < x_u, got [{region.x_l}, {region.x_u}]"
        )


# ---------------------------------------------------------------------------
# Per-slot quantities
# ---------------------------------------------------------------------------

def queue_update(X: float, x: float, params: SystemParams) -> float:
    """Next backlog max(X + xλ − x̄, 0)."""
    if X < 0:
        raise InvalidArgumentError(f"virtual queue backlog must be >= 0, got {X}")
    return max(X + x * params.lam - params.x_bar, 0.0)


def service_utility(x: float, p: float, params: SystemParams) -> float:
    """Server's utility rate: revenue minus server energy, xλ(p − ρ_c_s/γ)."""
    return x * params.lam * p - x * params.lam * params.server_cost


def drift_bound_constant(params: SystemParams) -> float:
    """Per-slot bound D on ½(xλ − x̄)² over x ∈ [0, 1]."""
    return max(0.5 * (params.lam - params.x_bar) ** 2, 0.5 * params.x_bar ** 2)


def price_threshold(V: float, region: FeasibleRegion, params: SystemParams) -> float:
    """Backlog X* at or below which the low price maximises V·u − X·xλ."""
    _check_region(region)
    p_low = low_price(params)
    x_l, x_u = region.x_l, region.x_u
    return V * (x_u * p_low - x_l * params.p_u) / (x_u - x_l) - V * params.server_cost


def optimal_price(X: float, V: float, region: FeasibleRegion, params: SystemParams) -> float:
    """Price minimising the drift-minus-utility bound at backlog X."""
    if not V > 0:
        raise InvalidArgumentError(f"V must be > 0, got {V}")
    p_low = _check_low_price(params)
    if X <= price_threshold(V, region, params):
        return p_low
    return params.p_u


def queue_bound(V: float, region: FeasibleRegion, params: SystemParams) -> float:
    """Largest backlog the threshold controller can reach from X = 0: X* + x_uλ − x̄."""
    x_star = price_threshold(V, region, params)
    return x_star + region.x_u * params.lam - params.x_bar


def drift_minus_utility(
    X: float, x: float, p: float, V: float, params: SystemParams
) -> tuple[float, float]:
    """(lhs, rhs) of the one-slot bound ½X'² − ½X² − V·u ≤ X(xλ − x̄) − V·u + D."""
    u = service_utility(x, p, params)
    X_next = queue_update(X, x, params)
    lhs = 0.5 * X_next ** 2 - 0.5 * X ** 2 - V * u
    rhs = X * (x * params.lam - params.x_bar) - V * u + drift_bound_constant(params)
    return lhs, rhs


# ---------------------------------------------------------------------------
# Static benchmarks
# ---------------------------------------------------------------------------

def adapted_probability(region: FeasibleRegion, params: SystemParams) -> float:
    """Probability of the low price that makes the mean offloaded load exactly x̄."""
    lo, hi = region.x_l * params.lam, region.x_u * params.lam
    if not hi > lo:
        raise ConfigurationError([f"randomised pricing needs x_l*lambda < x_u*lambda, got {lo}, {hi}"])
    theta = (params.x_bar - lo) / (hi - lo)
    if not 0.0 <= theta <= 1.0:
        raise ConfigurationError([
            f"overload cap x_bar={params.x_bar} lies outside [x_l*lambda, x_u*lambda] = [{lo:.5f}, {hi:.5f}]"
        ])
    return theta


def optimal_static_utility(region: FeasibleRegion, params: SystemParams) -> float:
    """Best time-average utility of any fixed mix of the two prices under the overload cap."""
    p_low = _check_low_price(params)
    lo, hi = region.x_l * params.lam, region.x_u * params.lam
    if lo > params.x_bar:
        raise InfeasibleError(
            "Overload cap is below the load offloaded at the ceiling price",
            {"x_bar": params.x_bar, "x_l_lambda": lo},
        )
    u_low = service_utility(region.x_u, p_low, params)
    u_high = service_utility(region.x_l, params.p_u, params)
    theta = 1.0 if hi <= params.x_bar else (params.x_bar - lo) / (hi - lo)
    return max(u_high, theta * u_low + (1.0 - theta) * u_high)


def utility_gap_bound(V: float, region: FeasibleRegion, params: SystemParams) -> float:
    """Lower bound u* − D/V on the controller's long-run average utility."""
    if not V > 0:
        raise InvalidArgumentError(f"V must be > 0, got {V}")
    return optimal_static_utility(region, params) - drift_bound_constant(params) / V


# ---------------------------------------------------------------------------
# Horizon runs
# ---------------------------------------------------------------------------

def run_horizon(
    T: int,
    V: float,
    policy: PricingPolicy | str,
    region: FeasibleRegion,
    params: SystemParams,
    seed: int | None = None,
    X0: float = 0.0,
) -> SlotTrace:
    """Play T slots of one pricing policy against threshold-responding users."""
    if T < 1:
        raise InvalidArgumentError(f"T must be >= 1, got {T}")
    policy = PricingPolicy(policy)
    queue = VirtualQueue(X0)

    if policy == PricingPolicy.ADAPTED:
        p_low = _check_low_price(params)
        theta = adapted_probability(region, params)
        draws = np.random.default_rng(seed).random(T) < theta
    elif policy == PricingPolicy.OPTIMAL:
        _check_low_price(params)

    prices = np.empty(T)
    offloads = np.empty(T)
    backlogs = np.empty(T + 1)
    utilities = np.empty(T)
    costs = np.empty(T)
    backlogs[0] = queue.X

    for n in range(T):
        if policy == PricingPolicy.OPTIMAL:
            p = optimal_price(queue.X, V, region, params)
        elif policy == PricingPolicy.ADAPTED:
            p = p_low if draws[n] else params.p_u
        else:
            p = params.p_u
        x = offload_decision(p, region, params)
        prices[n] = p
        offloads[n] = x
        utilities[n] = service_utility(x, p, params)
        costs[n] = system_cost(x, p, params)
        queue.X = queue_update(queue.X, x, params)
        backlogs[n + 1] = queue.X

    trace = SlotTrace(policy, V, prices, offloads, backlogs, utilities, costs)
    logger.debug(
        "%s V=%g T=%d: avg utility %.5f, avg cost %.5f, max X %.4f",
        policy.value, V, T, trace.avg_utility, trace.avg_cost, trace.max_backlog,
    )
    return trace


def trace_rows(trace: SlotTrace) -> list[dict]:
    """Per-slot rows (n, policy, V, p, x, X, u, c); X is the backlog entering slot n."""
    return [
        {
            "n": n,
            "policy": trace.policy.value,
            "V": trace.V,
            "p": float(trace.prices[n]),
            "x": float(trace.offloads[n]),
            "X": float(trace.backlogs[n]),
            "u": float(trace.utilities[n]),
            "c": float(trace.costs[n]),
        }
        for n in range(trace.T)
    ]


def sweep_summary(
    v_values: Iterable[float],
    region: FeasibleRegion,
    params: SystemParams,
    T: int,
    seeds: list[int],
    policies: Iterable[PricingPolicy] = tuple(PricingPolicy),
) -> list[dict]:
    """One row (V, policy, avg_utility, avg_cost, max_X, bound) per V and policy.

    Randomised policies are averaged over ``seeds``; deterministic ones run once.
    """
    if not seeds:
        raise InvalidArgumentError("seeds must be nonempty")
    v_values = list(v_values)
    policies = [PricingPolicy(p) for p in policies]
    rows: list[dict] = []
    for V in v_values:
        bound = queue_bound(V, region, params)
        for policy in policies:
            runs = seeds if policy == PricingPolicy.ADAPTED else seeds[:1]
            traces = [run_horizon(T, V, policy, region, params, seed=s) for s in runs]
            rows.append({
                "V": V,
                "policy": policy.value,
                "avg_utility": float(np.mean([t.avg_utility for t in traces])),
                "avg_cost": float(np.mean([t.avg_cost for t in traces])),
                "max_X": max(t.max_backlog for t in traces),
                "bound": bound,
            })
    logger.info("Pricing sweep: %d V values x %d policies", len(v_values), len(policies))
    return rows
