"""Followers' side of the pricing game: delay, fairness and the feasible region.

A user offloads each task with probability x. Offloaded tasks pay upload plus
server time; the rest are shared over the collaboration graph at load
(1 - x)λ. The delay cap gives an interval [x_l*, x_u*]; the fairness cap on
the busy-probability gap between the largest and smallest degree classes gives
[0, x'_l] ∪ [x'_u, 1]. Users respond to a price with one endpoint of the
chosen intersection component.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from collaboration.meanfield import TRUNCATION_CAP, stationary_point, truncation_depth
from collaboration.models import (
    DegreeProfile,
    FairnessRegion,
    FeasibleRegion,
    InfeasibleError,
    InvalidArgumentError,
    RegionSelection,
    StationaryPoint,
    SystemParams,
)
from collaboration.search import bisect_root, golden_section_min

logger = logging.getLogger(__name__)

DEFAULT_ROOT_TOL = 1e-4
DEFAULT_SEARCH_TOL = 1e-6
DEFAULT_GRID_POINTS = 101
PRICE_TIE_TOL = 1e-12


class StationaryCache:
    """Stationary points keyed on x, each warm-started from the nearest solved x.

    Every point shares one truncation depth (the one needed at x = 0) so that
    neighboring solutions are shape-compatible.
    """

    def __init__(
        self,
        params: SystemParams,
        profile: DegreeProfile,
        tol: float = DEFAULT_SEARCH_TOL,
        i_max: int | None = None,
    ):
        self.params = params
        self.profile = profile
        self.tol = tol
        try:
            depth = truncation_depth(profile, params.lam, params.mu, 1.0)
        except InfeasibleError:
            depth = TRUNCATION_CAP
        self.i_max = max(i_max or 0, depth)
        self._points: dict[float, StationaryPoint] = {}

    def __len__(self) -> int:
        return len(self._points)

    def __call__(self, x: float) -> StationaryPoint:
        if not 0.0 <= x <= 1.0:
            raise InvalidArgumentError(f"offload probability x must be in [0, 1], got {x}")
        if x in self._points:
            return self._points[x]
        initial = None
        if self._points:
            nearest = min(self._points, key=lambda y: abs(y - x))
            initial = self._points[nearest].s_star
        sp = stationary_point(
            self.profile, self.params.lam, self.params.mu, 1.0 - x, self.tol,
            i_max=self.i_max, initial=initial, cross_check=False,
        )
        self._points[x] = sp
        return sp


def _solve(
    x: float, params: SystemParams, profile: DegreeProfile,
    tol: float, cache: StationaryCache | None,
) -> StationaryPoint:
    if cache is not None:
        return cache(x)
    if not 0.0 <= x <= 1.0:
        raise InvalidArgumentError(f"offload probability x must be in [0, 1], got {x}")
    return stationary_point(profile, params.lam, params.mu, 1.0 - x, tol, cross_check=False)


# ---------------------------------------------------------------------------
# Delay and fairness
# ---------------------------------------------------------------------------

def delay_components(
    x: float,
    params: SystemParams,
    profile: DegreeProfile,
    *,
    tol: float = DEFAULT_SEARCH_TOL,
    cache: StationaryCache | None = None,
) -> tuple[float, float]:
    """(d_o, d_q): offloading delay x(B/r + 1/γ) and queueing delay Σ_{i≥1} s_i*/λ."""
    sp = _solve(x, params, profile, tol, cache)
    d_o = x * params.offload_latency
    d_q = sp.mean_workload / params.lam if params.lam > 0 else 0.0
    return d_o, d_q


def task_delay(
    x: float,
    params: SystemParams,
    profile: DegreeProfile,
    *,
    tol: float = DEFAULT_SEARCH_TOL,
    cache: StationaryCache | None = None,
) -> float:
    """Average task delay at offload probability x."""
    d_o, d_q = delay_components(x, params, profile, tol=tol, cache=cache)
    return d_o + d_q


def class_busy_probabilities(
    x: float,
    params: SystemParams,
    profile: DegreeProfile,
    *,
    tol: float = DEFAULT_SEARCH_TOL,
    cache: StationaryCache | None = None,
) -> np.ndarray:
    """s*[k, 1] for every degree class at offload probability x."""
    return _solve(x, params, profile, tol, cache).s_star.s[:, 1].copy()


def fairness_gap(
    x: float,
    params: SystemParams,
    profile: DegreeProfile,
    *,
    tol: float = DEFAULT_SEARCH_TOL,
    cache: StationaryCache | None = None,
) -> float:
    """Busy-probability gap between the largest and the smallest degree class."""
    busy = class_busy_probabilities(x, params, profile, tol=tol, cache=cache)
    return float(busy[-1] - busy[0])


def _or_inf(fn, x: float) -> float:
    """Evaluate fn(x), mapping an unstable operating point to +inf."""
    try:
        return fn(x)
    except InfeasibleError:
        return math.inf


# ---------------------------------------------------------------------------
# Critical points
# ---------------------------------------------------------------------------

def find_delay_interval(
    params: SystemParams,
    profile: DegreeProfile,
    tol: float = DEFAULT_ROOT_TOL,
    *,
    cache: StationaryCache | None = None,
) -> tuple[float, float]:
    """[x_l*, x_u*] where the delay stays within d_bar.

    Golden-section search locates the interior minimum of d(x); bisection then
    finds the crossing on each monotone side.
    """
    cache = cache or StationaryCache(params, profile)

    def d(x: float) -> float:
        return _or_inf(lambda y: task_delay(y, params, profile, cache=cache), x)

    d0, d1 = d(0.0), d(1.0)
    x_min, d_min = golden_section_min(d, 0.0, 1.0, tol)
    for x_end, d_end in ((0.0, d0), (1.0, d1)):
        if d_end < d_min:
            x_min, d_min = x_end, d_end
    logger.debug("Delay minimum %.5f at x=%.5f (d(0)=%.5f, d(1)=%.5f)", d_min, x_min, d0, d1)

    if d_min > params.d_bar:
        raise InfeasibleError(
            "Delay cap cannot be met at any offload probability",
            {"d_bar": params.d_bar, "min_delay": d_min, "argmin": x_min},
        )

    def excess(x: float) -> float:
        return d(x) - params.d_bar

    x_l = 0.0 if d0 <= params.d_bar else bisect_root(
        excess, 0.0, x_min, tol, g_lo=d0 - params.d_bar, g_hi=d_min - params.d_bar
    )
    x_u = 1.0 if d1 <= params.d_bar else bisect_root(
        excess, x_min, 1.0, tol, g_lo=d_min - params.d_bar, g_hi=d1 - params.d_bar
    )
    logger.info("Delay interval [%.5f, %.5f]", x_l, x_u)
    return x_l, x_u


def find_fairness_region(
    params: SystemParams,
    profile: DegreeProfile,
    tol: float = DEFAULT_ROOT_TOL,
    *,
    cache: StationaryCache | None = None,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> FairnessRegion:
    """[0, x'_l] ∪ [x'_u, 1] where the fairness gap stays within s_bar.

    A grid scan finds where the gap exceeds the cap; bisection refines the
    first upward and the last downward crossing. More than two crossings or a
    cap already violated at an endpoint are reported as warnings.
    """
    cache = cache or StationaryCache(params, profile)

    def excess(x: float) -> float:
        return _or_inf(lambda y: fairness_gap(y, params, profile, cache=cache), x) - params.s_bar

    xs = np.linspace(0.0, 1.0, grid_points)
    values = np.array([excess(float(x)) for x in xs])
    above = values > 0
    if not above.any():
        logger.info("Fairness cap %.4f never binds (max gap %.5f)", params.s_bar, values.max() + params.s_bar)
        return FairnessRegion(intervals=[(0.0, 1.0)])

    warnings: list[str] = []
    crossings = int(np.count_nonzero(above[1:] != above[:-1]))
    if crossings > 2:
        warnings.append(f"fairness gap crosses the cap {crossings} times; using the outermost crossings")
    first, last = int(np.flatnonzero(above)[0]), int(np.flatnonzero(above)[-1])

    x_prime_l = None
    if first == 0:
        warnings.append("fairness gap exceeds the cap at x=0")
    else:
        x_prime_l = bisect_root(
            excess, float(xs[first - 1]), float(xs[first]), tol,
            g_lo=float(values[first - 1]), g_hi=float(values[first]),
        )
    x_prime_u = None
    if last == grid_points - 1:
        warnings.append("fairness gap exceeds the cap at x=1")
    else:
        x_prime_u = bisect_root(
            excess, float(xs[last]), float(xs[last + 1]), tol,
            g_lo=float(values[last]), g_hi=float(values[last + 1]),
        )
    for w in warnings:
        logger.warning("Fairness region: %s", w)

    intervals: list[tuple[float, float]] = []
    if x_prime_l is not None:
        intervals.append((0.0, x_prime_l))
    if x_prime_u is not None:
        intervals.append((x_prime_u, 1.0))
    logger.info("Fairness region %s", intervals)
    return FairnessRegion(intervals, x_prime_l, x_prime_u, warnings)


def feasible_region(
    params: SystemParams,
    profile: DegreeProfile,
    tol: float = DEFAULT_ROOT_TOL,
    *,
    selection: RegionSelection | str = RegionSelection.HIGHEST,
    search_tol: float = DEFAULT_SEARCH_TOL,
    grid_points: int = DEFAULT_GRID_POINTS,
    i_max: int | None = None,
) -> FeasibleRegion:
    """Intersect the delay interval with the fairness region and pick one component."""
    selection = RegionSelection(selection)
    cache = StationaryCache(params, profile, search_tol, i_max)
    delay = find_delay_interval(params, profile, tol, cache=cache)
    fairness = find_fairness_region(params, profile, tol, cache=cache, grid_points=grid_points)

    intersection = []
    for lo, hi in fairness.intervals:
        a, b = max(delay[0], lo), min(delay[1], hi)
        if a <= b:
            intersection.append((a, b))
    report = {
        "x_l_star": delay[0],
        "x_u_star": delay[1],
        "x_prime_l": fairness.x_prime_l,
        "x_prime_u": fairness.x_prime_u,
        "x_l": None,
        "x_u": None,
        "warnings": list(fairness.warnings),
    }
    if not intersection:
        raise InfeasibleError("Delay and fairness constraints do not intersect", report)

    x_l, x_u = intersection[-1] if selection == RegionSelection.HIGHEST else intersection[0]
    logger.info(
        "Feasible region [%.5f, %.5f] (%s of %d components, %d stationary solves)",
        x_l, x_u, selection.value, len(intersection), len(cache),
    )
    return FeasibleRegion(
        delay_interval=delay,
        fairness_intervals=fairness.intervals,
        intersection=intersection,
        x_l=x_l,
        x_u=x_u,
        x_prime_l=fairness.x_prime_l,
        x_prime_u=fairness.x_prime_u,
        warnings=fairness.warnings,
    )


# ---------------------------------------------------------------------------
# Best response and cost
# ---------------------------------------------------------------------------

def offload_decision(p: float, region: FeasibleRegion, params: SystemParams) -> float:
    """x_u when offloading is no dearer than local processing at price p, else x_l."""
    if params.local_cost >= p + params.upload_cost - PRICE_TIE_TOL:
        return region.x_u
    return region.x_l


def system_cost(x: float, p: float, params: SystemParams) -> float:
    """Users' cost rate: payment, local energy and upload energy."""
    if not 0.0 <= x <= 1.0:
        raise InvalidArgumentError(f"offload probability x must be in [0, 1], got {x}")
    lam = params.lam
    return x * lam * p + (1.0 - x) * lam * params.local_cost + x * lam * params.upload_cost
