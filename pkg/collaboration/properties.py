"""Numerical property checks on the mean-field model.

Each check is a pure function returning a CheckResult; run_property_suite
collects them for one operating point. Checks never raise on a failed
property, only on invalid arguments or an unsolvable operating point.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from collaboration.meanfield import (
    busy_probability,
    integrate,
    lipschitz_check,
    lipschitz_constant,
    lyapunov_phi,
    random_dominated_state,
    random_dominating_state,
    recursion_residual,
    stationary_point,
    stationary_point_ode,
    tail_bounds,
)
from collaboration.models import (
    CheckResult,
    DegreeProfile,
    InvalidArgumentError,
    MeanFieldState,
    StationaryPoint,
)

logger = logging.getLogger(__name__)

EXACT_ATOL = 1e-12
IDENTITY_ATOL = 1e-6
ORDER_ATOL = 1e-9
DECAY_SLACK = 1e-8
DECAY_RATE = 0.5


# ---------------------------------------------------------------------------
# Shape of the stationary point
# ---------------------------------------------------------------------------

def check_tail_monotonicity(sp: StationaryPoint) -> CheckResult:
    """s*[k, ·] starts at 1, stays in [0, 1] and never increases in i."""
    worst = sp.s_star.violations()
    return CheckResult(
        check_name="tail_monotonicity",
        passed=worst <= EXACT_ATOL,
        message=f"largest tail violation {worst:.3e}",
        value=worst,
        bound=EXACT_ATOL,
    )


def check_degree_monotonicity(sp: StationaryPoint) -> CheckResult:
    """Larger-degree classes carry at least as much workload, entrywise."""
    s = sp.s_star.s
    if s.shape[0] < 2:
        return CheckResult("degree_monotonicity", True, "single degree class; nothing to compare", 0.0, 0.0)
    worst = float(max(-np.min(np.diff(s, axis=0)), 0.0))
    return CheckResult(
        check_name="degree_monotonicity",
        passed=worst <= EXACT_ATOL,
        message=f"largest decrease across ascending degrees {worst:.3e}",
        value=worst,
        bound=EXACT_ATOL,
    )


def check_tail_bounds(
    sp: StationaryPoint, profile: DegreeProfile, lam: float, mu: float, x_c: float
) -> CheckResult:
    """Every s*[k, i] lies between the lower and upper doubly-exponential envelopes."""
    s = sp.s_star.s
    worst = 0.0
    worst_at = None
    for i in range(1, s.shape[1]):
        lower, upper = tail_bounds(profile, lam, mu, x_c, i)
        excess = max(float(np.max(s[:, i] - upper)), float(np.max(lower - s[:, i])))
        if excess > worst:
            worst, worst_at = excess, i
    message = "all entries inside the envelopes" if worst_at is None else f"largest excursion {worst:.3e} at i={worst_at}"
    return CheckResult("tail_bounds", worst <= EXACT_ATOL, message, worst, EXACT_ATOL)


def check_recursion_residual(
    sp: StationaryPoint, profile: DegreeProfile, lam: float, mu: float, x_c: float
) -> CheckResult:
    """Aggregated tails satisfy s_i = (x_cλ/(k̄μ))·s_{i-1}·s_(k),i-1."""
    residual = recursion_residual(sp, profile, lam, mu, x_c)
    return CheckResult(
        check_name="recursion_residual",
        passed=residual <= IDENTITY_ATOL,
        message=f"max residual {residual:.3e}",
        value=residual,
        bound=IDENTITY_ATOL,
    )


# ---------------------------------------------------------------------------
# Independent solvers and closed forms
# ---------------------------------------------------------------------------

def check_fixed_point_vs_ode(
    sp: StationaryPoint, profile: DegreeProfile, lam: float, mu: float, x_c: float
) -> CheckResult:
    """Fixed-point iteration and LSODA reach the same stationary point."""
    ode = stationary_point_ode(profile, lam, mu, x_c, i_max=sp.s_star.i_max)
    gap = float(np.max(np.abs(ode.s_star.s - sp.s_star.s)))
    return CheckResult(
        check_name="fixed_point_vs_ode",
        passed=gap <= IDENTITY_ATOL,
        message=f"sup-norm gap {gap:.3e} ({ode.iterations} LSODA evaluations)",
        value=gap,
        bound=IDENTITY_ATOL,
    )


def check_busy_probability(
    profile: DegreeProfile, lam: float, mu: float, loads: list[float], tol: float = 1e-9
) -> CheckResult:
    """Σ_k p(k)s*[k, 1] equals the collaborative load x_cλ/μ across a load grid."""
    worst = 0.0
    for load in loads:
        x_c = _x_c_for_load(load, lam)
        sp = stationary_point(profile, lam, mu, x_c, tol, cross_check=False)
        worst = max(worst, abs(busy_probability(sp, profile) - x_c * lam / mu))
    return CheckResult(
        check_name="busy_probability",
        passed=worst <= IDENTITY_ATOL,
        message=f"largest deviation {worst:.3e} over {len(loads)} loads",
        value=worst,
        bound=IDENTITY_ATOL,
    )


def check_homogeneous_closed_form(
    degree: int, lam: float, mu: float, loads: list[float], tol: float = 1e-9
) -> CheckResult:
    """A single degree class reproduces s*_i = ρ^(2^i − 1)."""
    profile = DegreeProfile.homogeneous(degree)
    worst = 0.0
    for load in loads:
        x_c = _x_c_for_load(load, lam)
        sp = stationary_point(profile, lam, mu, x_c, tol, cross_check=False)
        rho = x_c * lam / mu
        exact = rho ** (2.0 ** np.arange(sp.s_star.i_max + 1) - 1.0)
        worst = max(worst, float(np.max(np.abs(sp.s_star.s[0] - exact))))
    return CheckResult(
        check_name="homogeneous_closed_form",
        passed=worst <= IDENTITY_ATOL,
        message=f"largest deviation {worst:.3e} for degree {degree}",
        value=worst,
        bound=IDENTITY_ATOL,
    )


def _x_c_for_load(load: float, lam: float) -> float:
    if lam <= 0 or not 0.0 <= load <= lam:
        raise InvalidArgumentError(f"load {load} cannot be reached with lambda={lam}")
    return load / lam


# ---------------------------------------------------------------------------
# Dynamics
# ---------------------------------------------------------------------------

def check_lipschitz(
    profile: DegreeProfile, lam: float, mu: float, x_c: float,
    trials: int = 100, seed: int | None = None,
) -> CheckResult:
    """Observed drift slopes stay below C = 3x_cλ(1 + δ₁) + 2μ."""
    ratio = lipschitz_check(profile, lam, mu, x_c, trials=trials, seed=seed)
    bound = lipschitz_constant(profile, lam, mu, x_c)
    return CheckResult(
        check_name="lipschitz",
        passed=ratio <= bound,
        message=f"largest ratio {ratio:.4f} over {trials} pairs",
        value=ratio,
        bound=bound,
    )


def check_dominance(
    sp: StationaryPoint, profile: DegreeProfile, lam: float, mu: float, x_c: float,
    pairs: int = 20, seed: int | None = None, t_end: float = 10.0,
) -> CheckResult:
    """Ordered initial states stay ordered along the flow.

    Even pairs are (max, min) of two random states; odd pairs bracket s*.
    """
    rng = np.random.default_rng(seed)
    n_classes, i_max = sp.s_star.n_classes, sp.s_star.i_max
    worst = 0.0
    for j in range(pairs):
        if j % 2 == 0:
            a = MeanFieldState.random(n_classes, i_max, rng).s
            b = MeanFieldState.random(n_classes, i_max, rng).s
            upper, lower = MeanFieldState(np.maximum(a, b)), MeanFieldState(np.minimum(a, b))
        else:
            upper, lower = random_dominating_state(sp, rng), random_dominated_state(sp, rng)
        hi = integrate(upper, profile, lam, mu, x_c, t_end, sample_every=0.5)
        lo = integrate(lower, profile, lam, mu, x_c, t_end, sample_every=0.5)
        for s_hi, s_lo in zip(hi.states, lo.states):
            worst = max(worst, float(np.max(s_lo.s - s_hi.s)))
    return CheckResult(
        check_name="dominance",
        passed=worst <= ORDER_ATOL,
        message=f"largest order violation {worst:.3e} over {pairs} pairs",
        value=worst,
        bound=ORDER_ATOL,
    )


def scaled_initial_states(sp: StationaryPoint, count: int) -> list[MeanFieldState]:
    """Half below s* (θ·s*, θ from 0 to 0.8), half above (min(1, (1+θ)s*))."""
    n_below = max((count + 1) // 2, 1)
    n_above = max(count - n_below, 1)
    s_star = sp.s_star.s
    states = []
    for theta in np.linspace(0.0, 0.8, n_below) if n_below > 1 else [0.0]:
        s = theta * s_star
        s[:, 0] = 1.0
        states.append(MeanFieldState(s))
    for j in range(n_above):
        states.append(MeanFieldState(np.minimum(1.0, (1.0 + 0.05 * (j + 1)) * s_star)))
    return states


def check_decay(
    profile: DegreeProfile, lam: float, mu: float, x_c: float,
    trajectories: int = 10, t_end: float = 20.0, tol: float = 1e-9,
) -> CheckResult:
    """φ(t) ≤ φ(0)e^(−t/2) along trajectories started from scaled copies of s*.

    The ½ rate is only attainable at light collaborative load; at heavier load
    the slowest linear mode decays more slowly (see check_convergence).
    """
    sp = stationary_point(profile, lam, mu, x_c, tol)
    worst = -math.inf
    for state in scaled_initial_states(sp, trajectories):
        traj = integrate(state, profile, lam, mu, x_c, t_end, sample_every=0.1)
        phi0 = lyapunov_phi(traj.states[0], sp, profile)
        for t, st in zip(traj.times, traj.states):
            envelope = phi0 * math.exp(-DECAY_RATE * t) + DECAY_SLACK
            worst = max(worst, lyapunov_phi(st, sp, profile) - envelope)
    return CheckResult(
        check_name="decay_envelope",
        passed=worst <= 0.0,
        message=f"largest excess over the envelope {worst:.3e} ({trajectories} trajectories, load {x_c * lam:.2f})",
        value=worst,
        bound=0.0,
    )


def check_convergence(
    sp: StationaryPoint, profile: DegreeProfile, lam: float, mu: float, x_c: float,
    t_end: float = 40.0, reduction: float = 1e-3,
) -> CheckResult:
    """φ falls by ``reduction`` from the empty state; reports the late decay rate."""
    empty = MeanFieldState.empty(sp.s_star.n_classes, sp.s_star.i_max)
    traj = integrate(empty, profile, lam, mu, x_c, t_end, sample_every=t_end / 2)
    phis = [lyapunov_phi(st, sp, profile) for st in traj.states]
    phi0, phi_mid, phi_end = phis[0], phis[-2], phis[-1]
    rate = math.log(phi_mid / phi_end) / (t_end / 2) if phi_end > 0 and phi_mid > 0 else math.inf
    return CheckResult(
        check_name="exponential_convergence",
        passed=phi_end <= reduction * phi0,
        message=f"phi {phi0:.3e} -> {phi_end:.3e} by t={t_end:g}; late decay rate {rate:.3f}",
        value=rate,
        bound=DECAY_RATE,
    )


# ---------------------------------------------------------------------------
# Suite
# ---------------------------------------------------------------------------

def run_property_suite(
    profile: DegreeProfile,
    lam: float,
    mu: float,
    x_c: float,
    *,
    decay_x_c: float | None = None,
    loads: list[float] | None = None,
    tol: float = 1e-9,
    seed: int | None = 0,
    lipschitz_trials: int = 100,
    dominance_pairs: int = 20,
    decay_trajectories: int = 10,
) -> list[CheckResult]:
    """Every property check at one operating point, in a fixed order."""
    loads = loads if loads is not None else [round(0.1 * j, 1) for j in range(1, 10)]
    decay_x_c = x_c if decay_x_c is None else decay_x_c
    sp = stationary_point(profile, lam, mu, x_c, tol)
    results = [
        check_tail_monotonicity(sp),
        check_fixed_point_vs_ode(sp, profile, lam, mu, x_c),
        check_dominance(sp, profile, lam, mu, x_c, pairs=dominance_pairs, seed=seed),
        check_decay(profile, lam, mu, decay_x_c, trajectories=decay_trajectories, tol=tol),
        check_convergence(sp, profile, lam, mu, x_c),
        check_degree_monotonicity(sp),
        check_tail_bounds(sp, profile, lam, mu, x_c),
        check_recursion_residual(sp, profile, lam, mu, x_c),
        check_busy_probability(profile, lam, mu, loads, tol),
        check_lipschitz(profile, lam, mu, x_c, trials=lipschitz_trials, seed=seed),
        check_homogeneous_closed_form(profile.k_min, lam, mu, loads, tol),
    ]
    for r in results:
        if r.passed:
            logger.info("Check %s passed: %s", r.check_name, r.message)
        else:
            logger.warning("Check %s FAILED: %s", r.check_name, r.message)
    return results
