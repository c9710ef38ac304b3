"""Degree-class mean-field model of power-of-two collaboration.

State ``s[k, i]`` is the fraction of degree-k users holding at least i tasks.
With a = x_c·λ the drift is

    F[k, i] = -μ(s[k, i] - s[k, i+1]) + a(s[k, i-1] - s[k, i])·z[k, i]
    z[k, i] = ½ Σ_k' ((k' + k)/k̄) p(k') (s[k', i-1] + s[k', i])

with row 0 pinned at 1 and s[k, i_max + 1] taken as 0.

Stationary points come from two independent routes: plain fixed-point iteration
of the map G (cross-checked against a long RK4 run) and scipy's LSODA.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.integrate import solve_ivp

from collaboration.models import (
    DegreeProfile,
    Drift,
    InfeasibleError,
    InvalidArgumentError,
    MeanFieldState,
    NumericalFailureError,
    StationaryPoint,
    Trajectory,
)

logger = logging.getLogger(__name__)

DEFAULT_DT = 0.01
TRUNCATION_EPS = 1e-12
TRUNCATION_CAP = 32
MONOTONE_SLACK = 1e-9
MAX_ITERATIONS = 100_000


# ---------------------------------------------------------------------------
# Argument checks
# ---------------------------------------------------------------------------

def _check_rates(lam: float, mu: float, x_c: float) -> None:
    if not 0.0 <= x_c <= 1.0:
        raise InvalidArgumentError(f"x_c must be in [0, 1], got {x_c}")
    if not lam >= 0 or not mu > 0:
        raise InvalidArgumentError(f"rates must satisfy lambda >= 0 and mu > 0, got {lam}, {mu}")


def _check_shape(state: MeanFieldState, profile: DegreeProfile) -> None:
    if state.n_classes != profile.n_classes:
        raise InvalidArgumentError(
            f"state has {state.n_classes} degree classes, profile has {profile.n_classes}"
        )


def stability_ratio(profile: DegreeProfile, lam: float, mu: float, x_c: float) -> float:
    """(1+δ₁)/2 · x_cλ/μ; the mean-field stationary point is guaranteed below 1."""
    return 0.5 * (1.0 + profile.delta1) * x_c * lam / mu


def _require_stable(profile: DegreeProfile, lam: float, mu: float, x_c: float) -> float:
    ratio = stability_ratio(profile, lam, mu, x_c)
    if ratio >= 1.0:
        raise InfeasibleError(
            "Collaborative load violates the stability condition",
            {"x_c": x_c, "lambda": lam, "mu": mu, "delta1": profile.delta1, "ratio": ratio},
        )
    return ratio


# ---------------------------------------------------------------------------
# Drift
# ---------------------------------------------------------------------------

def _coupling(s: np.ndarray, k: np.ndarray, p: np.ndarray, kbar: float) -> np.ndarray:
    """z[:, i] for i >= 1 as a (K, i_max) array."""
    m = p @ s
    w = (p * k) @ s
    return 0.5 * ((w[:-1] + w[1:])[None, :] + k[:, None] * (m[:-1] + m[1:])[None, :]) / kbar


def _drift_array(
    s: np.ndarray, k: np.ndarray, p: np.ndarray, kbar: float, a: float, mu: float
) -> np.ndarray:
    out = np.zeros_like(s)
    if s.shape[1] < 2:
        return out
    upper = np.zeros_like(s[:, 1:])
    upper[:, :-1] = s[:, 2:]
    z = _coupling(s, k, p, kbar)
    out[:, 1:] = -mu * (s[:, 1:] - upper) + a * (s[:, :-1] - s[:, 1:]) * z
    return out


def drift(
    state: MeanFieldState, profile: DegreeProfile, lam: float, mu: float, x_c: float
) -> Drift:
    """Mean-field drift F(s); row i = 0 is zero."""
    _check_rates(lam, mu, x_c)
    _check_shape(state, profile)
    return Drift(_drift_array(
        state.s, profile.degrees, profile.probabilities, profile.mean_degree, x_c * lam, mu
    ))


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

def _repair(s: np.ndarray, step: int) -> np.ndarray:
    """Clip tiny excursions back onto monotone tails; fail on anything larger."""
    if not np.all(np.isfinite(s)):
        raise NumericalFailureError("integration produced non-finite values", step, math.inf)
    violation = MeanFieldState(s).violations()
    if violation > MONOTONE_SLACK:
        raise NumericalFailureError("integration left the monotone tail space", step, violation)
    if violation > 0.0:
        s = np.clip(s, 0.0, 1.0)
        s[:, 0] = 1.0
        s = np.minimum.accumulate(s, axis=1)
    return s


def integrate(
    state0: MeanFieldState,
    profile: DegreeProfile,
    lam: float,
    mu: float,
    x_c: float,
    t_end: float,
    dt: float = DEFAULT_DT,
    sample_every: float | None = None,
) -> Trajectory:
    """Classical fixed-step RK4 on the drift.

    States are sampled every ``sample_every`` time units (default: every step);
    the first sample is ``state0`` and the last is the state at ``t_end``.
    """
    _check_rates(lam, mu, x_c)
    _check_shape(state0, profile)
    if not dt > 0:
        raise InvalidArgumentError(f"dt must be > 0, got {dt}")
    if not t_end >= 0:
        raise InvalidArgumentError(f"t_end must be >= 0, got {t_end}")
    state0.validate(atol=MONOTONE_SLACK)

    k, p, kbar = profile.degrees, profile.probabilities, profile.mean_degree
    a = x_c * lam
    n_steps = max(int(round(t_end / dt)), 1 if t_end > 0 else 0)
    h = t_end / n_steps if n_steps else 0.0
    stride = 1 if sample_every is None else max(int(round(sample_every / h)), 1) if h else 1

    s = state0.s.copy()
    times = [0.0]
    states = [MeanFieldState(s.copy())]

    def f(y: np.ndarray) -> np.ndarray:
        return _drift_array(y, k, p, kbar, a, mu)

    for step in range(1, n_steps + 1):
        k1 = f(s)
        k2 = f(s + 0.5 * h * k1)
        k3 = f(s + 0.5 * h * k2)
        k4 = f(s + h * k3)
        s = _repair(s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), step)
        if step % stride == 0 or step == n_steps:
            times.append(step * h)
            states.append(MeanFieldState(s.copy()))

    return Trajectory(times=np.asarray(times), states=states)


# ---------------------------------------------------------------------------
# Stationary point
# ---------------------------------------------------------------------------

def tail_bounds(
    profile: DegreeProfile, lam: float, mu: float, x_c: float, i: int
) -> tuple[float, float]:
    """(lower, upper) envelope on s*[k, i] valid for every degree class."""
    _check_rates(lam, mu, x_c)
    _require_stable(profile, lam, mu, x_c)
    if i < 0:
        raise InvalidArgumentError(f"index i must be >= 0, got {i}")
    rho = x_c * lam / mu
    exponent = 2 ** i - 1
    upper = (0.5 * (1.0 + profile.delta1) * rho) ** exponent
    lower = (0.5 * (1.0 + profile.delta2) * rho) ** exponent
    return lower, upper


def truncation_depth(
    profile: DegreeProfile,
    lam: float,
    mu: float,
    x_c: float,
    eps: float = TRUNCATION_EPS,
    cap: int = TRUNCATION_CAP,
) -> int:
    """Smallest i whose upper tail bound drops below ``eps``, at most ``cap``."""
    for i in range(1, cap + 1):
        if tail_bounds(profile, lam, mu, x_c, i)[1] < eps:
            return i
    return cap


def _aggregate(
    s: np.ndarray, profile: DegreeProfile, lam: float, mu: float, x_c: float,
    residual: float, iterations: int,
) -> StationaryPoint:
    p = profile.probabilities
    return StationaryPoint(
        s_star=MeanFieldState(s),
        x_c=x_c,
        lam=lam,
        mu=mu,
        tail=p @ s,
        weighted_tail=(p * profile.degrees) @ s,
        residual=residual,
        iterations=iterations,
    )


def _cross_check_horizon(profile: DegreeProfile, i_max: int, tol: float) -> float:
    """Horizon after which a ½-rate decay of φ pins every entry within ``tol``."""
    scale = 2.0 ** i_max / float(np.min(profile.probabilities[profile.probabilities > 0]))
    return 2.0 * math.log(scale / tol)


def stationary_point(
    profile: DegreeProfile,
    lam: float,
    mu: float,
    x_c: float,
    tol: float = 1e-9,
    *,
    i_max: int | None = None,
    initial: MeanFieldState | None = None,
    cross_check: bool = True,
    max_iterations: int = MAX_ITERATIONS,
) -> StationaryPoint:
    """Zero of the drift by fixed-point iteration of G.

    G[k, i] = (a·s[k, i-1]·z[k, i] + μ·s[k, i+1]) / (a·z[k, i] + μ).

    Iterates until the sup-norm change is below tol/100 and the drift residual
    below tol/10. ``initial`` warm-starts the iteration (searches pass the
    solution at a neighboring x); a warm start that fails to converge is
    retried from the empty state. With ``cross_check`` the result is compared
    with a long RK4 run from the empty state.
    """
    _check_rates(lam, mu, x_c)
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be > 0, got {tol}")
    _require_stable(profile, lam, mu, x_c)
    if i_max is None:
        i_max = truncation_depth(profile, lam, mu, x_c)
    if i_max < 1:
        raise InvalidArgumentError(f"i_max must be >= 1, got {i_max}")

    a = x_c * lam
    empty = MeanFieldState.empty(profile.n_classes, i_max)
    if a == 0.0:
        return _aggregate(empty.s, profile, lam, mu, x_c, 0.0, 0)

    start = empty
    if initial is not None and initial.s.shape == empty.s.shape:
        start = initial
    try:
        s, residual, iterations = _iterate_map(start.s, profile, a, mu, tol, max_iterations)
    except NumericalFailureError:
        if start is empty:
            raise
        logger.info("Warm start at x_c=%.6f did not converge; restarting from empty state", x_c)
        s, residual, iterations = _iterate_map(empty.s, profile, a, mu, tol, max_iterations)

    logger.debug(
        "Fixed point x_c=%.6f: %d iterations, residual %.3e, i_max=%d",
        x_c, iterations, residual, i_max,
    )
    if cross_check:
        _cross_check(s, profile, lam, mu, x_c, tol)
    return _aggregate(s, profile, lam, mu, x_c, residual, iterations)


def _iterate_map(
    s0: np.ndarray, profile: DegreeProfile, a: float, mu: float, tol: float, max_iterations: int
) -> tuple[np.ndarray, float, int]:
    k, p, kbar = profile.degrees, profile.probabilities, profile.mean_degree
    s = s0.copy()
    upper = np.zeros_like(s[:, 1:])
    residual = math.inf
    for iteration in range(1, max_iterations + 1):
        z = _coupling(s, k, p, kbar)
        upper[:, :-1] = s[:, 2:]
        updated = (a * s[:, :-1] * z + mu * upper) / (a * z + mu)
        change = float(np.max(np.abs(updated - s[:, 1:])))
        s[:, 1:] = updated
        if change < tol / 100.0:
            residual = float(np.max(np.abs(_drift_array(s, k, p, kbar, a, mu))))
            if residual < tol / 10.0:
                return s, residual, iteration
    raise NumericalFailureError("fixed-point iteration did not converge", max_iterations, residual)


def _cross_check(
    s: np.ndarray, profile: DegreeProfile, lam: float, mu: float, x_c: float, tol: float
) -> None:
    i_max = s.shape[1] - 1
    horizon = _cross_check_horizon(profile, i_max, tol)
    state = MeanFieldState.empty(profile.n_classes, i_max)
    gap = math.inf
    elapsed = 0.0
    step = horizon
    # the horizon doubles up to three times before the methods are declared in disagreement
    for _ in range(4):
        state = integrate(state, profile, lam, mu, x_c, step, sample_every=step).final
        elapsed += step
        step = elapsed
        gap = float(np.max(np.abs(state.s - s)))
        if gap <= 10.0 * tol:
            logger.debug("ODE cross-check agrees within %.3e after t=%.1f", gap, elapsed)
            return
    raise NumericalFailureError(
        "fixed point and long-horizon ODE disagree", int(elapsed / DEFAULT_DT), gap
    )


def stationary_point_ode(
    profile: DegreeProfile,
    lam: float,
    mu: float,
    x_c: float,
    *,
    i_max: int | None = None,
    t_end: float = 200.0,
    rtol: float = 1e-10,
    atol: float = 1e-13,
) -> StationaryPoint:
    """Stationary point as the t_end state of an LSODA run from the empty state."""
    _check_rates(lam, mu, x_c)
    _require_stable(profile, lam, mu, x_c)
    if i_max is None:
        i_max = truncation_depth(profile, lam, mu, x_c)
    k, p, kbar = profile.degrees, profile.probabilities, profile.mean_degree
    a = x_c * lam
    shape = (profile.n_classes, i_max + 1)

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        return _drift_array(y.reshape(shape), k, p, kbar, a, mu).ravel()

    y0 = MeanFieldState.empty(profile.n_classes, i_max).s.ravel()
    solution = solve_ivp(rhs, (0.0, t_end), y0, method="LSODA", rtol=rtol, atol=atol)
    if not solution.success:
        raise NumericalFailureError(f"LSODA failed: {solution.message}", int(solution.nfev))
    s = np.minimum.accumulate(np.clip(solution.y[:, -1].reshape(shape), 0.0, 1.0), axis=1)
    residual = float(np.max(np.abs(_drift_array(s, k, p, kbar, a, mu))))
    return _aggregate(s, profile, lam, mu, x_c, residual, int(solution.nfev))


# ---------------------------------------------------------------------------
# Aggregates and structural quantities
# ---------------------------------------------------------------------------

def busy_probability(sp: StationaryPoint, profile: DegreeProfile) -> float:
    """Σ_k p(k)·s*[k, 1]; equals x_cλ/μ at stationarity."""
    _check_shape(sp.s_star, profile)
    return float(profile.probabilities @ sp.s_star.s[:, 1])


def class_workload(sp: StationaryPoint) -> np.ndarray:
    """Mean queue length Σ_{i≥1} s*[k, i] per degree class."""
    return sp.s_star.s[:, 1:].sum(axis=1)


def recursion_residual(
    sp: StationaryPoint, profile: DegreeProfile, lam: float, mu: float, x_c: float
) -> float:
    """max_i |s_i* − (x_cλ/(k̄μ))·s*_{i−1}·s*_{(k),i−1}| over i ≥ 1."""
    _check_shape(sp.s_star, profile)
    coefficient = x_c * lam / (profile.mean_degree * mu)
    predicted = coefficient * sp.tail[:-1] * sp.weighted_tail[:-1]
    if predicted.size == 0:
        return 0.0
    return float(np.max(np.abs(sp.tail[1:] - predicted)))


def lyapunov_phi(state: MeanFieldState, sp: StationaryPoint, profile: DegreeProfile) -> float:
    """φ = Σ_i |Σ_k p(k)(s[k, i] − s*[k, i])| / 2^i."""
    _check_shape(state, profile)
    if state.s.shape != sp.s_star.s.shape:
        raise InvalidArgumentError(
            f"state shape {state.s.shape} does not match stationary point {sp.s_star.s.shape}"
        )
    diff = np.abs(profile.probabilities @ (state.s - sp.s_star.s))
    weights = 0.5 ** np.arange(diff.size)
    return float(diff @ weights)


def lipschitz_constant(profile: DegreeProfile, lam: float, mu: float, x_c: float) -> float:
    """C = 3·x_cλ·(1 + k_max/k̄) + 2μ for the sup-norm."""
    return 3.0 * x_c * lam * (1.0 + profile.delta1) + 2.0 * mu


def lipschitz_check(
    profile: DegreeProfile,
    lam: float,
    mu: float,
    x_c: float,
    trials: int = 100,
    seed: int | np.random.Generator | None = None,
    i_max: int = 16,
) -> float:
    """Largest observed ‖F(s) − F(ŝ)‖∞ / ‖s − ŝ‖∞ over random valid pairs.

    Even trials use two independent random states; odd trials use a small
    convex perturbation of the first, which tests the local slope.
    """
    _check_rates(lam, mu, x_c)
    if trials < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    k, p, kbar = profile.degrees, profile.probabilities, profile.mean_degree
    a = x_c * lam
    worst = 0.0
    for trial in range(trials):
        s = MeanFieldState.random(profile.n_classes, i_max, rng).s
        other = MeanFieldState.random(profile.n_classes, i_max, rng).s
        if trial % 2:
            eps = 10.0 ** rng.uniform(-6, -1)
            other = (1.0 - eps) * s + eps * other
        distance = float(np.max(np.abs(s - other)))
        if distance == 0.0:
            continue
        gap = np.max(np.abs(_drift_array(s, k, p, kbar, a, mu) - _drift_array(other, k, p, kbar, a, mu)))
        worst = max(worst, float(gap) / distance)
    return worst


def random_dominating_state(sp: StationaryPoint, rng: np.random.Generator) -> MeanFieldState:
    """max(s*, r) for a random valid r; dominates s* entrywise."""
    r = MeanFieldState.random(sp.s_star.n_classes, sp.s_star.i_max, rng)
    return MeanFieldState(np.maximum(sp.s_star.s, r.s))


def random_dominated_state(sp: StationaryPoint, rng: np.random.Generator) -> MeanFieldState:
    """min(s*, r) for a random valid r; dominated by s* entrywise."""
    r = MeanFieldState.random(sp.s_star.n_classes, sp.s_star.i_max, rng)
    return MeanFieldState(np.minimum(sp.s_star.s, r.s))
