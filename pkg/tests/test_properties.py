"""Property-suite tests — structural checks on the mean-field model.

Covers:
- each check passes at the evaluation operating point (collaborative load 0.7)
- decay envelope at light load, measured convergence at the table load
- checks report failure (without raising) on doctored stationary points
- run_property_suite: fixed order, all checks pass, result records serialize
"""

from __future__ import annotations

import numpy as np
import pytest

from collaboration.meanfield import stationary_point
from collaboration.models import (
    CheckResult,
    DegreeProfile,
    InvalidArgumentError,
    MeanFieldState,
    StationaryPoint,
)
from collaboration.properties import (
    check_busy_probability,
    check_convergence,
    check_decay,
    check_degree_monotonicity,
    check_dominance,
    check_fixed_point_vs_ode,
    check_homogeneous_closed_form,
    check_lipschitz,
    check_recursion_residual,
    check_tail_bounds,
    check_tail_monotonicity,
    run_property_suite,
    scaled_initial_states,
)

LAM = 0.9
MU = 1.0
X_C = 0.7 / LAM
# at load 0.7 the slowest mode decays like exp(-0.24t), slower than the exp(-t/2) envelope
DECAY_X_C = 0.3 / LAM
LOADS = [round(0.1 * j, 1) for j in range(1, 10)]


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def profile():
    return DegreeProfile.uniform([6, 7, 8, 9])


@pytest.fixture(scope="module")
def sp(profile):
    return stationary_point(profile, LAM, MU, X_C)


def doctored(sp: StationaryPoint, s: np.ndarray) -> StationaryPoint:
    return StationaryPoint(
        s_star=MeanFieldState(s), x_c=sp.x_c, lam=sp.lam, mu=sp.mu,
        tail=sp.tail, weighted_tail=sp.weighted_tail,
    )


# ---------------------------------------------------------------------------
# Passing checks
# ---------------------------------------------------------------------------

class TestChecksPass:
    def test_tail_monotonicity(self, sp):
        assert check_tail_monotonicity(sp).passed

    def test_degree_monotonicity(self, sp):
        assert check_degree_monotonicity(sp).passed

    def test_single_class_degree_monotonicity(self):
        single = stationary_point(DegreeProfile.homogeneous(6), LAM, MU, X_C)
        result = check_degree_monotonicity(single)
        assert result.passed
        assert "single degree class" in result.message

    def test_tail_bounds(self, sp, profile):
        assert check_tail_bounds(sp, profile, LAM, MU, X_C).passed

    def test_recursion_residual(self, sp, profile):
        result = check_recursion_residual(sp, profile, LAM, MU, X_C)
        assert result.passed
        assert result.value <= 1e-6

    def test_fixed_point_vs_ode(self, sp, profile):
        assert check_fixed_point_vs_ode(sp, profile, LAM, MU, X_C).passed

    def test_busy_probability(self, profile):
        result = check_busy_probability(profile, LAM, MU, LOADS)
        assert result.passed
        assert "9 loads" in result.message

    def test_homogeneous_closed_form(self):
        assert check_homogeneous_closed_form(6, LAM, MU, LOADS).passed

    def test_lipschitz(self, profile):
        result = check_lipschitz(profile, LAM, MU, X_C, trials=100, seed=0)
        assert result.passed
        assert result.bound == pytest.approx(6.62)

    def test_dominance(self, sp, profile):
        result = check_dominance(sp, profile, LAM, MU, X_C, pairs=20, seed=0)
        assert result.passed
        assert result.value <= 1e-9

    def test_decay_at_light_load(self, profile):
        assert check_decay(profile, LAM, MU, DECAY_X_C, trajectories=10).passed

    def test_convergence_at_table_load(self, sp, profile):
        result = check_convergence(sp, profile, LAM, MU, X_C)
        assert result.passed
        assert result.check_name == "exponential_convergence"
        assert 0.0 < result.value < np.inf

    def test_unreachable_load(self, profile):
        with pytest.raises(InvalidArgumentError, match="cannot be reached"):
            check_busy_probability(profile, LAM, MU, [0.95])


# ---------------------------------------------------------------------------
# Failing checks report instead of raising
# ---------------------------------------------------------------------------

class TestChecksFail:
    def test_increasing_tail(self, sp):
        s = sp.s_star.s.copy()
        s[0, 2] = s[0, 1] + 0.1
        result = check_tail_monotonicity(doctored(sp, s))
        assert not result.passed
        assert result.value == pytest.approx(0.1)

    def test_degree_order_broken(self, sp):
        s = sp.s_star.s.copy()
        s[[0, -1]] = s[[-1, 0]]
        assert not check_degree_monotonicity(doctored(sp, s)).passed

    def test_outside_envelope(self, sp, profile):
        s = sp.s_star.s.copy()
        s[:, 1] = 0.9
        result = check_tail_bounds(doctored(sp, s), profile, LAM, MU, X_C)
        assert not result.passed
        assert "i=1" in result.message


# ---------------------------------------------------------------------------
# Initial states and suite
# ---------------------------------------------------------------------------

class TestSuite:
    def test_scaled_states_bracket_stationary_point(self, sp):
        states = scaled_initial_states(sp, 10)
        assert len(states) == 10
        below, above = states[:5], states[5:]
        for st in states:
            st.validate(atol=1e-12)
        assert all(sp.s_star.dominates(st) for st in below)
        assert all(st.dominates(sp.s_star) for st in above)

    def test_suite_passes(self, profile):
        results = run_property_suite(
            profile, LAM, MU, X_C,
            decay_x_c=DECAY_X_C,
            loads=LOADS,
            seed=0,
            lipschitz_trials=100,
            dominance_pairs=20,
            decay_trajectories=10,
        )
        assert len(results) == 11
        assert all(isinstance(r, CheckResult) for r in results)
        failed = [r.check_name for r in results if not r.passed]
        assert failed == []
        names = [r.check_name for r in results]
        assert names[0] == "tail_monotonicity"
        assert "decay_envelope" in names and "exponential_convergence" in names

    def test_result_serializes(self, sp):
        data = check_tail_monotonicity(sp).to_dict()
        assert data["check_name"] == "tail_monotonicity"
        assert data["passed"] is True
