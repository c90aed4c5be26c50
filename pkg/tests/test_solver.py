import math

import numpy as np
import pytest

from relaycap.analytic import (
    epsilon_capacity_base,
    exact_outage_ir,
    gamma_threshold,
    optimal_relay_distance,
)
from relaycap.channel import ChannelVariances
from relaycap.solver import (
    CapacitySolution,
    InfeasibleRateError,
    McBudgetError,
    invert_capacity,
    optimize_placement,
)


class TestInvertCapacity:
    def test_exact_inverse_property(self, unit_variances):
        eps = 1e-3
        sol = invert_capacity(eps, 1.0, unit_variances, evaluator="exact")
        # the returned rate is feasible and within tol of the budget boundary
        assert sol.achieved_outage <= eps
        bumped = exact_outage_ir(gamma_threshold(sol.rate + 2e-9, 1.0, 2), unit_variances)
        assert bumped > eps

    def test_agrees_with_asymptotic_formula_at_small_eps(self, unit_variances):
        sol = invert_capacity(1e-4, 1.0, unit_variances, evaluator="exact")
        base = epsilon_capacity_base(1.0, 1e-4, unit_variances)
        assert sol.rate == pytest.approx(base, rel=0.02)
        assert sol.evaluator == "exact"

    def test_asymptotic_evaluator_recovers_closed_form(self, skew_variances):
        eps = 1e-4
        sol = invert_capacity(eps, 2.0, skew_variances, evaluator="asymptotic")
        assert sol.rate == pytest.approx(epsilon_capacity_base(2.0, eps, skew_variances), rel=1e-6)

    def test_monotone_in_epsilon_and_snr(self, skew_variances):
        rates = [invert_capacity(e, 1.0, skew_variances).rate
                 for e in np.logspace(-6, -2, 12)]
        assert np.all(np.diff(rates) > 0)
        rates = [invert_capacity(1e-4, s, skew_variances).rate
                 for s in np.logspace(-2, 1, 12)]
        assert np.all(np.diff(rates) > 0)

    def test_bracket_width_contract(self, unit_variances):
        tol = 1e-9
        sol = invert_capacity(1e-4, 1.0, unit_variances, tol=tol)
        p_next = exact_outage_ir(gamma_threshold(sol.rate + tol, 1.0, 2), unit_variances)
        assert p_next > 1e-4

    def test_infeasible_at_zero_rate(self, unit_variances):
        with pytest.raises(InfeasibleRateError):
            invert_capacity(0.5, 1.0, unit_variances, evaluator=lambda r: 0.9)

    def test_bracket_growth_failure(self, unit_variances):
        with pytest.raises(InfeasibleRateError):
            invert_capacity(0.5, 1.0, unit_variances, evaluator=lambda r: 0.0)

    def test_rejects_bad_epsilon(self, unit_variances):
        for eps in (0.0, 1.0, -0.1, 2.0):
            with pytest.raises(ValueError):
                invert_capacity(eps, 1.0, unit_variances)

    def test_rejects_unknown_evaluator(self, unit_variances):
        with pytest.raises(ValueError):
            invert_capacity(1e-3, 1.0, unit_variances, evaluator="magic")

    def test_callable_evaluator(self, unit_variances):
        # deterministic toy curve p = min(1, r): capacity at eps is eps
        sol = invert_capacity(0.25, 1.0, unit_variances, evaluator=lambda r: min(1.0, r))
        assert sol.rate == pytest.approx(0.25, abs=1e-8)

    def test_solution_validates_rate(self):
        with pytest.raises(ValueError):
            CapacitySolution(rate=-1.0, achieved_outage=0.0, iterations=1, evaluator="exact")


class TestMcInversion:
    # The interval at a bisection midpoint must separate from epsilon before
    # the trial budget runs out, so (tol, budget, epsilon) must leave margin:
    # hits needed scale like (3 / (tol * dlnp/dR))^2 / epsilon.

    def test_converges_near_exact_solution(self, unit_variances):
        eps = 0.05
        sol = invert_capacity(eps, 1.0, unit_variances, evaluator="mc", tol=2e-3,
                              mc_trials=50_000, mc_budget=30_000_000, seed=31)
        exact = invert_capacity(eps, 1.0, unit_variances, evaluator="exact").rate
        assert sol.rate == pytest.approx(exact, rel=0.025)
        assert sol.evaluator == "monte_carlo"

    def test_budget_exhaustion_raises(self, unit_variances):
        with pytest.raises(McBudgetError):
            invert_capacity(1e-6, 1.0, unit_variances, evaluator="mc",
                            tol=1e-6, mc_trials=1_000, mc_budget=4_000, seed=1)

    def test_deterministic_given_seed(self, unit_variances):
        kw = dict(evaluator="mc", tol=2e-3, mc_trials=50_000,
                  mc_budget=30_000_000, seed=77)
        a = invert_capacity(0.05, 1.0, unit_variances, **kw)
        b = invert_capacity(0.05, 1.0, unit_variances, **kw)
        assert a == b


class TestOptimizePlacement:
    @pytest.mark.parametrize("alpha", [1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 8.0])
    def test_matches_closed_form(self, alpha):
        assert abs(optimize_placement(alpha) - optimal_relay_distance(alpha)) < 1e-9

    def test_free_space_value(self):
        assert optimize_placement(2.0) == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_alpha_three_value(self):
        assert optimize_placement(3.0) == pytest.approx(math.sqrt(2.0) - 1.0, abs=1e-9)

    def test_alpha_five_value(self):
        assert optimize_placement(5.0) == pytest.approx(1.0 / (1.0 + 2.0 ** 0.25), abs=1e-9)

    def test_rejects_alpha_at_most_one(self):
        with pytest.raises(ValueError):
            optimize_placement(1.0)

    def test_respects_tolerance_argument(self):
        coarse = optimize_placement(3.0, tol=1e-3)
        assert abs(coarse - optimal_relay_distance(3.0)) < 1e-3
