import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

import dcvar_portfolio as dp
from dcvar_portfolio.multipliers import bisect_increasing, h1_inv_extended
from dcvar_portfolio.oracle import quad_H
from conftest import ALPHA_ANCHOR, CAP, K_BUDGET, KAPPA, W0


def spec_with(alpha=ALPHA_ANCHOR, w0=W0, kappa=KAPPA, B=CAP, K=K_BUDGET):
    return dp.ProblemSpec(w0=w0, alpha=alpha, kappa=kappa, B=B, K=K)


class TestProblemSpec:
    def test_validation(self):
        with pytest.raises(dp.DomainError):
            spec_with(w0=0.0)
        with pytest.raises(dp.DomainError):
            spec_with(alpha=0.5)
        with pytest.raises(dp.DomainError):
            spec_with(kappa=0.5)
        with pytest.raises(dp.DomainError):
            spec_with(kappa=1.0)
        with pytest.raises(dp.DomainError):
            spec_with(alpha=-600.0)  # violates B > -alpha


class TestBudgetI:
    def test_corner_values(self, dist):
        spec = spec_with()
        assert dp.budget_I(dist, spec, 0.0, 0.0) == 0.0
        assert dp.budget_I(dist, spec, math.inf, 5.0) == pytest.approx(
            CAP * dist.EZ, rel=1e-14)
        assert dp.budget_I(dist, spec, 0.0, math.inf) == pytest.approx(
            -ALPHA_ANCHOR * dist.EZ, rel=1e-14)

    def test_monotone_in_each_argument(self, dist):
        spec = spec_with()
        deltas = np.geomspace(1e-4, 5.0, 12)
        rhos = np.geomspace(1e-2, 200.0, 12)
        for rho in rhos:
            vals = [dp.budget_I(dist, spec, float(d), float(rho)) for d in deltas]
            assert all(a < b for a, b in zip(vals, vals[1:]))
        for delta in deltas:
            vals = [dp.budget_I(dist, spec, float(delta), float(r)) for r in rhos]
            assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_domain(self, dist):
        with pytest.raises(dp.DomainError):
            dp.budget_I(dist, spec_with(), -0.1, 1.0)


class TestDeltaBounds:
    def test_branch_continuity_at_pinned_wealth(self, dist):
        # w0 == -alpha EZ: both branches give delta_lower = 0
        alpha = -W0 / dist.EZ
        lo, _ = dp.delta_bounds(dist, spec_with(alpha=alpha))
        assert lo == 0.0
        lo_eps, _ = dp.delta_bounds(dist, spec_with(alpha=alpha * (1 + 1e-12)))
        assert lo_eps == 0.0

    def test_anchor_values_vs_quadrature_inverse(self, dist):
        # Cross-check the closed-form H1_inv against a quadrature-based inverse.
        lo, up = dp.delta_bounds(dist, spec_with())
        assert lo == 0.0  # w0 < -alpha EZ at the anchor
        target = W0 / CAP

        def h1_quad(y):
            return quad_H(dist.m0, dist.nu0, 1, y) - target

        up_oracle = brentq(h1_quad, 1e-8, 1e4, xtol=1e-12, rtol=8.9e-16)
        assert up == pytest.approx(up_oracle, rel=1e-7)

    def test_upper_bound_diverges_as_cap_tightens(self, dist):
        grown = W0 / dist.EZ
        _, up = dp.delta_bounds(dist, spec_with(alpha=-50.0, B=grown * 1.0001))
        assert up > 1e3

    def test_unreachable_cap(self, dist):
        with pytest.raises(dp.InfeasibleSpec):
            dp.delta_bounds(dist, spec_with(alpha=-50.0, B=W0 * 1.01))


class TestLOfDelta:
    def test_endpoint_values_are_k_bounds(self, dist):
        spec = spec_with()
        bounds = dp.k_bounds(dist, spec)
        assert dp.L_of_delta(dist, spec, bounds.delta_lower) == pytest.approx(
            bounds.k_lower, rel=1e-9, abs=1e-9)
        assert dp.L_of_delta(dist, spec, bounds.delta_upper) == pytest.approx(
            bounds.k_upper, rel=1e-9)

    def test_strictly_increasing(self, dist):
        spec = spec_with()
        bounds = dp.k_bounds(dist, spec)
        rng = np.random.default_rng(17)
        lo, up = bounds.delta_lower, bounds.delta_upper
        pairs = np.sort(rng.uniform(lo + 1e-9, up - 1e-9, size=(200, 2)), axis=1)
        for d_small, d_big in pairs:
            if d_small == d_big:
                continue
            assert (dp.L_of_delta(dist, spec, float(d_big))
                    > dp.L_of_delta(dist, spec, float(d_small)))

    def test_infeasible_delta(self, dist):
        # far enough above the bracket that the eliminated upper threshold
        # would need a negative budget share
        spec = spec_with()
        _, up = dp.delta_bounds(dist, spec)
        with pytest.raises(dp.InfeasibleDelta):
            dp.L_of_delta(dist, spec, up * 3.0)


class TestKBounds:
    def test_budget_inside_interval_at_anchor(self, dist):
        bounds = dp.k_bounds(dist, spec_with())
        assert bounds.k_lower < K_BUDGET < bounds.k_upper

    def test_zero_lower_bound_at_pinned_wealth(self, dist):
        alpha = -W0 / dist.EZ
        bounds = dp.k_bounds(dist, spec_with(alpha=alpha))
        assert bounds.k_lower == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("alpha,w0", [(-121.14, 100.0), (-50.0, 100.0),
                                          (-80.0, 60.0), (-150.0, 120.0)])
    def test_agreement_with_direct_normal_composite(self, dist, alpha, w0):
        # The generic-H bounds must match the direct Phi / Phi^{-1} composition.
        from scipy.special import ndtr, ndtri
        spec = spec_with(alpha=alpha, w0=w0)
        bounds = dp.k_bounds(dist, spec)
        inv_tail = 1.0 / (1.0 - KAPPA)
        grown = w0 / dist.EZ
        if w0 < -alpha * dist.EZ:
            k_lo = -alpha * (1 - inv_tail) * (
                float(ndtr(ndtri(grown / -alpha) + dist.nu0)) - 1.0)
        else:
            arg = (grown + alpha) / (CAP + alpha)
            k_lo = (CAP + alpha) * float(ndtr(ndtri(arg) + dist.nu0))
        h_up = float(ndtr(ndtri(grown / CAP) + dist.nu0))
        k_up = CAP * h_up - alpha * (inv_tail * (1 - h_up) - 1.0)
        assert bounds.k_lower == pytest.approx(k_lo, abs=1e-9, rel=1e-9)
        assert bounds.k_upper == pytest.approx(k_up, abs=1e-9, rel=1e-9)


class TestSolveMultipliers:
    def test_interior_characterizing_equations(self, dist, anchored_solution):
        # Residuals of the two coupled equations that pin (lambda, eta).
        mult = anchored_solution.multipliers
        assert mult.case_tag is dp.CaseTag.INTERIOR
        a, b = anchored_solution.threshold_a, anchored_solution.threshold_b
        inv_tail = 1.0 / (1.0 - KAPPA)
        risk = ((CAP + ALPHA_ANCHOR) * dist.H0(a)
                - ALPHA_ANCHOR * (inv_tail - 1.0) * (1.0 - dist.H0(b)))
        assert abs(risk - K_BUDGET) <= 1e-8 * max(1.0, K_BUDGET)
        budget = (CAP + ALPHA_ANCHOR) * dist.H1(a) - ALPHA_ANCHOR * dist.H1(b)
        assert abs(budget - W0) <= 1e-8 * W0

    def test_interior_budget_and_risk_identities(self, dist):
        # Same residuals across a sweep of interior budgets.
        spec0 = spec_with()
        bounds = dp.k_bounds(dist, spec0)
        for frac in (0.05, 0.25, 0.5, 0.75, 0.95):
            k = bounds.k_lower + frac * (bounds.k_upper - bounds.k_lower)
            spec = spec_with(K=k)
            mult = dp.solve_multipliers(dist, spec)
            assert dp.budget_I(dist, spec, mult.delta, mult.rho) == pytest.approx(
                W0, abs=1e-8 * W0)
            risk = ((CAP + ALPHA_ANCHOR) * dist.H0(mult.delta)
                    - ALPHA_ANCHOR * (1.0 - spec.inv_tail)
                    * (dist.H0(mult.delta + mult.rho) - 1.0))
            assert abs(risk - k) <= 1e-8 * max(1.0, abs(k))

    def test_high_k_boundary(self, dist):
        spec0 = spec_with()
        bounds = dp.k_bounds(dist, spec0)
        mult = dp.solve_multipliers(dist, spec_with(K=bounds.k_upper))
        assert mult.case_tag is dp.CaseTag.HIGH_K
        assert mult.lam == 0.0
        assert mult.eta == pytest.approx(1.0 / dist.H1_inv(W0 / CAP), rel=1e-12)
        assert mult.rho == 0.0

    def test_low_k_low_wealth_boundary(self, dist):
        spec0 = spec_with()  # w0 < -alpha EZ at the anchor
        bounds = dp.k_bounds(dist, spec0)
        mult = dp.solve_multipliers(dist, spec_with(K=bounds.k_lower))
        assert mult.case_tag is dp.CaseTag.LOW_K_LOW_WEALTH
        assert mult.lam == 1.0
        assert mult.delta == 0.0
        assert mult.rho == pytest.approx(dist.H1_inv(W0 / -ALPHA_ANCHOR), rel=1e-12)
        assert mult.eta == pytest.approx(1.0 / ((1 - KAPPA) * mult.rho), rel=1e-12)

    def test_low_k_high_wealth_boundary(self, dist):
        alpha = -50.0  # w0 > -alpha EZ
        spec0 = spec_with(alpha=alpha)
        bounds = dp.k_bounds(dist, spec0)
        mult = dp.solve_multipliers(dist, spec_with(alpha=alpha, K=bounds.k_lower))
        assert mult.case_tag is dp.CaseTag.LOW_K_HIGH_WEALTH
        assert math.isinf(mult.rho)
        assert mult.eta == 0.0
        assert mult.delta == pytest.approx(bounds.delta_lower, rel=1e-12)

    def test_risk_free_boundary(self, dist):
        alpha = -W0 / dist.EZ
        mult = dp.solve_multipliers(dist, spec_with(alpha=alpha, K=0.0))
        assert mult.case_tag is dp.CaseTag.RISK_FREE_ONLY
        assert mult.delta == 0.0 and math.isinf(mult.rho)

    def test_infeasible_budget(self, dist):
        spec0 = spec_with()
        bounds = dp.k_bounds(dist, spec0)
        with pytest.raises(dp.InfeasibleK):
            dp.solve_multipliers(dist, spec_with(K=bounds.k_lower - 1.0))
        with pytest.raises(dp.InfeasibleK):
            dp.solve_multipliers(dist, spec_with(K=bounds.k_upper + 1.0))

    def test_interior_multiplier_ranges(self, dist, anchored_solution):
        mult = anchored_solution.multipliers
        assert 0.0 < mult.lam < 1.0
        assert mult.eta > 0.0
        assert mult.delta > 0.0 and mult.rho > 0.0


class TestThresholdMultiplierAlgebra:
    @given(delta=st.floats(min_value=1e-6, max_value=1e3),
           rho=st.floats(min_value=1e-6, max_value=1e3),
           kappa=st.floats(min_value=0.5001, max_value=0.9999))
    @settings(max_examples=200)
    def test_round_trip(self, delta, rho, kappa):
        from dcvar_portfolio.multipliers import _multipliers_from_thresholds
        mult = _multipliers_from_thresholds(delta, rho, kappa, dp.CaseTag.INTERIOR)
        # forward mapping identities
        assert mult.delta * mult.eta == pytest.approx(1.0 - mult.lam, abs=1e-12)
        assert mult.rho * mult.eta == pytest.approx(
            mult.lam / (1.0 - kappa), rel=1e-12)
        # threshold sum identity
        assert mult.delta + mult.rho == pytest.approx(
            (mult.lam * (1.0 / (1.0 - kappa) - 1.0) + 1.0) / mult.eta, rel=1e-12)

    def test_solution_round_trip(self, anchored_solution):
        mult = anchored_solution.multipliers
        assert mult.delta * mult.eta == pytest.approx(1.0 - mult.lam, abs=1e-12)
        assert mult.rho * mult.eta == pytest.approx(
            mult.lam / (1.0 - KAPPA), rel=1e-12)


class TestBisection:
    def test_uniqueness_proxy_two_bracketing_orders(self, dist):
        spec = spec_with()
        bounds = dp.k_bounds(dist, spec)
        f_tol = 1e-9 * max(1.0, K_BUDGET)
        d1 = bisect_increasing(lambda d: dp.L_of_delta(dist, spec, d),
                               bounds.delta_lower, bounds.delta_upper,
                               K_BUDGET, f_tol=f_tol, from_above=False)
        d2 = bisect_increasing(lambda d: dp.L_of_delta(dist, spec, d),
                               bounds.delta_lower, bounds.delta_upper,
                               K_BUDGET, f_tol=f_tol, from_above=True)
        assert abs(d1 - d2) <= 1e-9

    def test_extended_inverse_conventions(self, dist):
        assert h1_inv_extended(dist, 0.0) == 0.0
        assert h1_inv_extended(dist, -0.5) == 0.0
        assert math.isinf(h1_inv_extended(dist, dist.EZ))
        assert math.isinf(h1_inv_extended(dist, dist.EZ * 2))
