import math

import numpy as np
import pytest

import dcvar_portfolio as dp
from dcvar_portfolio.oracle import grid_search_static, quad_H
from conftest import ALPHA_ANCHOR, CAP, K_BUDGET, KAPPA, W0


class TestQuadH:
    def test_full_mass_is_lognormal_mean(self, dist):
        val = quad_H(dist.m0, dist.nu0, 1, math.inf)
        assert val == pytest.approx(math.exp(dist.m0 + 0.5 * dist.nu0 ** 2), abs=1e-9)

    def test_median_probability(self, dist):
        assert quad_H(dist.m0, dist.nu0, 0, math.exp(dist.m0)) == pytest.approx(
            0.5, abs=1e-9)

    def test_zero_below_support(self, dist):
        assert quad_H(dist.m0, dist.nu0, 0, 0.0) == 0.0
        assert quad_H(dist.m0, dist.nu0, 1, -1.0) == 0.0

    @pytest.mark.parametrize("y", [0.01, 0.3, 1.7, 25.0])
    def test_cross_validates_closed_forms(self, dist, y):
        for p in (0, 1):
            assert quad_H(dist.m0, dist.nu0, p, y) == pytest.approx(
                dist.H(p, y), abs=1e-8)

    def test_domain(self, dist):
        with pytest.raises(dp.DomainError):
            quad_H(dist.m0, dist.nu0, 2, 1.0)
        with pytest.raises(dp.DomainError):
            quad_H(dist.m0, 0.0, 0, 1.0)


class TestGridSearchStatic:
    def test_matches_closed_form_at_anchor(self, dist, anchored_solution):
        a, b, value = grid_search_static(
            dist.m0, dist.nu0, W0, ALPHA_ANCHOR, KAPPA, CAP, K_BUDGET, grid_n=2000)
        closed = anchored_solution.expected_terminal
        eta = anchored_solution.multipliers.eta
        # shadow price of the budget band, plus quadrature noise
        slack = eta * 1e-4 * W0 + 1e-6 * closed
        assert value <= closed + slack
        assert value == pytest.approx(closed, rel=5e-3)

    def test_digital_reduction_at_max_budget(self, dist):
        # At K = K_upper the optimum collapses to a single threshold (no
        # middle band): the searched b* should coincide with a* and the value
        # with the digital closed form.
        spec = dp.ProblemSpec(w0=W0, alpha=ALPHA_ANCHOR, kappa=KAPPA, B=CAP,
                              K=K_BUDGET)
        bounds = dp.k_bounds(dist, spec)
        delta_up = dist.H1_inv(W0 / CAP)
        closed = CAP * dist.H0(delta_up)
        a, b, value = grid_search_static(
            dist.m0, dist.nu0, W0, ALPHA_ANCHOR, KAPPA, CAP, bounds.k_upper,
            grid_n=2000)
        assert value == pytest.approx(closed, rel=5e-3)
        assert b / a <= 1.12  # adjacent grid nodes: no appreciable middle band

    def test_infeasible_budget(self, dist):
        spec = dp.ProblemSpec(w0=W0, alpha=ALPHA_ANCHOR, kappa=KAPPA, B=CAP,
                              K=K_BUDGET)
        bounds = dp.k_bounds(dist, spec)
        with pytest.raises(dp.NoFeasibleGridPoint):
            grid_search_static(dist.m0, dist.nu0, W0, ALPHA_ANCHOR, KAPPA, CAP,
                               bounds.k_lower * 0.5, grid_n=400)

    def test_grid_floor(self, dist):
        with pytest.raises(dp.DomainError):
            grid_search_static(dist.m0, dist.nu0, W0, ALPHA_ANCHOR, KAPPA, CAP,
                               K_BUDGET, grid_n=100)
