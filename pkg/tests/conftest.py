import numpy as np
import pytest

import dcvar_portfolio as dp

# Four-asset reference configuration used throughout the suite.  The solved
# optimum for (w0=100, K=30, kappa=0.99, B=500) on this market is
# E[V_T*] ~= 141.78 at alpha* ~= -121.14 (cross-checked against the
# brute-force grid oracle in test_oracle / test_acceptance).
FOUR_ASSET = dict(
    horizon=1.0,
    riskfree=0.02,
    s0=[100.0, 100.0, 100.0, 100.0],
    mu=[0.09, 0.15, 0.21, 0.12],
    vol=[0.08, 0.12, 0.15, 0.08],
    corr=[
        [1.0, 0.2, -0.3, 0.0],
        [0.2, 1.0, 0.15, -0.2],
        [-0.3, 0.15, 1.0, 0.3],
        [0.0, -0.2, 0.3, 1.0],
    ],
)
W0 = 100.0
K_BUDGET = 30.0
KAPPA = 0.99
CAP = 500.0
ALPHA_ANCHOR = -121.14


@pytest.fixture(scope="session")
def market():
    return dp.build_market(dp.MarketParams(**FOUR_ASSET))


@pytest.fixture(scope="session")
def dist(market):
    return dp.LognormalStatePrice.from_market(market)


@pytest.fixture(scope="session")
def anchored_spec():
    """Reference problem with the VaR anchor held fixed at its near-optimal value."""
    return dp.ProblemSpec(w0=W0, alpha=ALPHA_ANCHOR, kappa=KAPPA, B=CAP, K=K_BUDGET)


@pytest.fixture(scope="session")
def anchored_solution(dist, anchored_spec):
    return dp.solve_policy(dist, anchored_spec)


@pytest.fixture(scope="session")
def optimal_solution(dist, market):
    return dp.optimize_alpha(dist, market, W0, K_BUDGET, KAPPA, CAP)


@pytest.fixture(scope="session")
def flat_market():
    """Market with zero risk premium: every drift equals the risk-free rate."""
    params = dp.MarketParams(
        horizon=1.0, riskfree=0.02, s0=[100.0], mu=[0.02], vol=[0.2], corr=[[1.0]],
    )
    return dp.build_market(params)


def make_market(**overrides):
    cfg = dict(FOUR_ASSET)
    cfg.update(overrides)
    return dp.build_market(dp.MarketParams(**cfg))
