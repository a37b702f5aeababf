"""Optimal dynamic portfolios under a deviation-CVaR budget.

Closed-form solver for the three-level optimal terminal payoff in a
deterministic multi-asset Black-Scholes market, with Monte Carlo
verification and a discrete-rebalancing replication backtest.
"""

from .errors import (ConfigError, DcvarError, DegenerateVol, DimensionMismatch,
                     DomainError, EmptySample, InfeasibleDelta, InfeasibleK,
                     InfeasibleSpec, NoFeasibleAlpha, NoFeasibleGridPoint,
                     NotPositiveDefinite, OutOfHorizon)
from .gaussian import (LognormalStatePrice, StatePriceDistribution, std_normal_cdf,
                       std_normal_pdf, std_normal_quantile, truncated_lognormal_moment)
from .market import (DerivedMarket, MarketParams, build_market, discount,
                     state_price_moments)
from .montecarlo import (FrontierPoint, PathConfig, PathEnsemble, ReplicationResult,
                         TerminalStats, frontier, replicate, simulate_paths,
                         simulate_terminal, terminal_stats)
from .multipliers import (CaseTag, Multipliers, ProblemSpec, RiskBounds, budget_I,
                          delta_bounds, k_bounds, L_of_delta, solve_multipliers)
from .oracle import grid_search_static, quad_H
from .policy import (AllocationState, AlphaSearchConfig, PolicySolution,
                     R_of_alpha, allocation_at, asymptotic_k_bounds,
                     atom_probabilities, expected_terminal, optimize_alpha,
                     risk_free_solution, solve_policy, terminal_wealth, wealth_at)

__version__ = "0.1.0"

__all__ = [
    "AllocationState", "AlphaSearchConfig", "CaseTag", "ConfigError", "DcvarError",
    "DegenerateVol", "DerivedMarket", "DimensionMismatch", "DomainError",
    "EmptySample", "FrontierPoint", "InfeasibleDelta", "InfeasibleK",
    "InfeasibleSpec", "LognormalStatePrice", "MarketParams", "Multipliers",
    "NoFeasibleAlpha", "NoFeasibleGridPoint", "NotPositiveDefinite",
    "OutOfHorizon", "PathConfig", "PathEnsemble", "PolicySolution", "ProblemSpec",
    "R_of_alpha", "ReplicationResult", "RiskBounds", "StatePriceDistribution",
    "TerminalStats", "allocation_at", "asymptotic_k_bounds", "atom_probabilities",
    "budget_I", "build_market", "delta_bounds", "discount", "expected_terminal",
    "frontier", "grid_search_static", "k_bounds", "L_of_delta", "optimize_alpha",
    "quad_H", "replicate", "risk_free_solution", "simulate_paths",
    "simulate_terminal", "solve_multipliers", "solve_policy", "state_price_moments",
    "std_normal_cdf", "std_normal_pdf", "std_normal_quantile", "terminal_stats",
    "terminal_wealth", "truncated_lognormal_moment", "wealth_at",
]
