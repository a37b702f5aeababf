"""Risk-budget bounds and Lagrange multipliers for the three-level payoff.

For a fixed VaR anchor ``alpha <= 0`` the optimal terminal payoff takes the
three values {B, -alpha, 0} on state-price regions split at thresholds
``delta`` and ``delta + rho``.  This module computes, against an abstract
state-price distribution:

  * the budget functional ``I(delta, rho) = B H1(delta) - alpha (H1(delta+rho) - H1(delta))``,
  * the scalar feasibility map ``L(delta)`` obtained by eliminating ``rho``
    through the budget,
  * the admissible risk-budget interval ``[K_lower, K_upper]`` attained at the
    ``delta`` bracket endpoints, and
  * the unique multipliers ``(lambda, eta)`` for a budget ``K`` inside the
    interval, with the boundary cases mapped to their closed forms.

The multiplier pair and the thresholds are linked one-to-one by
``delta = (1 - lambda)/eta`` and ``rho = lambda / ((1 - kappa) eta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .errors import DomainError, InfeasibleDelta, InfeasibleK, InfeasibleSpec
from .gaussian import StatePriceDistribution

# Relative tolerance for detecting that K sits on a boundary of the
# feasible interval; inside it the closed-form boundary case is used
# instead of root-finding on a vanishing bracket.
BOUNDARY_REL_TOL = 1e-9

# Relative slack on the inner H1 argument before raising InfeasibleDelta.
_Q_SLACK = 1e-9


class CaseTag(str, Enum):
    """Which clause of the multiplier characterization produced the solution."""

    INTERIOR = "Interior"
    RISK_FREE_ONLY = "RiskFreeOnly"
    LOW_K_LOW_WEALTH = "LowK_LowWealth"
    LOW_K_HIGH_WEALTH = "LowK_HighWealth"
    HIGH_K = "HighK"


@dataclass(frozen=True)
class ProblemSpec:
    """Static problem data: initial wealth, VaR anchor, quantile level, cap, budget.

    Invariants: ``w0 > 0``, ``alpha <= 0``, ``kappa in (0.5, 1)``,
    ``B + alpha > 0``.  Reachability of the cap under the budget is checked
    against the distribution in :func:`delta_bounds`.
    """

    w0: float
    alpha: float
    kappa: float
    B: float
    K: float

    def __post_init__(self) -> None:
        if self.w0 <= 0.0:
            raise DomainError(f"w0 must be > 0, got {self.w0}")
        if self.alpha > 0.0:
            raise DomainError(f"alpha must be <= 0, got {self.alpha}")
        if not (0.5 < self.kappa < 1.0):
            raise DomainError(f"kappa must be in (0.5, 1), got {self.kappa}")
        if self.B + self.alpha <= 0.0:
            raise DomainError(f"need B > -alpha, got B={self.B}, alpha={self.alpha}")

    @property
    def inv_tail(self) -> float:
        """``(1 - kappa)^{-1}``."""
        return 1.0 / (1.0 - self.kappa)


@dataclass(frozen=True)
class Multipliers:
    """Multiplier pair, threshold reparametrization, and the case tag.

    ``delta = (1 - lam)/eta`` and ``rho = lam/((1 - kappa) eta)`` whenever
    ``eta > 0``; the degenerate cases store the thresholds directly
    (``eta = 0`` with ``rho = +inf``).
    """

    lam: float
    eta: float
    delta: float
    rho: float
    case_tag: CaseTag


@dataclass(frozen=True)
class RiskBounds:
    """Feasible risk-budget interval and the threshold bracket attaining it."""

    k_lower: float
    k_upper: float
    delta_lower: float
    delta_upper: float


def h1_inv_extended(dist: StatePriceDistribution, q: float) -> float:
    """``H1_inv`` with the boundary conventions ``q <= 0 -> 0`` and ``q >= EZ -> +inf``."""
    if q <= 0.0:
        return 0.0
    if q >= dist.EZ:
        return math.inf
    return dist.H1_inv(q)


def budget_I(dist: StatePriceDistribution, spec: ProblemSpec,
             delta: float, rho: float) -> float:
    """Cost of the three-level payoff with thresholds ``(delta, delta + rho)``.

    ``I(delta, rho) = B H1(delta) - alpha (H1(delta + rho) - H1(delta))``;
    nondecreasing in each argument.
    """
    if delta < 0.0 or rho < 0.0:
        raise DomainError(f"delta and rho must be >= 0, got ({delta}, {rho})")
    h1_lo = dist.H1(delta)
    h1_hi = dist.H1(delta + rho)
    return spec.B * h1_lo - spec.alpha * (h1_hi - h1_lo)


def _inner_q(dist: StatePriceDistribution, spec: ProblemSpec, delta: float) -> float:
    """Argument fed to ``H1_inv`` when ``rho`` is eliminated through the budget."""
    return (spec.w0 - (spec.B + spec.alpha) * dist.H1(delta)) / (-spec.alpha)


def L_of_delta(dist: StatePriceDistribution, spec: ProblemSpec, delta: float) -> float:
    """Risk level of the budget-feasible payoff with lower threshold ``delta``.

    Strictly increasing on ``[delta_lower, delta_upper]``; its endpoint
    values are ``K_lower`` and ``K_upper``.

    Raises
    ------
    InfeasibleDelta
        If the eliminated upper threshold leaves the distribution support
        beyond the boundary conventions.
    """
    q = _inner_q(dist, spec, delta)
    slack = _Q_SLACK * max(1.0, dist.EZ)
    if q < -slack or q > dist.EZ + slack:
        raise InfeasibleDelta(
            f"inner H1 argument {q} outside [0, {dist.EZ}] at delta={delta}"
        )
    upper = h1_inv_extended(dist, q)
    h0_upper = dist.H0(upper) if math.isfinite(upper) else 1.0
    return ((spec.B + spec.alpha) * dist.H0(delta)
            - spec.alpha * (1.0 - spec.inv_tail) * (h0_upper - 1.0))


def delta_bounds(dist: StatePriceDistribution, spec: ProblemSpec) -> tuple[float, float]:
    """Admissible bracket for the lower threshold.

    ``delta_lower = 0`` when ``w0 < -alpha EZ`` else
    ``H1_inv((w0 + alpha EZ)/(B + alpha))``; ``delta_upper = H1_inv(w0 / B)``.

    Raises
    ------
    InfeasibleSpec
        If ``w0 / B >= EZ`` (the cap cannot be financed).
    """
    if spec.w0 / spec.B >= dist.EZ:
        raise InfeasibleSpec(
            f"w0/B = {spec.w0 / spec.B} >= EZ = {dist.EZ}: cap unreachable under budget"
        )
    if spec.w0 < -spec.alpha * dist.EZ:
        lower = 0.0
    else:
        lower = h1_inv_extended(
            dist, (spec.w0 + spec.alpha * dist.EZ) / (spec.B + spec.alpha)
        )
    upper = dist.H1_inv(spec.w0 / spec.B)
    return lower, upper


def k_bounds(dist: StatePriceDistribution, spec: ProblemSpec) -> RiskBounds:
    """Feasible risk-budget interval ``[K_lower, K_upper]`` for this ``alpha``."""
    d_lo, d_up = delta_bounds(dist, spec)
    inv_tail = spec.inv_tail
    if spec.w0 < -spec.alpha * dist.EZ:
        h = dist.H0(h1_inv_extended(dist, spec.w0 / (-spec.alpha)))
        k_lo = -spec.alpha * (1.0 - inv_tail) * (h - 1.0)
    else:
        k_lo = (spec.B + spec.alpha) * dist.H0(d_lo)
    h_up = dist.H0(d_up)
    k_up = spec.B * h_up - spec.alpha * (inv_tail * (1.0 - h_up) - 1.0)
    return RiskBounds(k_lower=k_lo, k_upper=k_up, delta_lower=d_lo, delta_upper=d_up)


def bisect_increasing(f: Callable[[float], float], lo: float, hi: float,
                      target: float, *, f_tol: float, max_iter: int = 200,
                      from_above: bool = False) -> float:
    """Bisection for ``f(x) = target`` with ``f`` nondecreasing on ``[lo, hi]``.

    Stops when ``|f(mid) - target| <= f_tol`` and the bracket is tight, or
    after ``max_iter`` halvings.  ``from_above=True`` mirrors the bracket
    update order (used by the uniqueness cross-check in the tests).
    """
    x_tol = 5e-14 * max(1.0, abs(hi))
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        val = f(mid)
        if abs(val - target) <= f_tol and hi - lo <= x_tol:
            return mid
        if from_above:
            if val > target:
                hi = mid
            else:
                lo = mid
        else:
            if val < target:
                lo = mid
            else:
                hi = mid
        if hi - lo <= x_tol and abs(val - target) <= f_tol:
            return 0.5 * (lo + hi)
    return mid


def _multipliers_from_thresholds(delta: float, rho: float, kappa: float,
                                 tag: CaseTag) -> Multipliers:
    """Invert ``delta = (1-lam)/eta``, ``rho = lam/((1-kappa) eta)``."""
    scale = delta + (1.0 - kappa) * rho
    eta = 1.0 / scale
    lam = (1.0 - kappa) * rho * eta
    return Multipliers(lam=lam, eta=eta, delta=delta, rho=rho, case_tag=tag)


def solve_multipliers(dist: StatePriceDistribution, spec: ProblemSpec) -> Multipliers:
    """Unique multipliers for risk budget ``K`` within ``[K_lower, K_upper]``.

    Interior budgets are solved by bisection on the monotone map ``L`` to
    ``|L(delta) - K| <= 1e-9 max(1, |K|)``; budgets within relative
    tolerance 1e-9 of an endpoint use the closed-form boundary case.

    Raises
    ------
    InfeasibleK
        If ``K`` lies outside the feasible interval.
    """
    bounds = k_bounds(dist, spec)
    k = spec.K
    tol = BOUNDARY_REL_TOL * max(1.0, abs(k), abs(bounds.k_lower), abs(bounds.k_upper))
    if k < bounds.k_lower - tol or k > bounds.k_upper + tol:
        raise InfeasibleK(
            f"K={k} outside feasible interval [{bounds.k_lower}, {bounds.k_upper}]"
        )

    wealth_gap = spec.w0 + spec.alpha * dist.EZ  # w0 - (-alpha EZ)
    w_tol = BOUNDARY_REL_TOL * max(1.0, spec.w0)

    if abs(k - bounds.k_lower) <= tol:
        if abs(wealth_gap) <= w_tol:
            # Risk budget and wealth both pinned: only the risk-free payoff fits.
            return Multipliers(lam=1.0, eta=0.0, delta=0.0, rho=math.inf,
                               case_tag=CaseTag.RISK_FREE_ONLY)
        if wealth_gap < 0.0:
            rho = dist.H1_inv(spec.w0 / (-spec.alpha))
            eta = 1.0 / ((1.0 - spec.kappa) * rho)
            return Multipliers(lam=1.0, eta=eta, delta=0.0, rho=rho,
                               case_tag=CaseTag.LOW_K_LOW_WEALTH)
        return Multipliers(lam=1.0, eta=0.0, delta=bounds.delta_lower, rho=math.inf,
                           case_tag=CaseTag.LOW_K_HIGH_WEALTH)

    if abs(k - bounds.k_upper) <= tol:
        delta = bounds.delta_upper
        return Multipliers(lam=0.0, eta=1.0 / delta, delta=delta, rho=0.0,
                           case_tag=CaseTag.HIGH_K)

    f_tol = 1e-9 * max(1.0, abs(k))
    delta = bisect_increasing(
        lambda d: L_of_delta(dist, spec, d),
        bounds.delta_lower, bounds.delta_upper, k, f_tol=f_tol,
    )
    upper = h1_inv_extended(dist, _inner_q(dist, spec, delta))
    rho = upper - delta
    return _multipliers_from_thresholds(delta, rho, spec.kappa, CaseTag.INTERIOR)
