"""Optimal payoff, wealth and allocation closed forms, and the alpha search.

The solved policy is a three-level terminal payoff

    M*(z) = B        for z <= a
          = -alpha   for a < z <= b
          = 0        for z > b

with thresholds ``a = delta`` and ``b = delta + rho`` from the multiplier
solver.  Before the horizon the wealth and the risky allocation follow from
conditioning on the current state-price level ``z``:

    V(t, z)  = g(t) [(B + alpha) Phi(y1 - nu) - alpha Phi(y2 - nu)]
    pi(t, z) = g(t) / (sqrt(2 pi) nu) [(B + alpha) e^{-(y1-nu)^2/2}
                                       - alpha e^{-(y2-nu)^2/2}] (sigma sigma^T)^{-1} b

with ``g(t) = exp(m(t) + nu^2(t)/2)``, ``y_i = (ln(thr_i / z) - m(t)) / nu(t)``.
The expected-return map ``R(alpha)`` is maximized by forward-difference
gradient ascent wrapped in a feasibility pre-scan; ``-R`` is convex so the
local certificate is global.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import (DegenerateVol, DomainError, InfeasibleK, InfeasibleSpec,
                     NoFeasibleAlpha)
from .gaussian import StatePriceDistribution
from .market import DerivedMarket, state_price_moments
from .multipliers import (CaseTag, Multipliers, ProblemSpec, k_bounds,
                          h1_inv_extended, solve_multipliers)

# Below this remaining state-price volatility the closed forms degenerate to
# the terminal payoff; allocations are no longer defined.
DEGENERATE_NU = 1e-12

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class PolicySolution:
    """A solved policy: problem data, multipliers, thresholds, expected value."""

    problem: ProblemSpec
    multipliers: Multipliers
    threshold_a: float
    threshold_b: float
    expected_terminal: float

    @property
    def alpha(self) -> float:
        return self.problem.alpha

    @property
    def case_tag(self) -> CaseTag:
        return self.multipliers.case_tag


@dataclass(frozen=True)
class AllocationState:
    """Wealth split at one (t, z) point: per-asset risky value, cash, share counts."""

    t: float
    z: float
    wealth: float
    risky_value: np.ndarray
    cash: float
    shares: np.ndarray


@dataclass(frozen=True)
class AlphaSearchConfig:
    """Knobs for the gradient ascent on R(alpha).

    ``alpha0`` seeds the search when given and feasible; otherwise a
    geometric feasibility scan picks the start.  ``zeta`` is the
    forward-difference step, ``step_scale`` the ascent step multiplier,
    ``eps`` the stopping threshold on the difference quotient.
    """

    alpha0: float | None = None
    zeta: float = 1e-3
    step_scale: float = 10.0
    eps: float = 1e-3
    max_iters: int = 500

    def __post_init__(self) -> None:
        if self.zeta <= 0.0 or self.eps <= 0.0:
            raise ValueError("zeta and eps must be > 0")


def _thresholds(mult: Multipliers) -> tuple[float, float]:
    a = mult.delta
    b = math.inf if math.isinf(mult.rho) else mult.delta + mult.rho
    return a, b


def solve_policy(dist: StatePriceDistribution, spec: ProblemSpec) -> PolicySolution:
    """Solve the multipliers for ``spec`` and assemble the policy."""
    mult = solve_multipliers(dist, spec)
    a, b = _thresholds(mult)
    expected = (spec.B * dist.H0(a)
                - spec.alpha * (dist.H0(b) - dist.H0(a)))
    return PolicySolution(problem=spec, multipliers=mult,
                          threshold_a=a, threshold_b=b,
                          expected_terminal=expected)


def terminal_wealth(z, sol: PolicySolution):
    """Three-level payoff at terminal state-price ``z`` (scalar or array).

    ``B`` on ``z <= a``, ``-alpha`` on ``a < z <= b``, ``0`` on ``z > b``.
    """
    spec = sol.problem
    z_arr = np.asarray(z, dtype=float)
    out = np.where(z_arr <= sol.threshold_a, spec.B,
                   np.where(z_arr <= sol.threshold_b, -spec.alpha, 0.0))
    if np.ndim(z) == 0:
        return float(out)
    return out


def expected_terminal(dist: StatePriceDistribution, sol: PolicySolution) -> float:
    """``E[M*] = B H0(a) - alpha (H0(b) - H0(a))``."""
    spec = sol.problem
    h0_a = dist.H0(sol.threshold_a)
    h0_b = dist.H0(sol.threshold_b) if math.isfinite(sol.threshold_b) else 1.0
    return spec.B * h0_a - spec.alpha * (h0_b - h0_a)


def _log_or_ninf(x: float) -> float:
    if x <= 0.0:
        return -math.inf
    if math.isinf(x):
        return math.inf
    return math.log(x)


def wealth_curve(z, ln_a: float, ln_b: float, m_t: float, nu_t: float,
                 coef_b: float, coef_a: float):
    """Vectorized conditional-wealth closed form.

    ``coef_b = B + alpha`` and ``coef_a = alpha``; thresholds passed in logs
    so the boundary cases (a = 0, b = inf) saturate through the CDF.
    """
    lnz = np.log(z)
    g = math.exp(m_t + 0.5 * nu_t * nu_t)
    y1 = (ln_a - lnz - m_t) / nu_t - nu_t
    y2 = (ln_b - lnz - m_t) / nu_t - nu_t
    return g * (coef_b * ndtr(y1) - coef_a * ndtr(y2))


def wealth_at(mkt: DerivedMarket, sol: PolicySolution, t: float, zt) -> float:
    """Optimal wealth at time ``t`` given state-price level ``zt``.

    For ``nu(t) < 1e-12`` (at or just before the horizon, or a driftless
    market) the closed form degenerates and the exact payoff is returned;
    the risk-free-only case discounts ``-alpha`` instead.

    Raises
    ------
    OutOfHorizon
        If ``t`` is outside ``[0, T]``.
    """
    m_t, nu_t = state_price_moments(mkt, t)
    spec = sol.problem
    if sol.case_tag is CaseTag.RISK_FREE_ONLY:
        out = -spec.alpha * math.exp(-mkt.riskfree * (mkt.horizon - t)) * np.ones_like(
            np.asarray(zt, dtype=float))
        return float(out) if np.ndim(zt) == 0 else out
    if nu_t < DEGENERATE_NU:
        return terminal_wealth(zt, sol)
    out = wealth_curve(zt, _log_or_ninf(sol.threshold_a), _log_or_ninf(sol.threshold_b),
                       m_t, nu_t, spec.B + spec.alpha, spec.alpha)
    return float(out) if np.ndim(zt) == 0 else out


def allocation_scalar(z, ln_a: float, ln_b: float, m_t: float, nu_t: float,
                      coef_b: float, coef_a: float):
    """Scalar multiplier of ``(sigma sigma^T)^{-1} b`` in the risky-value vector."""
    lnz = np.log(z)
    g = math.exp(m_t + 0.5 * nu_t * nu_t)
    y1 = (ln_a - lnz - m_t) / nu_t - nu_t
    y2 = (ln_b - lnz - m_t) / nu_t - nu_t
    return (g / (_SQRT_2PI * nu_t)) * (coef_b * np.exp(-0.5 * y1 * y1)
                                       - coef_a * np.exp(-0.5 * y2 * y2))


def allocation_at(mkt: DerivedMarket, sol: PolicySolution, t: float, zt: float,
                  prices) -> AllocationState:
    """Optimal allocation at ``(t, zt)``: per-asset risky value, cash, shares.

    The risky-value vector is ``-z dV/dz (sigma sigma^T)^{-1} b``; cash is
    the remainder of the closed-form wealth.  A market without excess
    return allocates nothing to the risky assets.

    Raises
    ------
    OutOfHorizon
        If ``t`` is outside ``[0, T]``.
    DegenerateVol
        If ``nu(t) < 1e-12`` while the market has risk premium.
    """
    m_t, nu_t = state_price_moments(mkt, t)
    prices = np.asarray(prices, dtype=float)
    spec = sol.problem
    no_premium = float(np.max(np.abs(mkt.b))) == 0.0
    if sol.case_tag is CaseTag.RISK_FREE_ONLY or no_premium:
        wealth = wealth_at(mkt, sol, t, zt)
        zero = np.zeros(mkt.n_assets)
        return AllocationState(t=t, z=zt, wealth=wealth, risky_value=zero,
                               cash=wealth, shares=zero.copy())
    if nu_t < DEGENERATE_NU:
        raise DegenerateVol(f"nu({t}) = {nu_t} < {DEGENERATE_NU}")
    wealth = float(wealth_at(mkt, sol, t, zt))
    scale = float(allocation_scalar(zt, _log_or_ninf(sol.threshold_a),
                                    _log_or_ninf(sol.threshold_b),
                                    m_t, nu_t, spec.B + spec.alpha, spec.alpha))
    weights = np.linalg.solve(mkt.gamma, mkt.b)
    risky = scale * weights
    cash = wealth - float(risky.sum())
    return AllocationState(t=t, z=zt, wealth=wealth, risky_value=risky,
                           cash=cash, shares=risky / prices)


def risk_free_solution(mkt: DerivedMarket, w0: float, K: float, kappa: float,
                       B: float) -> PolicySolution:
    """All-cash policy: constant terminal wealth ``w0 e^{rT}``.

    Used for markets with no risk premium and for the pinned boundary case
    where budget and risk limit force the risk-free payoff.
    """
    grown = w0 * math.exp(mkt.riskfree * mkt.horizon)
    if B <= grown:
        raise InfeasibleSpec(f"cap B={B} not above grown wealth {grown}")
    spec = ProblemSpec(w0=w0, alpha=-grown, kappa=kappa, B=B, K=K)
    mult = Multipliers(lam=1.0, eta=0.0, delta=0.0, rho=math.inf,
                       case_tag=CaseTag.RISK_FREE_ONLY)
    return PolicySolution(problem=spec, multipliers=mult, threshold_a=0.0,
                          threshold_b=math.inf, expected_terminal=grown)


def R_of_alpha(dist: StatePriceDistribution | None, mkt: DerivedMarket,
               w0: float, K: float, kappa: float, B: float, alpha: float) -> float:
    """Expected terminal wealth of the solved policy, ``+inf`` when infeasible.

    Infeasibility (K outside the risk-budget interval, or an invalid
    ``alpha``) is a sentinel value rather than an error; the optimizer
    treats the sentinel as "outside the domain".
    """
    if mkt.nu0 < DEGENERATE_NU:
        grown = w0 * math.exp(mkt.riskfree * mkt.horizon)
        excess = max(-grown - alpha, 0.0)
        risk = grown + alpha + excess / (1.0 - kappa)
        return grown if (B > grown and risk <= K) else math.inf
    try:
        spec = ProblemSpec(w0=w0, alpha=alpha, kappa=kappa, B=B, K=K)
        sol = solve_policy(dist, spec)
    except (InfeasibleK, InfeasibleSpec, DomainError):
        return math.inf
    return sol.expected_terminal


def _scan_feasible(dist, mkt, w0, K, kappa, B):
    """Geometric grid of 64 alphas in (-B, -w0/100]; best feasible start."""
    mags = np.geomspace(w0 / 100.0, 0.999 * B, 64)
    best = None
    k_lo_min = math.inf
    k_up_max = -math.inf
    for mag in mags:
        alpha = -float(mag)
        if B + alpha <= 0.0:
            continue
        bounds = k_bounds(dist, ProblemSpec(w0=w0, alpha=alpha, kappa=kappa, B=B, K=K))
        k_lo_min = min(k_lo_min, bounds.k_lower)
        k_up_max = max(k_up_max, bounds.k_upper)
        if bounds.k_lower <= K <= bounds.k_upper:
            val = R_of_alpha(dist, mkt, w0, K, kappa, B, alpha)
            if math.isfinite(val) and (best is None or val > best[1]):
                best = (alpha, val)
    if best is None:
        raise NoFeasibleAlpha(
            f"no alpha in (-{B}, -{w0 / 100.0}] admits K={K}; "
            f"scanned risk budgets span [{k_lo_min}, {k_up_max}]",
            k_lower_min=k_lo_min, k_upper_max=k_up_max,
        )
    return best


def optimize_alpha(dist: StatePriceDistribution | None, mkt: DerivedMarket,
                   w0: float, K: float, kappa: float, B: float,
                   config: AlphaSearchConfig | None = None) -> PolicySolution:
    """Maximize ``R(alpha)`` by forward-difference gradient ascent.

    The iteration stops when the absolute difference quotient falls below
    ``eps``; steps that leave the feasible set or fail to improve are
    halved.  Raises :class:`NoFeasibleAlpha` when the pre-scan finds no
    feasible starting point.
    """
    cfg = config or AlphaSearchConfig()
    if mkt.nu0 < DEGENERATE_NU:
        return risk_free_solution(mkt, w0, K, kappa, B)

    def r_of(a: float) -> float:
        return R_of_alpha(dist, mkt, w0, K, kappa, B, a)

    start_val = r_of(cfg.alpha0) if cfg.alpha0 is not None else math.inf
    if math.isfinite(start_val):
        alpha, value = cfg.alpha0, start_val
    else:
        alpha, value = _scan_feasible(dist, mkt, w0, K, kappa, B)

    zeta = cfg.zeta
    for _ in range(cfg.max_iters):
        forward = r_of(alpha + zeta)
        if math.isfinite(forward):
            grad = (forward - value) / zeta
        else:
            backward = r_of(alpha - zeta)
            if not math.isfinite(backward):
                break
            grad = (value - backward) / zeta
        if abs(grad) <= cfg.eps:
            break
        step = cfg.step_scale * grad
        improved = False
        for _ in range(60):
            cand = alpha + step
            if cand >= 0.0:
                cand = -1e-12
            cand_val = r_of(cand)
            if math.isfinite(cand_val) and cand_val > value:
                alpha, value = cand, cand_val
                improved = True
                break
            step *= 0.5
        if not improved:
            break

    spec = ProblemSpec(w0=w0, alpha=alpha, kappa=kappa, B=B, K=K)
    return solve_policy(dist, spec)


def atom_probabilities(sol: PolicySolution, K: float) -> tuple[float, float, float]:
    """Masses of the payoff atoms (0, -alpha, B) from the binding-risk identity.

    ``P0 = (K - E - alpha)(1 - kappa)/(-alpha)`` and
    ``PB = (E + alpha (1 - P0)) / (B + alpha)``; the remainder sits at
    ``-alpha``.  Valid when the risk constraint binds.
    """
    spec = sol.problem
    e_v = sol.expected_terminal
    if spec.alpha == 0.0:
        p0 = 0.0
    else:
        p0 = (K - e_v - spec.alpha) * (1.0 - spec.kappa) / (-spec.alpha)
    pb = (e_v + spec.alpha * (1.0 - p0)) / (spec.B + spec.alpha)
    return p0, pb, 1.0 - p0 - pb


def asymptotic_k_bounds(dist: StatePriceDistribution, w0: float, alpha: float,
                        kappa: float) -> tuple[float, float]:
    """Large-cap limits of the risk-budget bounds.

    ``k_upper -> w0/EZ - alpha ((1-kappa)^{-1} - 1)``; the lower limit keeps
    its two-branch form, collapsing to ``w0/EZ + alpha`` at high wealth.
    """
    inv_tail = 1.0 / (1.0 - kappa)
    grown = w0 / dist.EZ
    if w0 < -alpha * dist.EZ:
        h = dist.H0(h1_inv_extended(dist, w0 / (-alpha)))
        k_lo = -alpha * (1.0 - inv_tail) * (h - 1.0)
    else:
        k_lo = grown + alpha
    k_up = grown - alpha * (inv_tail - 1.0)
    return k_lo, k_up
