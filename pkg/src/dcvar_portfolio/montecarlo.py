"""Correlated path simulation, discrete replication, terminal risk statistics.

Paths use the exact lognormal step for both assets and the state-price
density, sharing one set of Brownian draws per step:

    d ln S_i = (mu_i - Gamma_ii / 2) dt + (sigma dW)_i
    d ln Z   = -(r + ||theta||^2 / 2) dt - theta' dW

so expectations like ``E[Z_T] = e^{-rT}`` and ``E[Z_T S_T^i] = S_0^i`` hold
without discretization bias; only the hedge is discretized.  Replication
rolls a self-financing book forward, resetting holdings at each rebalance
date from the allocation closed form; holdings are frozen over the final
rebalance interval, so the vanishing-volatility singularity at the horizon
is never evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (DomainError, EmptySample, InfeasibleK, InfeasibleSpec,
                     NoFeasibleAlpha)
from .gaussian import StatePriceDistribution
from .market import DerivedMarket
from .multipliers import CaseTag, ProblemSpec, k_bounds
from .policy import (AlphaSearchConfig, DEGENERATE_NU, PolicySolution, _log_or_ninf,
                     optimize_alpha, terminal_wealth)


@dataclass(frozen=True)
class PathConfig:
    """Simulation sizing: paths, exact-scheme steps, seed, rebalance count.

    ``rebalance_steps`` must divide ``n_steps``; it defaults to ``n_steps``
    (rebalance at every simulated step).
    """

    n_paths: int
    n_steps: int
    seed: int
    rebalance_steps: int | None = None

    def __post_init__(self) -> None:
        if self.n_paths < 1 or self.n_steps < 1:
            raise DomainError("n_paths and n_steps must be >= 1")
        if self.rebalance_steps is None:
            object.__setattr__(self, "rebalance_steps", self.n_steps)
        rb = self.rebalance_steps
        if rb < 1 or rb > self.n_steps or self.n_steps % rb != 0:
            raise DomainError(
                f"rebalance_steps={rb} must divide n_steps={self.n_steps}"
            )


@dataclass(frozen=True)
class PathEnsemble:
    """Stored paths: times (k+1,), prices (paths, k+1, assets), state-price (paths, k+1)."""

    times: np.ndarray
    s: np.ndarray
    z: np.ndarray


@dataclass(frozen=True)
class ReplicationResult:
    """Per-path terminal outcome of the discrete self-financing hedge."""

    v_terminal: np.ndarray
    z_terminal: np.ndarray
    payoff: np.ndarray
    max_short_cash_ratio: float


@dataclass(frozen=True)
class TerminalStats:
    """Empirical summary of a terminal-wealth sample.

    ``var_kappa`` is the lower kappa-quantile of the loss ``-V``;
    ``cvar_kappa`` the exceedance form evaluated at that quantile;
    ``dcvar_kappa = mean + cvar_kappa`` by definition.  ``atom_freqs`` is
    the nearest-atom classification when atom levels were supplied.
    """

    mean: float
    var_kappa: float
    cvar_kappa: float
    dcvar_kappa: float
    atom_freqs: tuple[float, ...] | None
    std_error: float


@dataclass(frozen=True)
class FrontierPoint:
    """One row of the risk-budget sweep; NaNs mark an infeasible budget."""

    K: float
    alpha_star: float
    expected_terminal: float
    k_lower: float
    k_upper: float
    case_tag: CaseTag | None


def _step_constants(mkt: DerivedMarket, dt: float):
    sq = math.sqrt(dt)
    drift_s = (mkt.params.mu - 0.5 * np.diag(mkt.gamma)) * dt
    drift_z = -(mkt.riskfree + 0.5 * mkt.theta_sq) * dt
    return mkt.sigma * sq, mkt.theta * sq, np.ascontiguousarray(drift_s), drift_z


def simulate_paths(mkt: DerivedMarket, cfg: PathConfig) -> PathEnsemble:
    """Simulate and store full paths of (S, Z) on the uniform step grid.

    Memory grows as ``n_paths * (n_steps + 1) * (n_assets + 1)``; use
    :func:`simulate_terminal` for large terminal-only studies.
    """
    sim_step, _, _ = _kernels.active_kernels()
    n, k = cfg.n_paths, cfg.n_steps
    dt = mkt.horizon / k
    sig_dt, th_dt, drift_s, drift_z = _step_constants(mkt, dt)
    s = np.tile(mkt.params.s0, (n, 1))
    z = np.ones(n)
    s_out = np.empty((n, k + 1, mkt.n_assets))
    z_out = np.empty((n, k + 1))
    s_out[:, 0, :] = s
    z_out[:, 0] = z
    for step in range(k):
        xi = _kernels.draw_normals(cfg.seed, step, n, mkt.n_assets)
        sim_step(s, z, xi, sig_dt, th_dt, drift_s, drift_z)
        s_out[:, step + 1, :] = s
        z_out[:, step + 1] = z
    times = np.linspace(0.0, mkt.horizon, k + 1)
    return PathEnsemble(times=times, s=s_out, z=z_out)


def simulate_terminal(mkt: DerivedMarket, cfg: PathConfig) -> tuple[np.ndarray, np.ndarray]:
    """Terminal ``(S_T, Z_T)`` only, streaming over steps with flat memory."""
    sim_step, _, _ = _kernels.active_kernels()
    n = cfg.n_paths
    dt = mkt.horizon / cfg.n_steps
    sig_dt, th_dt, drift_s, drift_z = _step_constants(mkt, dt)
    s = np.tile(mkt.params.s0, (n, 1))
    z = np.ones(n)
    for step in range(cfg.n_steps):
        xi = _kernels.draw_normals(cfg.seed, step, n, mkt.n_assets)
        sim_step(s, z, xi, sig_dt, th_dt, drift_s, drift_z)
    return s, z


def replicate(mkt: DerivedMarket, sol: PolicySolution, cfg: PathConfig) -> ReplicationResult:
    """Discrete self-financing replication of the solved policy.

    Holdings are reset from the allocation closed form at each of the
    ``rebalance_steps`` dates and held constant in between; cash accrues at
    the risk-free rate.  Returns per-path terminal wealth, terminal
    state-price level, the exact payoff at that level, and the worst
    short-cash ratio ``max(-cash) / w0`` seen at any rebalance date.
    """
    spec = sol.problem
    if sol.case_tag is CaseTag.RISK_FREE_ONLY or mkt.nu0 < DEGENERATE_NU:
        # All-cash book: no hedge to discretize, wealth compounds exactly.
        grown = spec.w0 * math.exp(mkt.riskfree * mkt.horizon)
        v = np.full(cfg.n_paths, grown)
        if mkt.nu0 < DEGENERATE_NU:
            z = np.full(cfg.n_paths, mkt.ez)
        else:
            _, z = simulate_terminal(mkt, cfg)
        return ReplicationResult(v_terminal=v, z_terminal=z,
                                 payoff=terminal_wealth(z, sol),
                                 max_short_cash_ratio=0.0)

    sim_step, rebalance, settle = _kernels.active_kernels()
    n, k = cfg.n_paths, cfg.n_steps
    stride = k // cfg.rebalance_steps
    dt = mkt.horizon / k
    sig_dt, th_dt, drift_s, drift_z = _step_constants(mkt, dt)
    ln_a = _log_or_ninf(sol.threshold_a)
    ln_b = _log_or_ninf(sol.threshold_b)
    coef_b = spec.B + spec.alpha
    coef_a = spec.alpha
    w_vec = np.linalg.solve(mkt.gamma, mkt.b)
    sum_w = float(w_vec.sum())
    growth = math.exp(mkt.riskfree * dt * stride)
    rate_half = mkt.riskfree + 0.5 * mkt.theta_sq

    s = np.tile(mkt.params.s0, (n, 1))
    z = np.ones(n)
    v = np.full(n, spec.w0)
    shares = np.zeros((n, mkt.n_assets))
    cash = np.zeros(n)
    worst_cash = 0.0
    for step in range(k):
        if step % stride == 0:
            remaining = mkt.horizon - step * dt
            m_t = -rate_half * remaining
            nu_t = math.sqrt(mkt.theta_sq * remaining)
            em = math.exp(m_t + 0.5 * nu_t * nu_t)
            rebalance(z, v, s, shares, cash, ln_a, ln_b, m_t, nu_t, em,
                      coef_b, coef_a, w_vec, sum_w)
            worst_cash = min(worst_cash, float(cash.min()))
        xi = _kernels.draw_normals(cfg.seed, step, n, mkt.n_assets)
        sim_step(s, z, xi, sig_dt, th_dt, drift_s, drift_z)
        if (step + 1) % stride == 0:
            settle(v, cash, shares, s, growth)
    return ReplicationResult(
        v_terminal=v, z_terminal=z, payoff=terminal_wealth(z, sol),
        max_short_cash_ratio=-worst_cash / spec.w0,
    )


def terminal_stats(values, kappa: float, atoms=None) -> TerminalStats:
    """VaR / CVaR / deviation-CVaR of a terminal-wealth sample.

    VaR is the lower kappa-quantile of the loss; CVaR evaluates the
    exceedance form at that quantile, which attains the minimum of the
    quantile-free characterization even when mass sits on atoms.  When
    ``atoms`` (e.g. ``(0, -alpha, B)``) is given, each sample is assigned
    to its nearest atom and the frequencies are reported.

    Raises
    ------
    EmptySample
        If ``values`` is empty.
    DomainError
        If ``kappa`` is not in (0.5, 1).
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptySample("terminal_stats requires a nonempty sample")
    if not (0.5 < kappa < 1.0):
        raise DomainError(f"kappa must be in (0.5, 1), got {kappa}")
    n = v.size
    loss = np.sort(-v)
    var = float(loss[math.ceil(kappa * n) - 1])
    excess = np.maximum(loss - var, 0.0)
    cvar = var + float(excess.sum()) / (n * (1.0 - kappa))
    mean = float(v.mean())
    freqs = None
    if atoms is not None:
        levels = np.asarray(atoms, dtype=float)
        nearest = np.argmin(np.abs(v[:, None] - levels[None, :]), axis=1)
        freqs = tuple(float(np.count_nonzero(nearest == i)) / n
                      for i in range(levels.size))
    return TerminalStats(
        mean=mean, var_kappa=var, cvar_kappa=cvar, dcvar_kappa=mean + cvar,
        atom_freqs=freqs, std_error=float(v.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0,
    )


def frontier(dist: StatePriceDistribution, mkt: DerivedMarket, w0: float,
             kappa: float, B: float, k_grid,
             search: AlphaSearchConfig | None = None) -> list[FrontierPoint]:
    """Sweep the risk budget: optimal alpha and expected value per grid point.

    Infeasible budgets yield NaN rows rather than aborting the sweep.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    if k_grid.size > 1 and np.any(np.diff(k_grid) <= 0):
        raise DomainError("k_grid must be strictly increasing")
    points: list[FrontierPoint] = []
    for k_val in k_grid:
        try:
            sol = optimize_alpha(dist, mkt, w0, float(k_val), kappa, B, search)
            bounds = k_bounds(dist, ProblemSpec(w0=w0, alpha=sol.alpha, kappa=kappa,
                                                B=B, K=float(k_val)))
            points.append(FrontierPoint(
                K=float(k_val), alpha_star=sol.alpha,
                expected_terminal=sol.expected_terminal,
                k_lower=bounds.k_lower, k_upper=bounds.k_upper,
                case_tag=sol.case_tag,
            ))
        except (NoFeasibleAlpha, InfeasibleSpec, InfeasibleK, DomainError):
            points.append(FrontierPoint(K=float(k_val), alpha_star=math.nan,
                                        expected_terminal=math.nan,
                                        k_lower=math.nan, k_upper=math.nan,
                                        case_tag=None))
    return points
