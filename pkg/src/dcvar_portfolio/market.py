"""Market inputs and the derived state-price-density quantities.

A deterministic multi-asset Black-Scholes market with constant coefficients
is fully described by the horizon, the constant risk-free rate, and the
per-asset drift / volatility / correlation inputs.  From these we derive the
covariance ``Gamma = D corr D``, a lower-triangular factor ``sigma`` with
``sigma sigma^T = Gamma``, the market price of risk ``theta = sigma^{-1} b``
with ``b = mu - r``, and the log state-price-density moments

    m(t)    = -(r + 0.5 ||theta||^2) (T - t)
    nu^2(t) =  ||theta||^2 (T - t)

so that ``ln(Z_T / Z_t)`` is Normal(m(t), nu^2(t)) and ``E[Z_T] = exp(-rT)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DomainError, NotPositiveDefinite, OutOfHorizon

# Pivot floor for the covariance factorization.  Failure below this level is
# reported as NotPositiveDefinite rather than silently regularized.
CHOLESKY_PIVOT_TOL = 1e-12


def _as_vector(name: str, x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class MarketParams:
    """Raw market inputs.

    Parameters
    ----------
    horizon : float
        Investment horizon T in years, > 0.
    riskfree : float
        Constant risk-free rate per year.
    s0 : array_like, shape (n,)
        Initial asset prices, all > 0.
    mu : array_like, shape (n,)
        Annual drifts.
    vol : array_like, shape (n,)
        Annual volatilities, all > 0.
    corr : array_like, shape (n, n)
        Correlation matrix: symmetric, unit diagonal, positive definite
        (definiteness is checked by the factorization in ``build_market``).
    """

    horizon: float
    riskfree: float
    s0: np.ndarray
    mu: np.ndarray
    vol: np.ndarray
    corr: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "s0", _as_vector("s0", self.s0))
        object.__setattr__(self, "mu", _as_vector("mu", self.mu))
        object.__setattr__(self, "vol", _as_vector("vol", self.vol))
        object.__setattr__(self, "corr", np.asarray(self.corr, dtype=float))
        if self.horizon <= 0.0:
            raise DomainError(f"horizon must be > 0, got {self.horizon}")
        n = self.s0.size
        if self.mu.size != n or self.vol.size != n:
            raise DimensionMismatch(
                f"s0/mu/vol lengths disagree: {n}, {self.mu.size}, {self.vol.size}"
            )
        if self.corr.shape != (n, n):
            raise DimensionMismatch(
                f"corr must have shape ({n}, {n}), got {self.corr.shape}"
            )
        if np.any(self.s0 <= 0.0):
            raise DomainError("all initial prices must be > 0")
        if np.any(self.vol <= 0.0):
            raise DomainError("all volatilities must be > 0")
        if np.any(np.diag(self.corr) != 1.0):
            raise DomainError("corr diagonal must be exactly 1")
        if not np.array_equal(self.corr, self.corr.T):
            raise DomainError("corr must be symmetric")

    @property
    def n_assets(self) -> int:
        return self.s0.size


@dataclass(frozen=True)
class DerivedMarket:
    """Market quantities derived from :class:`MarketParams`.

    ``sigma`` is the lower-triangular factor of ``gamma``; ``theta`` solves
    ``sigma theta = b`` by forward substitution; ``m0``/``nu0`` are the mean
    and standard deviation of ``ln Z_T`` and ``ez = E[Z_T] = exp(-rT)``.
    """

    params: MarketParams
    gamma: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    b: np.ndarray
    theta: np.ndarray
    m0: float
    nu0: float
    ez: float

    @property
    def horizon(self) -> float:
        return self.params.horizon

    @property
    def riskfree(self) -> float:
        return self.params.riskfree

    @property
    def n_assets(self) -> int:
        return self.params.n_assets

    @property
    def theta_sq(self) -> float:
        """Squared norm of the market price of risk."""
        return float(self.theta @ self.theta)


def _cholesky_lower(a: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor with an explicit pivot floor."""
    n = a.shape[0]
    low = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - float(low[j, :j] @ low[j, :j])
        if pivot <= CHOLESKY_PIVOT_TOL:
            raise NotPositiveDefinite(
                f"correlation pivot {pivot:.3e} at index {j} is below {CHOLESKY_PIVOT_TOL:.0e}"
            )
        low[j, j] = math.sqrt(pivot)
        for i in range(j + 1, n):
            low[i, j] = (a[i, j] - float(low[i, :j] @ low[j, :j])) / low[j, j]
    return low


def _forward_solve(low: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``low x = rhs`` for lower-triangular ``low``."""
    n = rhs.size
    x = np.zeros(n)
    for i in range(n):
        x[i] = (rhs[i] - float(low[i, :i] @ x[:i])) / low[i, i]
    return x


def build_market(params: MarketParams) -> DerivedMarket:
    """Derive covariance, volatility factor, and state-price moments.

    The correlation matrix is factorized (its unit diagonal keeps the pivot
    floor scale-free) and the factor is vol-scaled, which equals the
    lower-triangular factor of the covariance itself.

    Raises
    ------
    NotPositiveDefinite
        If the correlation factorization hits a pivot below the floor.
    DimensionMismatch
        If the input arrays disagree in length (raised by ``MarketParams``).
    """
    d = np.diag(params.vol)
    gamma = d @ params.corr @ d
    sigma = d @ _cholesky_lower(params.corr)
    b = params.mu - params.riskfree
    theta = _forward_solve(sigma, b)
    theta_sq = float(theta @ theta)
    t = params.horizon
    m0 = -(params.riskfree + 0.5 * theta_sq) * t
    nu0 = math.sqrt(theta_sq * t)
    ez = math.exp(-params.riskfree * t)
    return DerivedMarket(
        params=params, gamma=gamma, sigma=sigma, b=b, theta=theta,
        m0=m0, nu0=nu0, ez=ez,
    )


def state_price_moments(mkt: DerivedMarket, t: float) -> tuple[float, float]:
    """Mean and standard deviation of ``ln(Z_T / Z_t)``.

    Returns ``(m(t), nu(t))`` with ``m(t) = -(r + 0.5 ||theta||^2)(T - t)``
    and ``nu(t) = ||theta|| sqrt(T - t)``.

    Raises
    ------
    OutOfHorizon
        If ``t`` is not in ``[0, T]``.
    """
    if t < 0.0 or t > mkt.horizon:
        raise OutOfHorizon(f"t={t} outside [0, {mkt.horizon}]")
    remaining = mkt.horizon - t
    m = -(mkt.riskfree + 0.5 * mkt.theta_sq) * remaining
    nu = math.sqrt(mkt.theta_sq * remaining)
    return m, nu


def discount(mkt: DerivedMarket, t0: float, t1: float) -> float:
    """Deterministic discount factor ``exp(-r (t1 - t0))`` for ``0 <= t0 <= t1 <= T``."""
    if not (0.0 <= t0 <= t1 <= mkt.horizon):
        raise OutOfHorizon(f"require 0 <= t0 <= t1 <= {mkt.horizon}, got ({t0}, {t1})")
    return math.exp(-mkt.riskfree * (t1 - t0))
