"""Brute-force verifiers independent of the closed-form solver.

``quad_H`` integrates the lognormal partial moments numerically, and
``grid_search_static`` re-solves the static payoff problem by direct search
over three-level payoffs ``M = B 1{Z <= a} - alpha 1{a < Z <= b}``: ``a``
runs over a log-spaced threshold grid, ``b`` is pinned down numerically so
the quadrature budget matches ``w0``, and every kept candidate has its
budget band and risk constraint certified by quadrature.  Nothing here
touches the analytic H closed forms or the multiplier machinery, so
agreement with the solver is a genuine cross-check.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError, NoFeasibleGridPoint

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _integrand(p: int, m0: float, nu0: float):
    def f(u: float) -> float:
        w = (u - m0) / nu0
        return math.exp(p * u - 0.5 * w * w) * _INV_SQRT_2PI / nu0
    return f


def quad_H(m0: float, nu0: float, p: int, y: float) -> float:
    """``E[Z^p 1{Z <= y}]`` for ``ln Z ~ Normal(m0, nu0^2)`` by adaptive quadrature.

    Integrates ``exp(p u) phi((u - m0)/nu0)/nu0`` over ``u in (-inf, ln y]``;
    absolute error below 1e-9.
    """
    if p not in (0, 1):
        raise DomainError(f"p must be 0 or 1, got {p}")
    if nu0 <= 0.0:
        raise DomainError(f"nu0 must be > 0, got {nu0}")
    if y <= 0.0:
        return 0.0
    upper = math.inf if math.isinf(y) else math.log(y)
    val, _ = quad(_integrand(p, m0, nu0), -math.inf, upper,
                  epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def _cumulative_tables(m0: float, nu0: float, log_levels: np.ndarray):
    """H0 and H1 at each grid level, by accumulated segment quadrature."""
    n = log_levels.size
    h0 = np.empty(n)
    h1 = np.empty(n)
    for p, out in ((0, h0), (1, h1)):
        f = _integrand(p, m0, nu0)
        acc, _ = quad(f, -math.inf, log_levels[0], epsabs=1e-13, epsrel=1e-13)
        out[0] = acc
        for k in range(1, n):
            seg, _ = quad(f, log_levels[k - 1], log_levels[k],
                          epsabs=1e-13, epsrel=1e-13)
            acc += seg
            out[k] = acc
    return h0, h1


def grid_search_static(m0: float, nu0: float, w0: float, alpha: float,
                       kappa: float, B: float, K: float, grid_n: int = 2000,
                       budget_tol: float = 1e-4) -> tuple[float, float, float]:
    """Best three-level payoff with grid lower threshold, constraints by quadrature.

    For each of ``grid_n`` log-spaced lower thresholds ``a`` (spanning +-8
    standard deviations of ``ln Z``, plus ``a = 0``), the upper threshold
    ``b >= a`` is located by root-finding so that the quadrature budget
    ``E[Z M]`` equals ``w0``; thresholds whose budget cannot be matched with
    any ``b`` in ``[a, +inf]`` are kept only when the residual stays inside
    the band ``+- budget_tol * w0`` (exact equality is measure-zero on a
    grid).  Candidates must also satisfy the deviation-risk constraint
    ``E[M] + alpha + (1-kappa)^{-1} E[(-M-alpha)^+] <= K``.  Returns the
    feasible ``(a, b, E[M])`` with the largest expected payoff.

    Raises
    ------
    NoFeasibleGridPoint
        If no candidate satisfies both constraints.
    """
    if grid_n < 200:
        raise DomainError(f"grid_n must be >= 200, got {grid_n}")
    if nu0 <= 0.0:
        raise DomainError(f"nu0 must be > 0, got {nu0}")

    log_levels = m0 + nu0 * np.linspace(-8.0, 8.0, grid_n)
    h0_tab, h1_tab = _cumulative_tables(m0, nu0, log_levels)
    ez = quad_H(m0, nu0, 1, math.inf)
    inv_tail = 1.0 / (1.0 - kappa)
    band = budget_tol * w0
    f1 = _integrand(1, m0, nu0)
    f0 = _integrand(0, m0, nu0)

    def h_above(p: int, base_idx: int, log_b: float) -> float:
        """H_p(b) continued from the table node at ``base_idx``."""
        tab = h1_tab if p == 1 else h0_tab
        f = f1 if p == 1 else f0
        seg, _ = quad(f, log_levels[base_idx], log_b, epsabs=1e-13, epsrel=1e-13)
        return tab[base_idx] + seg

    best = None
    candidates = [(0.0, 0.0, 0.0)] + [
        (math.exp(log_levels[i]), h0_tab[i], h1_tab[i]) for i in range(grid_n)
    ]
    for a, h0_a, h1_a in candidates:
        target = (w0 - (B + alpha) * h1_a) / (-alpha)
        if target < h1_a - band / (-alpha):
            continue  # would need b < a: not a three-level payoff
        if target >= h1_tab[-1]:
            # upper threshold at (or beyond) the grid top: treat as +inf and
            # let the budget band decide whether the candidate is kept
            b, h0_b, h1_b = math.inf, 1.0, ez
        elif target <= h1_a:
            b, h0_b, h1_b = a, h0_a, h1_a
        else:
            j = int(np.searchsorted(h1_tab, target))
            lo = log_levels[j - 1] if j > 0 else math.log(max(a, 1e-300))
            lo = max(lo, math.log(a)) if a > 0.0 else lo
            base = max(j - 1, 0)
            log_b = brentq(lambda u: h_above(1, base, u) - target,
                           lo, log_levels[j], xtol=1e-13, rtol=8.9e-16)
            b = math.exp(log_b)
            h1_b = h_above(1, base, log_b)
            h0_b = h_above(0, base, log_b)
        budget = (B + alpha) * h1_a - alpha * h1_b
        if abs(budget - w0) > band:
            continue
        value = (B + alpha) * h0_a - alpha * h0_b
        risk = value + alpha + inv_tail * (-alpha) * (1.0 - h0_b)
        if risk > K + 1e-12 * max(1.0, abs(K)):
            continue
        if best is None or value > best[2]:
            best = (a, b, value)
    if best is None:
        raise NoFeasibleGridPoint(
            f"no threshold pair met budget {w0} +- {band} with risk <= {K}"
        )
    return best
