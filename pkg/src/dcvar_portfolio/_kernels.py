"""Hot per-step kernels for path simulation and replication.

Two interchangeable backends compute the same updates:

  * a numba ``@njit(parallel=True)`` backend, compiled lazily on first use;
  * a pure-numpy fallback, selected by setting ``DCVAR_FORCE_NUMPY=1``
    (or used automatically when numba is not importable).

``DCVAR_THREADS`` caps numba parallelism (0 or unset means auto).  Random
draws always come from numpy Philox counter streams keyed by
``(seed, step, path-block)``, so the two backends consume identical
normals and agree to floating-point roundoff; within one backend results
are bit-identical for a fixed seed and config regardless of how blocks
are scheduled.
"""

from __future__ import annotations

import math
import os

import numpy as np

RNG_BLOCK = 65536

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


FORCE_NUMPY = _env_flag("DCVAR_FORCE_NUMPY")

try:
    import numba as _numba_probe  # noqa: F401
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not FORCE_NUMPY


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def draw_normals(seed: int, step: int, n_paths: int, n_vars: int) -> np.ndarray:
    """Standard-normal draws for one time step, Philox substream per path block."""
    out = np.empty((n_paths, n_vars))
    for start in range(0, n_paths, RNG_BLOCK):
        size = min(RNG_BLOCK, n_paths - start)
        gen = np.random.Generator(
            np.random.Philox(key=seed, counter=[0, 0, step, start // RNG_BLOCK])
        )
        out[start:start + size] = gen.standard_normal((size, n_vars))
    return out


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def sim_step_numpy(s, z, xi, sig_dt, th_dt, drift_s, drift_z):
    """Advance prices and the state-price density by one exact log step."""
    s *= np.exp(drift_s[None, :] + xi @ sig_dt.T)
    z *= np.exp(drift_z - xi @ th_dt)


def rebalance_numpy(z, v, s, shares, cash, ln_a, ln_b, m_t, nu_t, em,
                    coef_b, coef_a, w_vec, sum_w):
    """Set holdings from the allocation closed form; cash is the remainder."""
    lnz = np.log(z)
    y1 = (ln_a - lnz - m_t) / nu_t - nu_t
    y2 = (ln_b - lnz - m_t) / nu_t - nu_t
    scale = (em / nu_t * _INV_SQRT_2PI) * (coef_b * np.exp(-0.5 * y1 * y1)
                                           - coef_a * np.exp(-0.5 * y2 * y2))
    shares[:] = scale[:, None] * w_vec[None, :] / s
    cash[:] = v - scale * sum_w


def settle_numpy(v, cash, shares, s, growth):
    """Mark wealth: grown cash plus the risky positions at current prices."""
    v[:] = cash * growth + (shares * s).sum(axis=1)


_NUMPY_KERNELS = (sim_step_numpy, rebalance_numpy, settle_numpy)

# ---------------------------------------------------------------------------
# numba backend (compiled on first use; import cost stays off the CLI path)
# ---------------------------------------------------------------------------

_NUMBA_KERNELS = None


def _compile_numba():
    global _NUMBA_KERNELS
    if _NUMBA_KERNELS is not None:
        return _NUMBA_KERNELS

    import numba
    from numba import njit, prange

    threads = os.environ.get("DCVAR_THREADS", "").strip()
    if threads and threads != "0":
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))

    @njit(parallel=True, cache=True)
    def sim_step_nb(s, z, xi, sig_dt, th_dt, drift_s, drift_z):
        n_paths, n = s.shape
        for p in prange(n_paths):
            acc_z = 0.0
            for j in range(n):
                acc_z += th_dt[j] * xi[p, j]
                acc = 0.0
                for i in range(j + 1):
                    acc += sig_dt[j, i] * xi[p, i]
                s[p, j] *= math.exp(drift_s[j] + acc)
            z[p] *= math.exp(drift_z - acc_z)

    @njit(parallel=True, cache=True)
    def rebalance_nb(z, v, s, shares, cash, ln_a, ln_b, m_t, nu_t, em,
                     coef_b, coef_a, w_vec, sum_w):
        n_paths, n = s.shape
        pref = em / nu_t * _INV_SQRT_2PI
        for p in prange(n_paths):
            lnz = math.log(z[p])
            y1 = (ln_a - lnz - m_t) / nu_t - nu_t
            y2 = (ln_b - lnz - m_t) / nu_t - nu_t
            scale = pref * (coef_b * math.exp(-0.5 * y1 * y1)
                            - coef_a * math.exp(-0.5 * y2 * y2))
            for j in range(n):
                shares[p, j] = scale * w_vec[j] / s[p, j]
            cash[p] = v[p] - scale * sum_w

    @njit(parallel=True, cache=True)
    def settle_nb(v, cash, shares, s, growth):
        n_paths, n = s.shape
        for p in prange(n_paths):
            acc = 0.0
            for j in range(n):
                acc += shares[p, j] * s[p, j]
            v[p] = cash[p] * growth + acc

    _NUMBA_KERNELS = (sim_step_nb, rebalance_nb, settle_nb)
    return _NUMBA_KERNELS


def active_kernels():
    """(sim_step, rebalance, settle) for the selected backend."""
    if USE_NUMBA:
        return _compile_numba()
    return _NUMPY_KERNELS
