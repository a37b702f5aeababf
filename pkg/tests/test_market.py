import math

import numpy as np
import pytest

import dcvar_portfolio as dp
from conftest import FOUR_ASSET, make_market


def test_covariance_entry_hand_value(market):
    # Gamma[0][1] = corr01 * vol0 * vol1 = 0.2 * 0.08 * 0.12
    assert market.gamma[0, 1] == pytest.approx(0.00192, abs=1e-15)


def test_identity_corr_gives_diagonal_sigma():
    vols = [0.1, 0.25, 0.4]
    mkt = dp.build_market(dp.MarketParams(
        horizon=2.0, riskfree=0.01, s0=[1.0] * 3, mu=[0.05] * 3,
        vol=vols, corr=np.eye(3),
    ))
    assert np.allclose(mkt.sigma, np.diag(vols), atol=1e-15)


def test_off_range_correlation_rejected():
    corr = [[1.0, 1.5], [1.5, 1.0]]
    with pytest.raises(dp.NotPositiveDefinite):
        dp.build_market(dp.MarketParams(
            horizon=1.0, riskfree=0.0, s0=[1.0, 1.0], mu=[0.1, 0.1],
            vol=[0.2, 0.2], corr=corr,
        ))


def test_factor_reconstructs_covariance(market):
    err = np.max(np.abs(market.sigma @ market.sigma.T - market.gamma))
    assert err <= 1e-10


def test_theta_solves_linear_system(market):
    residual = np.max(np.abs(market.sigma @ market.theta - market.b))
    assert residual <= 1e-10
    # independent dense solve
    expected = np.linalg.solve(market.sigma, market.b)
    assert np.allclose(market.theta, expected, rtol=1e-12)


def test_nu0_is_theta_norm_times_sqrt_t(market):
    assert market.nu0 == pytest.approx(
        np.linalg.norm(market.theta) * math.sqrt(market.horizon), rel=1e-14)
    m0, nu0 = dp.state_price_moments(market, 0.0)
    assert (m0, nu0) == (market.m0, market.nu0)


def test_moments_vanish_at_horizon(market):
    assert dp.state_price_moments(market, market.horizon) == (0.0, 0.0)


def test_moments_zero_premium(flat_market):
    m0, nu0 = dp.state_price_moments(flat_market, 0.0)
    assert m0 == pytest.approx(-0.02 * 1.0, rel=1e-14)
    assert nu0 == 0.0


def test_variance_additivity(market):
    # nu^2(0) = nu^2(t) + ||theta||^2 t for every t
    for t in np.linspace(0.0, market.horizon, 7):
        _, nu_t = dp.state_price_moments(market, float(t))
        assert market.nu0 ** 2 == pytest.approx(
            nu_t ** 2 + market.theta_sq * t, rel=1e-12)


def test_nu_strictly_decreasing(market):
    ts = np.linspace(0.0, market.horizon, 25)
    nus = [dp.state_price_moments(market, float(t))[1] for t in ts]
    assert all(a > b for a, b in zip(nus, nus[1:]))


def test_moments_out_of_horizon(market):
    with pytest.raises(dp.OutOfHorizon):
        dp.state_price_moments(market, -0.1)
    with pytest.raises(dp.OutOfHorizon):
        dp.state_price_moments(market, market.horizon + 1e-9)


def test_discount_values(market):
    assert dp.discount(market, 0.0, 0.0) == 1.0
    # r=0.02, T=1: e^{-0.02}
    assert dp.discount(market, 0.0, 1.0) == pytest.approx(0.980199, abs=1e-6)
    assert dp.discount(market, 0.0, 1.0) == pytest.approx(math.exp(-0.02), rel=1e-15)
    zero_rate = make_market(riskfree=0.0)
    for t0, t1 in ((0.0, 0.3), (0.2, 0.9), (0.0, 1.0)):
        assert dp.discount(zero_rate, t0, t1) == 1.0


def test_discount_out_of_horizon(market):
    with pytest.raises(dp.OutOfHorizon):
        dp.discount(market, 0.5, 0.2)
    with pytest.raises(dp.OutOfHorizon):
        dp.discount(market, 0.0, market.horizon + 0.1)


def test_dimension_mismatch():
    with pytest.raises(dp.DimensionMismatch):
        dp.MarketParams(horizon=1.0, riskfree=0.0, s0=[1.0, 1.0], mu=[0.1],
                        vol=[0.2, 0.2], corr=np.eye(2))
    with pytest.raises(dp.DimensionMismatch):
        dp.MarketParams(horizon=1.0, riskfree=0.0, s0=[1.0], mu=[0.1],
                        vol=[0.2], corr=np.eye(2))


def test_invalid_inputs_rejected():
    with pytest.raises(dp.DomainError):
        dp.MarketParams(horizon=0.0, riskfree=0.0, s0=[1.0], mu=[0.1],
                        vol=[0.2], corr=[[1.0]])
    with pytest.raises(dp.DomainError):
        dp.MarketParams(horizon=1.0, riskfree=0.0, s0=[1.0], mu=[0.1],
                        vol=[0.0], corr=[[1.0]])
    with pytest.raises(dp.DomainError):
        dp.MarketParams(horizon=1.0, riskfree=0.0, s0=[1.0, 1.0], mu=[0.1, 0.1],
                        vol=[0.2, 0.2], corr=[[1.0, 0.1], [0.2, 1.0]])
    with pytest.raises(dp.DomainError):
        dp.MarketParams(horizon=1.0, riskfree=0.0, s0=[1.0], mu=[0.1],
                        vol=[0.2], corr=[[0.999]])


def test_reconstruction_on_random_correlations():
    rng = np.random.default_rng(5)
    for _ in range(10):
        n = int(rng.integers(2, 7))
        raw = rng.normal(size=(n, n + 3))
        cov = raw @ raw.T
        d = np.sqrt(np.diag(cov))
        corr = cov / np.outer(d, d)
        np.fill_diagonal(corr, 1.0)
        corr = np.triu(corr, 1) + np.triu(corr, 1).T + np.eye(n)
        mkt = dp.build_market(dp.MarketParams(
            horizon=1.0, riskfree=0.01, s0=np.ones(n),
            mu=rng.uniform(0.0, 0.2, n), vol=rng.uniform(0.05, 0.5, n), corr=corr,
        ))
        assert np.max(np.abs(mkt.sigma @ mkt.sigma.T - mkt.gamma)) <= 1e-10
        assert np.max(np.abs(mkt.sigma @ mkt.theta - mkt.b)) <= 1e-10
