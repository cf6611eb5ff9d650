import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hestonlab.market import (
    HestonParams,
    NotPSDError,
    TimeGrid,
    draw_increments,
    evolve,
    simulate_batch,
    simulate_paths,
    trial_rng,
    validate_correlations,
)

import oracles

CAPTION = HestonParams(mu=0.1, kappa=1.2, theta=0.05, sigma=0.5, rho=-0.66, s0=100.0, v0=0.025)


def test_identity_factor():
    np.testing.assert_array_equal(validate_correlations(np.eye(3)), np.eye(3))


def test_two_by_two_factor():
    low = validate_correlations([[1, 0.9], [0.9, 1]])
    np.testing.assert_allclose(low, oracles.cholesky_2x2(0.9), rtol=0, atol=1e-15)
    assert low[1, 1] == pytest.approx(0.43589, abs=1e-5)


def test_not_psd():
    with pytest.raises(NotPSDError):
        validate_correlations([[1, 1.5], [1.5, 1]])


def test_semidefinite_matrix_is_accepted():
    ones = np.ones((3, 3))
    low = validate_correlations(ones)
    np.testing.assert_allclose(low @ low.T, ones, atol=1e-14)


@pytest.mark.parametrize("bad", [[[1, 0.2], [0.3, 1]], [[2, 0], [0, 1]], [[1, 0, 0], [0, 1, 0]]])
def test_malformed_matrices(bad):
    with pytest.raises(ValueError):
        validate_correlations(bad)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_factor_reproduces_random_correlation(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n + 2))
    cov = a @ a.T
    d = np.sqrt(np.diag(cov))
    corr = cov / np.outer(d, d)
    np.fill_diagonal(corr, 1.0)
    low = validate_correlations(corr)
    assert np.allclose(np.triu(low, 1), 0)
    np.testing.assert_allclose(low @ low.T, corr, atol=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [dict(s0=0), dict(v0=0), dict(kappa=0), dict(theta=-1), dict(sigma=-0.1), dict(rho=1.2), dict(mu=math.inf)],
)
def test_heston_params_validation(kwargs):
    with pytest.raises(ValueError):
        HestonParams(**kwargs)


def test_grid():
    g = TimeGrid(2.0, 2.0**-8)
    assert g.steps == 512 and g.size == 513
    assert g.times()[-1] == 2.0
    for bad in [dict(dt=0), dict(horizon=0), dict(horizon=1.0, dt=0.3)]:
        with pytest.raises(ValueError):
            TimeGrid(**bad)


def test_increments_independent_when_uncorrelated():
    inc = draw_increments(np.eye(3), [0, 0, 0], trial_rng(1, 0), 200_000)
    corr = np.corrcoef(inc)
    off = corr - np.eye(6)
    assert np.max(np.abs(off)) < 0.01


def test_increments_perfect_leverage():
    inc = draw_increments(np.eye(2), [1.0, 1.0], trial_rng(3, 5), 100)
    np.testing.assert_array_equal(inc[2:], inc[:2])


def test_increments_leverage_correlation_estimate():
    inc = draw_increments(np.eye(1), [-0.66], trial_rng(11, 0), 1_000_000)
    assert np.corrcoef(inc[0], inc[1])[0, 1] == pytest.approx(-0.66, abs=3e-3)


def test_increments_asset_correlation_and_variance_cross_correlation():
    corr = [[1, 0.8], [0.8, 1]]
    rho = np.array([-0.5, 0.4])
    inc = draw_increments(validate_correlations(corr), rho, trial_rng(2, 0), 400_000)
    c = np.corrcoef(inc)
    assert c[0, 1] == pytest.approx(0.8, abs=5e-3)
    # variance noises inherit rho_i * rho_j * rho_ij
    assert c[2, 3] == pytest.approx(rho[0] * rho[1] * 0.8, abs=5e-3)


def test_constant_variance_without_vol_of_vol():
    p = HestonParams(sigma=0.0, v0=0.05, theta=0.05)
    sc = simulate_paths([p], [[1.0]], TimeGrid(1.0, 0.01), 0, 0)
    assert np.all(sc.variances == 0.05)


def test_constant_price_without_drift_or_noise():
    # zero variance is outside HestonParams' domain, so feed the scheme directly
    p = SimpleNamespace(mu=0.0, kappa=1.0, theta=0.0, sigma=0.0, rho=0.0, s0=100.0, v0=0.0)
    grid = TimeGrid(1.0, 0.01)
    inc = draw_increments(np.eye(1), [0.0], trial_rng(0, 0), grid.steps)
    prices, var = evolve([p], grid, inc)
    assert np.all(prices == 100.0) and np.all(var == 0.0)


def test_determinism_and_initial_column():
    params = [CAPTION, HestonParams(mu=0.2, kappa=1.0)]
    corr = [[1, 0.3], [0.3, 1]]
    a = simulate_paths(params, corr, TimeGrid(), 7, 3)
    b = simulate_paths(params, corr, TimeGrid(), 7, 3)
    c = simulate_paths(params, corr, TimeGrid(), 7, 4)
    np.testing.assert_array_equal(a.prices, b.prices)
    np.testing.assert_array_equal(a.variances, b.variances)
    assert not np.array_equal(a.prices, c.prices)
    np.testing.assert_array_equal(a.prices[:, 0], [100.0, 100.0])
    np.testing.assert_array_equal(a.variances[:, 0], [0.025, 0.025])


def test_batch_rows_match_single_trials():
    params = [CAPTION] * 3
    factor = validate_correlations(np.eye(3))
    prices, var = simulate_batch(params, factor, TimeGrid(), 9, [4, 0, 17])
    for row, t in enumerate([4, 0, 17]):
        sc = simulate_paths(params, np.eye(3), TimeGrid(), 9, t)
        np.testing.assert_array_equal(prices[row], sc.prices)
        np.testing.assert_array_equal(var[row], sc.variances)


def test_positivity_under_feller_violation():
    assert 2 * CAPTION.kappa * CAPTION.theta < CAPTION.sigma**2
    prices, var = simulate_batch([CAPTION] * 2, np.eye(2), TimeGrid(), 5, range(200))
    assert np.all(prices > 0)
    assert np.all(var >= 0)
    assert np.any(var == 0)  # truncation is actually exercised


def test_moments_small_sample():
    prices, var = simulate_batch([CAPTION], np.eye(1), TimeGrid(), 123, range(2000))
    s_t, v_t = prices[:, 0, -1], var[:, 0, -1]
    se_s = s_t.std(ddof=1) / math.sqrt(len(s_t))
    se_v = v_t.std(ddof=1) / math.sqrt(len(v_t))
    assert abs(s_t.mean() - oracles.heston_mean_price(100, 0.1, 2)) < 3 * se_s
    assert abs(v_t.mean() - oracles.cir_mean(0.025, 1.2, 0.05, 2)) < 3 * se_v


def test_leverage_sign_in_realized_returns():
    for rho in (-0.66, 0.66):
        p = HestonParams(rho=rho)
        prices, var = simulate_batch([p], np.eye(1), TimeGrid(), 1, range(100))
        dlog = np.diff(np.log(prices[:, 0]), axis=-1).ravel()
        dv = np.diff(var[:, 0], axis=-1).ravel()
        assert np.sign(np.corrcoef(dlog, dv)[0, 1]) == np.sign(rho)


def test_realized_asset_correlation_is_monotone_in_rho():
    realized = []
    for r in (-0.5, 0.0, 0.5, 0.9):
        prices, _ = simulate_batch([CAPTION] * 2, validate_correlations([[1, r], [r, 1]]), TimeGrid(), 2, range(50))
        rets = np.diff(np.log(prices), axis=-1)
        realized.append(np.corrcoef(rets[:, 0].ravel(), rets[:, 1].ravel())[0, 1])
    assert all(x < y for x, y in zip(realized, realized[1:]))


def test_seed_range():
    with pytest.raises(ValueError):
        trial_rng(-1, 0)
    with pytest.raises(ValueError):
        trial_rng(0, 2**64)
