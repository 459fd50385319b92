import math

import numpy as np
import pytest

from fracvol import (
    MarketParams,
    SamplePath,
    TimeGrid,
    ViabilityBreachError,
    discount_factor,
    riskfree_price,
    simulate_prices,
    stochastic_exponential,
    theta,
    vol_from_state,
)


def two_asset_params(rate=0.05, drifts=(0.1, 0.02)):
    return MarketParams(
        rate=rate,
        drifts=np.asarray(drifts, dtype=float),
        initial_prices=np.array([1.0, 1.0]),
        projections=np.array([[1.0, 1.0], [1.0, 0.0]]),
        anchor_indices=(0, 0),
    )


def brownian_path(grid, d, seed):
    rng = np.random.default_rng(seed)
    inc = rng.normal(scale=math.sqrt(grid.dt), size=(grid.steps, d))
    return SamplePath(grid, np.vstack([np.zeros(d), np.cumsum(inc, axis=0)]))


class TestVolProjection:
    def test_reference_projection(self):
        grid = TimeGrid(1.0, 2)
        u = SamplePath(grid, np.array([[1.0, 0.0], [2.0, -0.5], [0.3, 0.1]]))
        v = vol_from_state(u, two_asset_params())
        assert np.allclose(v.values, [[1.0, 1.0], [1.5, 2.0], [0.4, 0.3]])

    def test_identity_projection(self):
        params = MarketParams(
            rate=0.05,
            drifts=np.zeros(2),
            initial_prices=np.ones(2),
            projections=np.eye(2),
            anchor_indices=(0, 1),
        )
        grid = TimeGrid(1.0, 3)
        u = brownian_path(grid, 2, 1)
        assert np.array_equal(vol_from_state(u, params).values, u.values)

    def test_constant_state_constant_vol(self):
        grid = TimeGrid(1.0, 4)
        u = SamplePath(grid, np.tile([0.2, 0.3], (5, 1)))
        v = vol_from_state(u, two_asset_params())
        assert np.allclose(v.values, np.tile([0.5, 0.2], (5, 1)))


class TestRiskfree:
    def test_initial_value(self):
        assert riskfree_price(0.0, two_asset_params()) == pytest.approx(1.0)

    def test_exponential_value(self):
        assert riskfree_price(1.0, two_asset_params()) == pytest.approx(
            math.exp(0.05), rel=1e-14
        )

    def test_discount_is_exact_inverse(self):
        params = two_asset_params()
        t = 0.73
        assert discount_factor(t, params) * riskfree_price(t, params) == pytest.approx(
            1.0, rel=1e-14
        )

    def test_rate_must_be_positive(self):
        with pytest.raises(ValueError, match="rate"):
            two_asset_params(rate=0.0)


class TestSimulatePrices:
    def test_zero_vol_deterministic_growth(self):
        grid = TimeGrid(1.0, 16)
        params = two_asset_params(drifts=(0.1, -0.05))
        vol = SamplePath(grid, np.zeros((17, 2)))
        w = brownian_path(grid, 2, 2)
        prices = simulate_prices(vol, w, params)
        expected = np.exp(np.outer(grid.times, params.drifts))
        assert np.allclose(prices.values, expected, rtol=1e-12)

    def test_zero_driver_constant_vol(self):
        grid = TimeGrid(1.0, 8)
        params = two_asset_params(drifts=(0.1, 0.02))
        v = np.array([0.5, 0.2])
        vol = SamplePath(grid, np.tile(v, (9, 1)))
        w = SamplePath(grid, np.zeros((9, 2)))
        prices = simulate_prices(vol, w, params)
        expected = np.exp(np.outer(grid.times, params.drifts - 0.5 * v**2))
        assert np.allclose(prices.values, expected, rtol=1e-12)

    def test_lognormal_moments(self):
        grid = TimeGrid(1.0, 16)
        params = two_asset_params(drifts=(0.1, 0.02))
        v = np.array([0.5, 0.2])
        vol = SamplePath(grid, np.tile(v, (17, 1)))
        n_paths = 20_000
        rng = np.random.default_rng(7)
        logs = np.empty((n_paths, 2))
        for i in range(n_paths):
            inc = rng.normal(scale=math.sqrt(grid.dt), size=(grid.steps, 2))
            w = SamplePath(grid, np.vstack([np.zeros(2), np.cumsum(inc, axis=0)]))
            logs[i] = np.log(simulate_prices(vol, w, params).terminal)
        for k in range(2):
            mean_target = params.drifts[k] - 0.5 * v[k] ** 2
            se_mean = logs[:, k].std(ddof=1) / math.sqrt(n_paths)
            assert abs(logs[:, k].mean() - mean_target) <= 3 * se_mean
            sq = (logs[:, k] - logs[:, k].mean()) ** 2
            se_var = sq.std(ddof=1) / math.sqrt(n_paths)
            assert abs(logs[:, k].var(ddof=1) - v[k] ** 2) <= 3 * se_var

    def test_strict_positivity(self):
        grid = TimeGrid(1.0, 64)
        params = two_asset_params()
        vol = SamplePath(grid, np.abs(brownian_path(grid, 2, 3).values) + 0.1)
        w = brownian_path(grid, 2, 4)
        assert np.all(simulate_prices(vol, w, params).values > 0)


class TestTheta:
    def test_reference_arithmetic(self):
        params = two_asset_params(rate=0.05, drifts=(0.1, 0.02))
        assert np.allclose(theta([0.5, 0.2], params), [-0.1, 0.15])

    def test_zero_when_drifts_equal_rate(self):
        params = two_asset_params(rate=0.05, drifts=(0.05, 0.05))
        assert np.allclose(theta([0.4, 0.9], params), 0.0)

    def test_scaling_halves(self):
        params = two_asset_params()
        v = np.array([0.5, 0.2])
        assert np.allclose(theta(2 * v, params), 0.5 * theta(v, params))

    def test_floor_guard(self):
        params = two_asset_params()
        with pytest.raises(ViabilityBreachError, match="floor"):
            theta([0.3, 0.2], params, xi_floor=0.5)
        # above the floor the same state is fine
        out = theta([0.3, 0.26], params, xi_floor=0.5)
        assert np.all(np.isfinite(out))

    def test_nonpositive_vol_rejected(self):
        with pytest.raises(ViabilityBreachError):
            theta([0.5, 0.0], two_asset_params())


class TestStochasticExponential:
    def test_zero_integrand_is_one(self):
        grid = TimeGrid(1.0, 8)
        path = stochastic_exponential(grid, np.zeros(8), np.zeros(8))
        assert np.array_equal(path.values[:, 0], np.ones(9))

    def test_zero_exponent_is_one(self):
        grid = TimeGrid(1.0, 8)
        rng = np.random.default_rng(5)
        path = stochastic_exponential(
            grid, rng.normal(size=8), rng.uniform(size=8), q=0.0
        )
        assert np.array_equal(path.values[:, 0], np.ones(9))

    def test_starts_at_one(self):
        grid = TimeGrid(1.0, 4)
        path = stochastic_exponential(grid, np.ones(4), np.ones(4), q=0.7)
        assert path.values[0, 0] == 1.0

    def test_constant_integrand_mean_one(self):
        grid = TimeGrid(1.0, 8)
        th = np.array([0.3, -0.4])
        rng = np.random.default_rng(6)
        n_paths = 10_000
        terminal = np.empty(n_paths)
        for i in range(n_paths):
            dw = rng.normal(scale=math.sqrt(grid.dt), size=(8, 2))
            path = stochastic_exponential(
                grid, dw @ th, np.full(8, th @ th * grid.dt), q=1.0
            )
            terminal[i] = path.terminal[0]
        se = terminal.std(ddof=1) / math.sqrt(n_paths)
        assert abs(terminal.mean() - 1.0) <= 3 * se

    def test_shape_validation(self):
        grid = TimeGrid(1.0, 8)
        with pytest.raises(ValueError, match="one increment per grid step"):
            stochastic_exponential(grid, np.zeros(7), np.zeros(8))


class TestMarketParamsValidation:
    def test_zero_projection_rejected(self):
        with pytest.raises(ValueError):
            MarketParams(
                rate=0.05,
                drifts=np.zeros(2),
                initial_prices=np.ones(2),
                projections=np.array([[1.0, 1.0], [0.0, 0.0]]),
                anchor_indices=(0, 0),
            )

    def test_zero_pivot_rejected(self):
        with pytest.raises(ValueError, match="anchor index"):
            MarketParams(
                rate=0.05,
                drifts=np.zeros(2),
                initial_prices=np.ones(2),
                projections=np.array([[1.0, 1.0], [0.0, 1.0]]),
                anchor_indices=(0, 0),
            )

    def test_nonpositive_price_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            MarketParams(
                rate=0.05,
                drifts=np.zeros(2),
                initial_prices=np.array([1.0, 0.0]),
                projections=np.eye(2),
                anchor_indices=(0, 1),
            )
