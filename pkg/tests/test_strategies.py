import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hestonlab.indicators import MacdSpec, RsiSpec
from hestonlab.market import HestonParams, MarketScenario, TimeGrid, simulate_batch, simulate_paths
from hestonlab.strategies import (
    PortfolioState,
    StrategySpec,
    initialize,
    portfolio_wealth,
    run_paths,
    run_strategy,
    step_passive,
    step_signal,
    strategy_signals,
)

GRID = TimeGrid()


def _scenario(n=3, seed=0, trial=0, mu=0.1):
    return simulate_paths([HestonParams(mu=mu)] * n, np.eye(n), GRID, seed, trial)


class TestSpec:
    def test_defaults_fill_indicator(self):
        assert StrategySpec("macd").indicator == MacdSpec()
        assert StrategySpec("rsi").indicator == RsiSpec()
        assert StrategySpec("macd").psi == 0.5 and StrategySpec("macd").phi == 0.5

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(kind="momentum"),
            dict(kind="macd", psi=1.5),
            dict(kind="rsi", phi=-0.1),
            dict(kind="cash-passive", cash_share=1.2),
            dict(kind="macd", indicator=RsiSpec()),
            dict(kind="passive", indicator=MacdSpec()),
            dict(kind="passive", weights=(0, 0)),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            StrategySpec(**kwargs)


class TestInitialize:
    def test_single_asset_all_in(self):
        s = initialize(1000.0, [100.0], StrategySpec())
        np.testing.assert_array_equal(s.q, [10.0])
        assert s.q0 == 0

    def test_cash_share(self):
        s = initialize(1000.0, [100.0] * 5, StrategySpec("cash-passive", cash_share=0.28))
        assert s.q0 == pytest.approx(280.0, rel=1e-15)
        np.testing.assert_allclose(s.q, 1.44, rtol=1e-15)
        assert s.wealth == pytest.approx(1000.0, rel=1e-12)

    def test_weights(self):
        s = initialize(1000.0, [100.0, 50.0], StrategySpec(weights=(3, 1)))
        np.testing.assert_allclose(s.q * [100.0, 50.0], [750.0, 250.0])

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(1e-3, 1e9),
        st.lists(st.floats(1e-3, 1e6), min_size=1, max_size=12),
        st.floats(0, 1),
    )
    def test_value_conserved(self, wealth0, prices, cash):
        s = initialize(wealth0, prices, StrategySpec("cash-passive", cash_share=cash))
        assert abs(s.wealth - wealth0) <= 1e-12 * wealth0

    @pytest.mark.parametrize("wealth0, prices", [(0.0, [1.0]), (-5.0, [1.0]), (10.0, [1.0, 0.0]), (10.0, [])])
    def test_invalid(self, wealth0, prices):
        with pytest.raises(ValueError):
            initialize(wealth0, prices, StrategySpec())


class TestSteps:
    def test_passive_revaluation(self):
        s = initialize(1000.0, [100.0], StrategySpec())
        s2 = step_passive(s, [110.0])
        assert s2.wealth == pytest.approx(1100.0)
        np.testing.assert_array_equal(s2.q, s.q)
        assert step_passive(s, [100.0]).wealth == s.wealth

    def test_cash_passive_wealth(self):
        s = initialize(1000.0, [100.0] * 5, StrategySpec("cash-passive", cash_share=0.28))
        prices = np.array([90.0, 95.0, 100.0, 105.0, 130.0])
        assert step_passive(s, prices).wealth == pytest.approx(280.0 + prices @ s.q)

    def test_hand_example(self):
        s = PortfolioState(np.float64(0.0), np.array([10.0, 5.0]), np.float64(1250.0))
        out = step_signal(s, [100.0, 50.0], buy=[0, 1], sell=[1, 0], psi=0.5, phi=1.0)
        np.testing.assert_allclose(out.q, [5.0, 15.0])
        assert out.q0 == 0.0
        assert out.wealth == pytest.approx(1250.0)

    def test_no_flags(self):
        s = PortfolioState(np.float64(100.0), np.array([1.0, 2.0]), np.float64(400.0))
        out = step_signal(s, [120.0, 90.0], buy=[0, 0], sell=[0, 0], psi=0.7, phi=0.9)
        np.testing.assert_array_equal(out.q, s.q)
        assert out.q0 == s.q0
        assert out.wealth == 100.0 + 120.0 + 180.0

    def test_buy_splits_equally_by_value(self):
        s = PortfolioState(np.float64(300.0), np.zeros(3), np.float64(300.0))
        out = step_signal(s, [10.0, 20.0, 40.0], buy=[1, 0, 1], sell=[0, 0, 0], psi=0.5, phi=0.5)
        np.testing.assert_allclose(out.q * [10.0, 20.0, 40.0], [75.0, 0.0, 75.0])
        assert out.q0 == pytest.approx(150.0)

    @settings(max_examples=300, deadline=None)
    @given(
        st.integers(1, 8).flatmap(
            lambda n: st.tuples(
                st.lists(st.floats(0, 1e3), min_size=n, max_size=n),
                st.lists(st.floats(1e-2, 1e3), min_size=n, max_size=n),
                st.lists(st.booleans(), min_size=n, max_size=n),
                st.lists(st.booleans(), min_size=n, max_size=n),
            )
        ),
        st.floats(0, 1e4),
        st.floats(0, 1),
        st.floats(0, 1),
    )
    def test_zero_trust_is_passive(self, data, q0, psi, phi):
        q, prices, buy, sell = (np.array(x, dtype=float) for x in data)
        s = PortfolioState(np.float64(q0), q, portfolio_wealth(q0, q, prices))
        a = step_signal(s, prices, buy, sell, 0.0, 0.0)
        b = step_passive(s, prices)
        np.testing.assert_array_equal(a.q, b.q)
        assert a.q0 == b.q0 and a.wealth == b.wealth

        # and any trust levels keep the step self-financing and non-negative
        c = step_signal(s, prices, buy, sell, psi, phi)
        assert abs(c.wealth - b.wealth) <= 1e-9 * max(b.wealth, 1e-300)
        assert c.q0 >= 0 and np.all(c.q >= 0)


class TestRun:
    def test_passive_holds(self):
        sc = _scenario()
        h = run_strategy(sc, StrategySpec(), 1000.0)
        np.testing.assert_array_equal(h.q, np.repeat(h.q[:, :1], GRID.size, axis=1))
        assert h.wealth[0] == pytest.approx(1000.0, rel=1e-12)
        np.testing.assert_allclose(h.wealth, sc.prices.T @ h.q[:, 0], rtol=1e-14)

    def test_constant_prices_never_trade_macd(self):
        prices = np.full((4, GRID.size), 100.0)
        sc = MarketScenario(prices, np.zeros_like(prices), GRID)
        h = run_strategy(sc, StrategySpec("macd", cash_share=0.3), 1000.0)
        assert h.trades.sum() == 0
        np.testing.assert_array_equal(h.wealth, h.wealth[0])

    @pytest.mark.parametrize(
        "spec",
        [
            StrategySpec(),
            StrategySpec("cash-passive", cash_share=0.28),
            StrategySpec("macd"),
            StrategySpec("macd", indicator=MacdSpec(line="macd"), cash_share=0.2, psi=0.9, phi=0.3),
            StrategySpec("rsi", cash_share=0.1),
            StrategySpec("rsi", indicator=RsiSpec(lag=3), psi=1.0, phi=1.0),
        ],
    )
    def test_self_financing_and_non_negative(self, spec):
        sc = _scenario(n=4, seed=3, mu=0.3)
        h = run_strategy(sc, spec, 1000.0)
        assert h.self_financing_error() <= 1e-9
        assert np.all(h.q0 >= 0) and np.all(h.q >= 0)

    def test_rsi_trades_occur(self):
        h = run_strategy(_scenario(), StrategySpec("rsi"), 1000.0)
        assert h.trades.sum() > 0

    def test_zero_trust_reproduces_passive_bit_for_bit(self):
        prices, _ = simulate_batch([HestonParams()] * 10, np.eye(10), GRID, 4, range(6))
        passive = run_paths(prices, StrategySpec("cash-passive", cash_share=0.3))
        for kind in ("macd", "rsi"):
            active = run_paths(prices, StrategySpec(kind, psi=0.0, phi=0.0, cash_share=0.3))
            np.testing.assert_array_equal(active.wealth, passive.wealth)
            np.testing.assert_array_equal(active.q, passive.q)
            np.testing.assert_array_equal(active.q0, passive.q0)

    def test_batch_rows_match_single_runs(self):
        prices, _ = simulate_batch([HestonParams()] * 3, np.eye(3), GRID, 8, range(4))
        spec = StrategySpec("rsi", cash_share=0.2)
        batch = run_paths(prices, spec)
        for b in range(4):
            single = run_paths(prices[b], spec)
            np.testing.assert_array_equal(batch.wealth[b], single.wealth)

    def test_signals_do_not_look_ahead(self):
        sc = _scenario(n=2, seed=12)
        for spec in (StrategySpec("macd", indicator=MacdSpec(line="macd")), StrategySpec("rsi")):
            buy, sell = strategy_signals(sc.prices, spec)
            for t in (5, 100, 400):
                b_t, s_t = strategy_signals(sc.prices[:, : t + 1], spec)
                np.testing.assert_array_equal(b_t, buy[:, : t + 1])
                np.testing.assert_array_equal(s_t, sell[:, : t + 1])

    def test_passive_has_no_signals(self):
        with pytest.raises(ValueError):
            strategy_signals(np.ones((1, 3)), StrategySpec())
