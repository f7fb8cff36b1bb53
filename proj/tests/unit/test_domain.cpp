#include <doctest.h>

#include <random>

#include "changeover/domain.hpp"
#include "changeover/errors.hpp"

using namespace changeover;

namespace {

Money usd(double v) { return Money::from_decimal(v); }

std::vector<Money> row_of(std::initializer_list<double> prices) {
    std::vector<Money> out;
    for (double p : prices) out.push_back(usd(p));
    return out;
}

TradeRow buy(std::size_t n, std::size_t a, std::int64_t shares) {
    TradeRow r = TradeRow::zeros(n);
    r.buys[a] = shares;
    r.buy_flags[a] = 1;
    return r;
}

}  // namespace

TEST_CASE("money parsing and rendering") {
    CHECK(Money::parse("12.34").cents() == 1234);
    CHECK(Money::parse("-3").cents() == -300);
    CHECK(Money::parse("0.005").cents() == 1);
    CHECK(Money::parse("1.004").cents() == 100);
    CHECK(Money::from_decimal(-0.005).cents() == -1);
    CHECK(Money::from_cents(-5).to_string() == "-0.05");
    CHECK(Money::from_cents(123456).to_string() == "1234.56");
    CHECK_THROWS_AS(Money::parse("abc"), DataError);
    CHECK_THROWS_AS(Money::parse(""), DataError);
    CHECK_THROWS_AS(Money::from_decimal(std::nan("")), DataError);
}

TEST_CASE("asset universe") {
    AssetUniverse u({"A", "B", "C"});
    CHECK(u.size() == 3);
    CHECK(u.index_of("B") == 1);
    CHECK(u.index_of("Z") == 3);
    CHECK_THROWS_AS(AssetUniverse(std::vector<std::string>{}), InvalidArgument);
    CHECK_THROWS_AS(AssetUniverse({"A", "A"}), InvalidArgument);
}

TEST_CASE("price matrix shape and positivity") {
    const auto m = PriceMatrix::from_decimal_rows({{1, 2}, {3, 4}, {5, 6}});
    CHECK(m.periods() == 3);
    CHECK(m.assets() == 2);
    CHECK(m.at(2, 1) == usd(6));
    CHECK(m.min_in_row(1) == usd(3));
    CHECK(m.slice(1, 2).at(0, 0) == usd(3));
    const std::vector<std::size_t> cols{1};
    CHECK(m.select_assets(cols).at(0, 0) == usd(2));
    CHECK(PriceMatrix::stack(m, m).periods() == 6);
    CHECK_THROWS_AS(PriceMatrix::from_decimal_rows({{1, 0}}), InvalidArgument);
    CHECK_THROWS_AS(PriceMatrix::from_decimal_rows({{1, 2}, {3}}), DimensionError);
    CHECK_THROWS_AS(m.slice(2, 2), DimensionError);
}

TEST_CASE("portfolio_value") {
    SUBCASE("empty holdings is the cash") {
        PortfolioState s{{0, 0, 0}, usd(7.5)};
        CHECK(portfolio_value(s, row_of({1, 2, 3})) == usd(7.5));
    }
    SUBCASE("two shares at 10 plus 5 cash") {
        PortfolioState s{{2}, usd(5)};
        CHECK(portfolio_value(s, row_of({10})) == usd(25));
    }
    SUBCASE("scalar loop on random states") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 1 + rng() % 6;
            PortfolioState s{std::vector<std::int64_t>(n), Money::from_cents(static_cast<std::int64_t>(rng() % 100000))};
            std::vector<Money> prices(n);
            std::int64_t expected = s.cash.cents();
            for (std::size_t a = 0; a < n; ++a) {
                s.holdings[a] = static_cast<std::int64_t>(rng() % 50);
                prices[a] = Money::from_cents(1 + static_cast<std::int64_t>(rng() % 20000));
                expected += s.holdings[a] * prices[a].cents();
            }
            CHECK(portfolio_value(s, prices).cents() == expected);
        }
    }
    SUBCASE("dimension mismatch") {
        PortfolioState s{{1, 2}, usd(0)};
        CHECK_THROWS_AS(portfolio_value(s, row_of({1})), DimensionError);
    }
}

TEST_CASE("apply_trades") {
    SUBCASE("zero trades leave the state unchanged") {
        PortfolioState s{{3, 1}, usd(12)};
        CHECK(apply_trades(s, TradeRow::zeros(2), row_of({5, 7}), usd(2)) == s);
    }
    SUBCASE("buy two at ten with a two dollar fee") {
        PortfolioState s{{0}, usd(30)};
        const auto next = apply_trades(s, buy(1, 0, 2), row_of({10}), usd(2));
        CHECK(next.holdings == std::vector<std::int64_t>{2});
        CHECK(next.cash == usd(8));
    }
    SUBCASE("overselling names the short-selling rule") {
        PortfolioState s{{1}, usd(0)};
        TradeRow r = TradeRow::zeros(1);
        r.sells[0] = 2;
        r.sell_flags[0] = 1;
        CHECK_THROWS_WITH_AS(apply_trades(s, r, row_of({10}), usd(0)), doctest::Contains("no-short-selling"),
                             InfeasibleTradeError);
    }
    SUBCASE("overspending names the leverage rule") {
        PortfolioState s{{0}, usd(21)};
        CHECK_THROWS_WITH_AS(apply_trades(s, buy(1, 0, 2), row_of({10}), usd(2)), doctest::Contains("no-leverage"),
                             InfeasibleTradeError);
    }
    SUBCASE("a volume without its flag is rejected") {
        PortfolioState s{{5}, usd(100)};
        TradeRow r = TradeRow::zeros(1);
        r.sells[0] = 1;
        CHECK_THROWS_AS(apply_trades(s, r, row_of({10}), usd(0)), InvalidArgument);
    }
    SUBCASE("a flag without volume still pays the fee") {
        PortfolioState s{{0}, usd(5)};
        TradeRow r = TradeRow::zeros(1);
        r.buy_flags[0] = 1;
        CHECK(apply_trades(s, r, row_of({10}), usd(2)).cash == usd(3));
    }
    SUBCASE("one-share replay of random feasible rows") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 1 + rng() % 5;
            PortfolioState s{std::vector<std::int64_t>(n), usd(500)};
            std::vector<Money> prices(n);
            TradeRow r = TradeRow::zeros(n);
            for (std::size_t a = 0; a < n; ++a) {
                s.holdings[a] = static_cast<std::int64_t>(rng() % 10);
                prices[a] = Money::from_cents(100 + static_cast<std::int64_t>(rng() % 2000));
                const int pick = static_cast<int>(rng() % 3);
                if (pick == 1) {
                    r.buys[a] = static_cast<std::int64_t>(rng() % 3);
                    r.buy_flags[a] = 1;
                } else if (pick == 2 && s.holdings[a] > 0) {
                    r.sells[a] = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(s.holdings[a]));
                    r.sell_flags[a] = 1;
                }
            }
            const Money fee = Money::from_cents(static_cast<std::int64_t>(rng() % 500));
            PortfolioState replay = s;
            replay.cash -= fee * r.executed_flags();
            for (std::size_t a = 0; a < n; ++a) {
                for (std::int64_t i = 0; i < r.sells[a]; ++i) {
                    --replay.holdings[a];
                    replay.cash += prices[a];
                }
                for (std::int64_t i = 0; i < r.buys[a]; ++i) {
                    ++replay.holdings[a];
                    replay.cash -= prices[a];
                }
            }
            if (replay.cash < Money{}) {
                CHECK_THROWS_AS(apply_trades(s, r, prices, fee), InfeasibleTradeError);
            } else {
                CHECK(apply_trades(s, r, prices, fee) == replay);
            }
        }
    }
}

TEST_CASE("satisfies_target") {
    CHECK(satisfies_target({{3, 1}, usd(0)}, {{3, 1}}));
    CHECK_FALSE(satisfies_target({{3, 0}, usd(0)}, {{3, 1}}));
    CHECK(satisfies_target({{5, 2}, usd(0)}, {{0, 0}}));
    CHECK_THROWS_AS(satisfies_target({{1}, usd(0)}, {{1, 1}}), DimensionError);
}

TEST_CASE("trade row invariants") {
    TradeRow r = TradeRow::zeros(2);
    CHECK(r.is_empty());
    r.buys[0] = 1;
    CHECK_THROWS_AS(r.validate(), InvalidArgument);
    r.buy_flags[0] = 1;
    CHECK_NOTHROW(r.validate());
    CHECK(r.executed_flags() == 1);
    r.sell_flags[0] = 1;
    CHECK_THROWS_AS(r.validate(), InvalidArgument);
    CHECK_NOTHROW(r.validate(true));
    r.sells[1] = -1;
    CHECK_THROWS_AS(r.validate(true), InvalidArgument);
}

TEST_CASE("transition instance construction") {
    const auto prices = PriceMatrix::from_decimal_rows({{10, 20}, {11, 19}});
    AssetUniverse u({"A", "B"});
    SUBCASE("valid instance") {
        TransitionInstance inst(u, {{1, 0}, usd(30)}, {{0, 1}}, 1, usd(2), prices);
        CHECK(inst.initial_value() == usd(40));
        CHECK(inst.assets() == 2);
    }
    SUBCASE("unaffordable target") {
        CHECK_THROWS_AS(TransitionInstance(u, {{1, 0}, usd(5)}, {{0, 2}}, 1, usd(2), prices), InvalidArgument);
    }
    SUBCASE("too few price rows") {
        CHECK_THROWS_AS(TransitionInstance(u, {{1, 0}, usd(30)}, {{0, 1}}, 2, usd(2), prices), InvalidArgument);
    }
    SUBCASE("negative cash, holdings or fee") {
        CHECK_THROWS_AS(TransitionInstance(u, {{1, 0}, usd(-1)}, {{0, 0}}, 1, usd(2), prices), InvalidArgument);
        CHECK_THROWS_AS(TransitionInstance(u, {{-1, 0}, usd(1)}, {{0, 0}}, 1, usd(2), prices), InvalidArgument);
        CHECK_THROWS_AS(TransitionInstance(u, {{1, 0}, usd(1)}, {{0, 0}}, 1, usd(-2), prices), InvalidArgument);
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(TransitionInstance(u, {{1}, usd(30)}, {{0, 1}}, 1, usd(2), prices), DimensionError);
    }
}

TEST_CASE("properties of the accounting primitives") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 4;
        PortfolioState s{std::vector<std::int64_t>(n), Money::from_cents(100000)};
        std::vector<Money> prices(n);
        TradeRow r = TradeRow::zeros(n);
        for (std::size_t a = 0; a < n; ++a) {
            s.holdings[a] = static_cast<std::int64_t>(rng() % 6);
            prices[a] = Money::from_cents(100 + static_cast<std::int64_t>(rng() % 900));
            if (rng() % 2) {
                r.buys[a] = static_cast<std::int64_t>(rng() % 4);
                r.buy_flags[a] = 1;
            } else if (s.holdings[a] > 0 && rng() % 2) {
                r.sells[a] = s.holdings[a];
                r.sell_flags[a] = 1;
            }
        }
        const Money fee = Money::from_cents(static_cast<std::int64_t>(rng() % 900));
        const auto next = apply_trades(s, r, prices, fee);
        // Value is conserved up to fees at unchanged prices.
        CHECK(portfolio_value(s, prices) - portfolio_value(next, prices) == fee * r.executed_flags());

        // Asset-by-asset application in reverse order reaches the same state.
        PortfolioState step = s;
        for (std::size_t i = n; i-- > 0;) {
            TradeRow one = TradeRow::zeros(n);
            one.buys[i] = r.buys[i];
            one.sells[i] = r.sells[i];
            one.buy_flags[i] = r.buy_flags[i];
            one.sell_flags[i] = r.sell_flags[i];
            step = apply_trades(step, one, prices, fee);
        }
        CHECK(step == next);

        // Adding shares never breaks target satisfaction.
        TargetPortfolio t{std::vector<std::int64_t>(n)};
        for (std::size_t a = 0; a < n; ++a) t.min_shares[a] = static_cast<std::int64_t>(rng() % 6);
        if (satisfies_target(s, t)) {
            PortfolioState more = s;
            more.holdings[rng() % n] += 1;
            CHECK(satisfies_target(more, t));
        }
    }
}
