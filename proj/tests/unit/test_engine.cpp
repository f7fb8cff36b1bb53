#include <doctest.h>

#include <filesystem>

#include "changeover/engine.hpp"
#include "changeover/errors.hpp"
#include "oracle/instances.hpp"

using namespace changeover;

namespace {

Money usd(double v) { return Money::from_decimal(v); }

struct Setup {
    MarketHistory market;
    TransitionInstance instance;
};

Setup setup(const TransitionInstance& inst, std::size_t history = 0) {
    auto market = synthetic_market(inst.universe(), inst.prices(), history);
    auto relabelled = relabel_instance(inst, market, history);
    return {std::move(market), std::move(relabelled)};
}

SimulationConfig config(const std::string& policy, ForecastMethod method = ForecastMethod::oracle,
                        std::size_t lookback = 1) {
    SimulationConfig c;
    c.policy = parse_policy(policy);
    c.forecaster.method = method;
    c.forecaster.lookback = lookback;
    c.solver.gap = 0.0;
    return c;
}

}  // namespace

TEST_CASE("constant prices with the target held never trade") {
    const TransitionInstance inst(AssetUniverse({"A", "B"}), {{4, 3}, usd(12)}, {{2, 3}}, 4, usd(3),
                                  PriceMatrix::from_decimal_rows({{10, 7}, {10, 7}, {10, 7}, {10, 7}, {10, 7}}));
    const auto s = setup(inst);
    for (const std::string policy : {"Base", "Directional", "Naive", "DirP_25", "ColGen_True", "ColGen_False"}) {
        CAPTURE(policy);
        const auto r = run(s.instance, s.market, config(policy));
        REQUIRE(r.ok());
        CHECK(r.total_trades == 0);
        CHECK(r.final_value == r.initial_value);
        CHECK(percent_change(r) == 0.0);
        CHECK(r.periods.size() == 5);
    }
}

TEST_CASE("naive trades once") {
    const TransitionInstance inst(AssetUniverse({"A", "B"}), {{4, 0}, usd(5)}, {{1, 3}}, 3, usd(1),
                                  PriceMatrix::from_decimal_rows({{10, 7}, {12, 6}, {9, 8}, {11, 7}}));
    const auto s = setup(inst);
    const auto r = run(s.instance, s.market, config("Naive"));
    REQUIRE(r.ok());
    CHECK(r.solves == 1);
    CHECK(r.periods[0].solved);
    for (std::size_t t = 1; t < r.periods.size(); ++t) {
        CHECK_FALSE(r.periods[t].solved);
        CHECK(r.periods[t].trades.is_empty());
        CHECK(r.periods[t].holdings == r.periods[1].holdings);
    }
}

TEST_CASE("perfect-forecast base is never below naive") {
    for (const auto& raw : oracle::suite(20, 801)) {
        const auto s = setup(raw);
        const auto naive = run(s.instance, s.market, config("Naive"));
        const auto base = run(s.instance, s.market, config("Base"));
        if (!naive.ok()) continue;
        REQUIRE(base.ok());
        CHECK(base.final_value >= naive.final_value);
    }
}

TEST_CASE("accounting invariants hold every period") {
    const auto market = random_walk_market(6, 30, 77);
    ScenarioRanges ranges;
    ranges.min_assets = 3;
    ranges.max_assets = 5;
    ranges.horizon = 4;
    ranges.lookback = 10;
    ranges.min_budget = usd(2000);
    ranges.max_budget = usd(6000);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto sc = generate_scenario(market, ranges, seed);
        for (const std::string policy : {"Base", "Directional", "Naive", "ColGen_False"}) {
            const auto r = run(sc.instance, market, config(policy, ForecastMethod::persistence, 10));
            Money fees;
            std::int64_t flags = 0;
            auto prev = sc.instance.initial();
            for (const auto& p : r.periods) {
                CHECK(p.cash >= Money{});
                for (auto h : p.holdings) CHECK(h >= 0);
                CHECK(p.value == portfolio_value({p.holdings, p.cash}, p.prices));
                CHECK(p.value_before == portfolio_value(prev, p.prices));
                const auto next = apply_trades(prev, p.trades, p.prices, sc.instance.fee());
                CHECK(next.holdings == p.holdings);
                CHECK(next.cash == p.cash);
                fees += p.fees;
                flags += p.trades.executed_flags();
                prev = next;
            }
            CHECK(fees == r.total_fees);
            CHECK(r.total_fees == sc.instance.fee() * flags);
            if (r.ok()) CHECK(r.target_satisfied);
        }
    }
}

TEST_CASE("a plan that becomes unreachable is recorded, not thrown") {
    // A falling trend makes waiting look cheaper; the realized price then jumps.
    const auto rows = PriceMatrix::from_decimal_rows({{16}, {14}, {12}, {10}, {30}, {30}},
                                                     {synthetic_date(0), synthetic_date(1), synthetic_date(2),
                                                      synthetic_date(3), synthetic_date(4), synthetic_date(5)});
    const MarketHistory market{AssetUniverse({"A"}), rows, std::nullopt};
    const TransitionInstance inst(AssetUniverse({"A"}), {{0}, usd(21)}, {{2}}, 2, usd(0.5), rows.slice(3, 3));
    const auto r = run(inst, market, config("Base", ForecastMethod::drift, 4));
    CHECK(r.status == RunStatus::infeasible);
    REQUIRE(r.failure_period.has_value());
    CHECK(*r.failure_period == 1);
    CHECK(r.periods.size() == 1);
    const auto perfect = run(inst, market, config("Base", ForecastMethod::oracle));
    CHECK(perfect.ok());
    CHECK(perfect.periods[0].trades.buys[0] == 2);
}

TEST_CASE("forecast failures are recorded") {
    const TransitionInstance inst(AssetUniverse({"A"}), {{0}, usd(50)}, {{1}}, 2, usd(1),
                                  PriceMatrix::from_decimal_rows({{10}, {11}, {12}}));
    const auto s = setup(inst);
    const auto r = run(s.instance, s.market, config("Base", ForecastMethod::drift, 48));
    CHECK(r.status == RunStatus::forecast_error);
    REQUIRE(r.failure_period.has_value());
    CHECK(*r.failure_period == 0);
}

TEST_CASE("configuration errors throw") {
    const TransitionInstance inst(AssetUniverse({"A"}), {{0}, usd(50)}, {{1}}, 2, usd(1),
                                  PriceMatrix::from_decimal_rows({{10}, {11}, {12}}));
    const auto s = setup(inst);
    auto c = config("Base");
    c.horizon = 3;
    CHECK_THROWS_AS(run(s.instance, s.market, c), InvalidArgument);
    const auto other = random_walk_market(1, 10, 1);
    CHECK_THROWS_AS(run(s.instance, other, config("Base")), DataError);
    CHECK_THROWS_AS(parse_policy("Greedy"), InvalidArgument);
}

TEST_CASE("policy names round-trip") {
    for (const std::string name : {"Naive", "Directional", "Base", "DirP_0", "DirP_25", "DirP_500", "ColGen_True",
                                   "ColGen_False"}) {
        CHECK(parse_policy(name).name() == name);
    }
    CHECK(parse_policy("DirP_75").compact.penalty == doctest::Approx(0.75));
}

TEST_CASE("percent change") {
    CHECK(percent_change(usd(100), usd(110)) == doctest::Approx(10.0));
    CHECK(percent_change(usd(100), usd(100)) == 0.0);
    CHECK(percent_change(usd(200), usd(193.70)) == doctest::Approx(-3.15));
    CHECK_THROWS_AS(percent_change(usd(0), usd(1)), InvalidArgument);
}

TEST_CASE("shared forecast schedules give the same run") {
    const auto market = random_walk_market(5, 40, 5);
    ScenarioRanges ranges;
    ranges.min_assets = 3;
    ranges.max_assets = 4;
    ranges.horizon = 3;
    ranges.lookback = 20;
    ranges.min_budget = usd(1000);
    ranges.max_budget = usd(3000);
    const auto sc = generate_scenario(market, ranges, 2);
    const auto c = config("Directional", ForecastMethod::drift, 20);
    const auto schedule = build_forecast_schedule(sc.instance, market, c.forecaster);
    const auto a = run(sc.instance, market, c);
    const auto b = run(sc.instance, market, c, &schedule);
    CHECK(a.final_value == b.final_value);
    CHECK(a.total_trades == b.total_trades);
    REQUIRE(a.mean_mape.has_value());
    REQUIRE(schedule.mean_mape().has_value());
    CHECK(*a.mean_mape == doctest::Approx(*schedule.mean_mape()));
}

TEST_CASE("LP exports are written per solve") {
    const TransitionInstance inst(AssetUniverse({"A"}), {{0}, usd(50)}, {{1}}, 2, usd(1),
                                  PriceMatrix::from_decimal_rows({{10}, {11}, {12}}));
    const auto s = setup(inst);
    auto c = config("Base");
    c.record_lp_exports = true;
    c.export_dir = std::filesystem::temp_directory_path() / "changeover_unit_lp";
    std::filesystem::remove_all(c.export_dir);
    const auto r = run(s.instance, s.market, c);
    REQUIRE(r.ok());
    CHECK(std::filesystem::exists(c.export_dir / "Base_t0.lp"));
    CHECK(std::filesystem::exists(c.export_dir / "Base_t1.lp"));
    std::filesystem::remove_all(c.export_dir);
}
