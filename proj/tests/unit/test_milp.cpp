#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "changeover/errors.hpp"
#include "changeover/formulations.hpp"
#include "changeover/milp.hpp"
#include "oracle/instances.hpp"

using namespace changeover;
using namespace changeover::milp;

namespace {

std::vector<Backend> backends() {
    std::vector<Backend> out{Backend::builtin};
    if (backend_available(Backend::highs)) out.push_back(Backend::highs);
    return out;
}

SolveSettings with(Backend b) {
    SolveSettings s;
    s.backend = b;
    s.gap = 0.0;
    return s;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TransitionInstance two_asset_instance() {
    return TransitionInstance(AssetUniverse({"AAA", "BBB"}), {{3, 0}, Money::from_cents(1500)}, {{1, 2}}, 2,
                              Money::from_cents(200), PriceMatrix::from_decimal_rows({{10, 8}, {11, 7.5}, {12, 9}}));
}

}  // namespace

TEST_CASE("maximize an integer bounded by five") {
    for (Backend b : backends()) {
        CAPTURE(to_string(b));
        MilpModel m;
        const auto x = m.add_integer("x", 0, 100);
        LinearExpr row;
        row.add(x, 1.0);
        m.add_constraint("cap", row, RowSense::less_equal, 5);
        m.set_objective(LinearExpr{}.add(x, 1.0));
        const auto out = solve(m, with(b));
        REQUIRE(out.status == SolveStatus::optimal);
        CHECK(out.objective_value == doctest::Approx(5.0));
        CHECK(out.assignment_by_name(m).at("x") == doctest::Approx(5.0));
        CHECK(out.gap <= 1e-6);
    }
}

TEST_CASE("contradictory bounds are infeasible") {
    for (Backend b : backends()) {
        CAPTURE(to_string(b));
        MilpModel m;
        const auto x = m.add_continuous("x", -10, 10);
        m.add_constraint("lo", LinearExpr{}.add(x, 1.0), RowSense::greater_equal, 1);
        m.add_constraint("hi", LinearExpr{}.add(x, 1.0), RowSense::less_equal, 0);
        m.set_objective(LinearExpr{}.add(x, 1.0));
        CHECK(solve(m, with(b)).status == SolveStatus::infeasible);
    }
}

TEST_CASE("random knapsacks match exhaustive enumeration") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 10);
        std::vector<double> value(n), weight(n);
        for (int i = 0; i < n; ++i) {
            value[i] = static_cast<double>(1 + rng() % 40);
            weight[i] = static_cast<double>(1 + rng() % 25);
        }
        const double capacity = static_cast<double>(10 + rng() % 80);
        double best = 0.0;
        for (int mask = 0; mask < (1 << n); ++mask) {
            double v = 0, w = 0;
            for (int i = 0; i < n; ++i) {
                if (mask >> i & 1) {
                    v += value[i];
                    w += weight[i];
                }
            }
            if (w <= capacity) best = std::max(best, v);
        }
        MilpModel m("knapsack");
        LinearExpr row, obj;
        for (int i = 0; i < n; ++i) {
            const auto x = m.add_binary("x" + std::to_string(i));
            row.add(x, weight[i]);
            obj.add(x, value[i]);
        }
        m.add_constraint("cap", row, RowSense::less_equal, capacity);
        m.set_objective(obj);
        for (Backend b : backends()) {
            const auto out = solve(m, with(b));
            REQUIRE(out.status == SolveStatus::optimal);
            CHECK(out.objective_value == doctest::Approx(best));
        }
    }
}

TEST_CASE("model validation") {
    MilpModel m;
    m.add_constraint("bad", LinearExpr{}.add(3, 1.0), RowSense::equal, 0);
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    MilpModel inverted;
    inverted.add_integer("y", 2, 1);
    CHECK_THROWS_AS(inverted.validate(), InvalidArgument);
    MilpModel ok;
    ok.add_integer("z", 0, 1);
    SolveSettings bad;
    bad.gap = -1;
    const auto out = solve(ok, bad);
    CHECK(out.status == SolveStatus::error);
    CHECK(out.message.find("gap") != std::string::npos);
    CHECK(solve(m).status == SolveStatus::error);
}

TEST_CASE("violation measures rows, bounds and integrality") {
    MilpModel m;
    const auto x = m.add_integer("x", 0, 3);
    const auto y = m.add_continuous("y", 0, 1);
    m.add_constraint("sum", LinearExpr{}.add(x, 1.0).add(y, 1.0), RowSense::less_equal, 2);
    const auto v = m.violation({2.5, 1.5});
    CHECK(v.row == doctest::Approx(2.0));
    CHECK(v.bound == doctest::Approx(0.5));
    CHECK(v.integrality == doctest::Approx(0.5));
}

TEST_CASE("backend names") {
    CHECK(parse_backend("builtin") == Backend::builtin);
    CHECK(parse_backend("highs") == Backend::highs);
    CHECK(parse_backend("auto") == Backend::automatic);
    CHECK_THROWS_AS(parse_backend("cplex"), InvalidArgument);
    CHECK(backend_available(Backend::builtin));
}

TEST_CASE("LP export") {
    SUBCASE("one variable") {
        MilpModel m("one");
        const auto x = m.add_integer("x", 0, 5);
        m.set_objective(LinearExpr{}.add(x, 2.0));
        const auto text = export_lp_text(m);
        CHECK(text.find("obj: + 2 x") != std::string::npos);
        CHECK(text.find("0 <= x <= 5") != std::string::npos);
        CHECK(text.find("Generals\n x\n") != std::string::npos);
    }
    SUBCASE("both inequality senses") {
        MilpModel m;
        const auto x = m.add_continuous("x");
        m.add_constraint("lo", LinearExpr{}.add(x, 1.0), RowSense::greater_equal, 1);
        m.add_constraint("hi", LinearExpr{}.add(x, 1.0), RowSense::less_equal, 4);
        const auto text = export_lp_text(m);
        CHECK(text.find("lo: + x >= 1") != std::string::npos);
        CHECK(text.find("hi: + x <= 4") != std::string::npos);
    }
    SUBCASE("golden base model for a two-asset instance") {
        const auto model = build_base(PolicyInputs::from_instance(two_asset_instance())).model;
        CHECK(export_lp_text(model) == read_text(std::string(TEST_DATA_DIR) + "/base_two_asset.lp"));
    }
}

TEST_CASE("builtin and HiGHS agree on small policy models") {
    if (!backend_available(Backend::highs)) return;
    for (const auto& inst : oracle::suite(40, 501)) {
        const auto in = PolicyInputs::from_instance(inst);
        for (const auto& pm : {build_base(in), build_directional(in, partition_assets(in.state, in.target)),
                               build_naive(in)}) {
            const auto a = solve(pm.model, with(Backend::builtin));
            const auto b = solve(pm.model, with(Backend::highs));
            REQUIRE(a.status == b.status);
            if (a.status != SolveStatus::optimal) continue;
            // Reported objectives in dollars, without the tie-break term.
            const double va = pm.reported_objective.evaluate(a.assignment) / 100.0;
            const double vb = pm.reported_objective.evaluate(b.assignment) / 100.0;
            CHECK(std::abs(va - vb) <= 1e-6);
        }
    }
}

TEST_CASE("returned assignments are feasible") {
    for (const auto& inst : oracle::suite(30, 502)) {
        const auto pm = build_base(PolicyInputs::from_instance(inst));
        for (Backend b : backends()) {
            const auto out = solve(pm.model, with(b));
            if (!out.has_solution()) continue;
            const auto v = pm.model.violation(out.assignment);
            CHECK(v.row <= 1e-6);
            CHECK(v.bound <= 1e-6);
            CHECK(v.integrality <= 1e-6);
            CHECK(std::abs(pm.model.objective().evaluate(out.assignment) - out.objective_value) <= 1e-6);
        }
    }
}

TEST_CASE("fixed seed and one thread reproduce the solve") {
    const auto pm = build_base(PolicyInputs::from_instance(two_asset_instance()));
    for (Backend b : backends()) {
        const auto first = solve(pm.model, with(b));
        const auto second = solve(pm.model, with(b));
        CHECK(first.assignment == second.assignment);
    }
}
