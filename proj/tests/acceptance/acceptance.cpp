// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is the number of failing criteria, not counting those named
// with --expect-red (they still print FAIL).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "changeover/colgen.hpp"
#include "changeover/engine.hpp"
#include "changeover/errors.hpp"
#include "changeover/experiments.hpp"
#include "changeover/formulations.hpp"
#include "oracle/brute_force.hpp"
#include "oracle/instances.hpp"
#include "oracle/stats_oracle.hpp"

using namespace changeover;

namespace {

constexpr double kExact = 1e-6;
constexpr std::size_t kSuiteSize = 200;
constexpr std::uint64_t kSuiteSeed = 2024;
const std::vector<double> kLambdas{0.0, 0.25, 0.5, 0.75, 5.0};

struct Outcome {
    bool pass = true;
    std::string detail;
};

milp::SolveSettings exact() {
    milp::SolveSettings s;
    s.gap = 0.0;
    return s;
}

std::optional<PolicySolution> solve_or_infeasible(const PolicyModel& model) {
    try {
        return solve_policy(model, exact());
    } catch (const InfeasibleTargetError&) {
        return std::nullopt;
    }
}

std::optional<double> objective_of(const std::optional<PolicySolution>& s) {
    if (!s) return std::nullopt;
    return s->objective;
}

std::optional<double> objective_of(const oracle::Result& r) {
    if (!r.feasible) return std::nullopt;
    return r.objective;
}

bool same(const std::optional<double>& a, const std::optional<double>& b, double tol = kExact) {
    if (a.has_value() != b.has_value()) return false;
    return !a || std::abs(*a - *b) <= tol;
}

std::vector<std::size_t> all_assets(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t a = 0; a < n; ++a) v[a] = a;
    return v;
}

// Everything computed once per oracle-suite instance and shared by
// criteria 1, 2, 3, 5 and 7.
struct SuiteEntry {
    PolicyInputs inputs;
    DirectionalPartition partition;
    oracle::Result o_base, o_directional, o_naive, o_once;
    std::map<double, oracle::Result> o_penalized;
    std::optional<PolicySolution> m_base, m_directional, m_naive, m_once;
    std::map<double, std::optional<PolicySolution>> m_penalized;
    std::optional<double> colgen_per_asset, colgen_joint;
};

std::vector<SuiteEntry> build_suite(double& seconds) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<SuiteEntry> out;
    for (const auto& inst : oracle::suite(kSuiteSize, kSuiteSeed)) {
        SuiteEntry e{PolicyInputs::from_instance(inst), {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}};
        const auto& in = e.inputs;
        e.partition = partition_assets(in.state, in.target);
        e.o_base = oracle::solve(oracle::base_problem(in));
        e.o_directional = oracle::solve(oracle::directional_problem(in));
        e.o_naive = oracle::solve(oracle::naive_problem(in));
        e.o_once = oracle::solve(oracle::once_problem(in));
        e.m_base = solve_or_infeasible(build_base(in));
        e.m_directional = solve_or_infeasible(build_directional(in, e.partition));
        e.m_naive = solve_or_infeasible(build_naive(in));
        e.m_once = solve_or_infeasible(build_base(in, BaseOptions{true, true}));
        for (double l : kLambdas) {
            e.o_penalized[l] = oracle::solve(oracle::penalized_problem(in, l));
            e.m_penalized[l] = solve_or_infeasible(build_penalized(in, e.partition, l));
        }
        const auto all = all_assets(in.assets());
        e.colgen_per_asset = objective_of(solve_or_infeasible(colgen::build_colgen_unpruned(
            in, {colgen::Variant::colgen_true, colgen::MasterMode::per_asset, colgen::kDefaultPatternCap}, all, all)));
        e.colgen_joint = objective_of(solve_or_infeasible(colgen::build_colgen_unpruned(
            in, {colgen::Variant::colgen_true, colgen::MasterMode::joint, colgen::kDefaultPatternCap}, all, all)));
        out.push_back(std::move(e));
    }
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

Outcome criterion_base(const std::vector<SuiteEntry>& suite, double seconds) {
    std::size_t bad = 0, feasible = 0;
    for (const auto& e : suite) {
        if (!same(objective_of(e.m_base), objective_of(e.o_base))) ++bad;
        if (e.o_base.feasible) ++feasible;
    }
    return {bad == 0 && seconds < 300.0,
            fmt("%zu instances (%zu feasible), %zu mismatches, %.1f s for the whole suite", suite.size(), feasible,
                bad, seconds)};
}

Outcome criterion_variants(const std::vector<SuiteEntry>& suite) {
    std::size_t bad_d = 0, bad_p = 0, bad_n = 0;
    for (const auto& e : suite) {
        if (!same(objective_of(e.m_directional), objective_of(e.o_directional))) ++bad_d;
        if (!same(objective_of(e.m_naive), objective_of(e.o_naive))) ++bad_n;
        for (double l : kLambdas) {
            if (!same(objective_of(e.m_penalized.at(l)), objective_of(e.o_penalized.at(l)))) ++bad_p;
        }
    }
    return {bad_d + bad_p + bad_n == 0,
            fmt("mismatches: directional %zu, penalized %zu (over %zu lambdas), naive %zu", bad_d, bad_p,
                kLambdas.size(), bad_n)};
}

Outcome criterion_relations(const std::vector<SuiteEntry>& suite) {
    std::size_t chain = 0, zero = 0, five = 0;
    for (const auto& e : suite) {
        const auto d = objective_of(e.m_directional);
        const auto b = objective_of(e.m_base);
        for (double l : kLambdas) {
            const auto p = objective_of(e.m_penalized.at(l));
            if (d && (!p || *d > *p + kExact)) ++chain;
            if (p && (!b || *p > *b + kExact)) ++chain;
        }
        if (!same(objective_of(e.m_penalized.at(0.0)), b)) ++zero;
        const auto& p5 = e.m_penalized.at(5.0);
        if (!same(objective_of(p5), d)) ++five;
        if (p5 && wrong_direction_value(p5->plan, e.inputs.path, e.partition) != Money{}) ++five;
    }
    return {chain + zero + five == 0,
            fmt("ordering violations %zu, lambda=0 vs base %zu, lambda=5 vs directional %zu", chain, zero, five)};
}

Outcome criterion_monotone(const std::vector<SuiteEntry>& suite) {
    std::size_t checked = 0, bad = 0;
    for (const auto& e : suite) {
        if (checked == 20) break;
        if (!e.m_base) continue;
        ++checked;
        Money previous = Money::from_cents(INT64_MAX);
        for (double l : kLambdas) {
            const Money w = wrong_direction_value(e.m_penalized.at(l)->plan, e.inputs.path, e.partition);
            if (w > previous) ++bad;
            previous = w;
        }
    }
    return {checked == 20 && bad == 0, fmt("%zu instances, %zu increases of wrong-direction value", checked, bad)};
}

Outcome criterion_big_m(const std::vector<SuiteEntry>& suite) {
    std::size_t plans = 0, bad = 0;
    std::int64_t tightest = INT64_MAX;
    for (const auto& e : suite) {
        if (!e.o_base.feasible) continue;
        ++plans;
        const auto& in = e.inputs;
        const auto bm = compute_big_m(in.path, portfolio_value(in.state, in.path.row(0)), in.periods());
        for (std::size_t k = 0; k < in.periods(); ++k) {
            for (std::size_t a = 0; a < in.assets(); ++a) {
                const std::int64_t v = std::llabs(e.o_base.net_trades[k][a]);
                if (v > bm.share_cap[k]) ++bad;
                if (v > 0) tightest = std::min(tightest, bm.share_cap[k] - v);
            }
        }
    }
    return {bad == 0, fmt("%zu optimal plans, %zu volumes above M, smallest slack %lld shares", plans, bad,
                          static_cast<long long>(tightest))};
}

std::uint64_t count_recursively(std::size_t assets, std::size_t periods) {
    if (assets == 0) return 1;
    std::uint64_t total = 0;
    for (std::size_t choice = 0; choice <= periods; ++choice) total += count_recursively(assets - 1, periods);
    return total;
}

Outcome criterion_patterns() {
    const std::vector<std::size_t> two{0, 1};
    const auto sells = colgen::enumerate_patterns(colgen::Direction::sell, two, 30, 3);
    bool ok = sells.size() == 961 && colgen::joint_pattern_count(2, 30) == 961;
    std::size_t checked = 0;
    for (std::size_t k = 1; k <= 3; ++k) {
        for (std::size_t T = 1; T <= 4; ++T) {
            const auto rel = all_assets(k);
            const auto pats = colgen::enumerate_patterns(colgen::Direction::buy, rel, T, k);
            std::uint64_t power = 1;
            for (std::size_t i = 0; i < k; ++i) power *= T + 1;
            ok = ok && pats.size() == count_recursively(k, T) && pats.size() == power &&
                 colgen::joint_pattern_count(k, T) == power;
            ++checked;
        }
    }
    return {ok, fmt("2 sell assets over 30 periods: %zu patterns; %zu (k, T) pairs checked", sells.size(), checked)};
}

Outcome criterion_colgen(const std::vector<SuiteEntry>& suite) {
    std::size_t vs_compact = 0, vs_oracle = 0, modes = 0;
    for (const auto& e : suite) {
        if (!same(e.colgen_per_asset, objective_of(e.m_once))) ++vs_compact;
        if (!same(e.colgen_per_asset, objective_of(e.o_once))) ++vs_oracle;
        if (!same(e.colgen_per_asset, e.colgen_joint)) ++modes;
    }
    return {vs_compact + vs_oracle + modes == 0,
            fmt("mismatches: vs compact once-per-direction %zu, vs oracle %zu, joint vs per-asset %zu", vs_compact,
                vs_oracle, modes)};
}

SimulationConfig config_for(const std::string& policy, ForecastMethod method, std::size_t lookback) {
    SimulationConfig c;
    c.policy = parse_policy(policy);
    c.forecaster.method = method;
    c.forecaster.lookback = lookback;
    c.solver = exact();
    return c;
}

Outcome criterion_dominance() {
    oracle::SmallLimits lim;
    lim.max_assets = 5;
    lim.max_periods = 10;
    lim.max_budget = 200;
    std::size_t compared = 0, bad = 0, skipped = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 0; compared < 20 && seed < 200; ++seed) {
        const auto raw = oracle::random_instance(77'000 + seed, lim);
        const auto market = synthetic_market(raw.universe(), raw.prices());
        const auto inst = relabel_instance(raw, market, 0);
        const auto base = run(inst, market, config_for("Base", ForecastMethod::oracle, 1));
        const auto naive = run(inst, market, config_for("Naive", ForecastMethod::oracle, 1));
        if (!naive.ok()) {
            ++skipped;
            continue;
        }
        ++compared;
        if (!base.ok()) {
            ++bad;
            continue;
        }
        const double gap = base.final_value.to_double() - naive.final_value.to_double();
        worst = std::min(worst, gap);
        if (gap < -kExact) ++bad;
    }
    return {compared == 20 && bad == 0,
            fmt("%zu instances (%zu skipped, naive infeasible), %zu with base below naive, worst gap %.2f", compared,
                skipped, bad, worst)};
}

// Checks the per-period accounting of one simulation; returns the number of violations.
std::size_t accounting_violations(const TransitionInstance& inst, const SimulationResult& r) {
    std::size_t bad = 0;
    PortfolioState prev = inst.initial();
    for (const auto& p : r.periods) {
        PortfolioState now{p.holdings, p.cash};
        if (p.value != portfolio_value(now, p.prices)) ++bad;
        if (p.cash < Money{}) ++bad;
        for (auto h : p.holdings) bad += h < 0;
        Money flow;
        for (std::size_t a = 0; a < p.prices.size(); ++a) {
            flow += p.prices[a] * (p.trades.sells[a] - p.trades.buys[a]);
        }
        if (prev.cash + flow - p.fees != p.cash) ++bad;
        if (p.fees != inst.fee() * p.trades.executed_flags()) ++bad;
        for (std::size_t a = 0; a < p.holdings.size(); ++a) {
            if (prev.holdings[a] + p.trades.buys[a] - p.trades.sells[a] != p.holdings[a]) ++bad;
        }
        if (p.value_before != portfolio_value(prev, p.prices)) ++bad;
        prev = now;
    }
    if (r.ok() && !satisfies_target(prev, inst.target())) ++bad;
    if (r.ok() && !r.periods.empty() && r.final_value != r.periods.back().value) ++bad;
    return bad;
}

Outcome criterion_accounting() {
    const auto market = random_walk_market(12, 48 + 8 + 40, 909);
    ScenarioRanges ranges;
    ranges.min_assets = 3;
    ranges.max_assets = 6;
    ranges.horizon = 6;
    ranges.min_budget = Money::from_cents(200'000);
    ranges.max_budget = Money::from_cents(2'000'000);
    const std::vector<std::string> policies{"Naive", "Directional", "Base", "DirP_25", "ColGen_True", "ColGen_False"};
    const std::vector<ForecastMethod> methods{ForecastMethod::persistence, ForecastMethod::drift, ForecastMethod::oracle};
    std::size_t runs = 0, periods = 0, bad = 0, successes = 0;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const auto scenario = generate_scenario(market, ranges, 500 + seed);
        const auto method = methods[seed % methods.size()];
        for (const auto& policy : policies) {
            auto cfg = config_for(policy, method, ranges.lookback);
            cfg.solver.gap = 1e-6;
            const auto r = run(scenario.instance, market, cfg);
            ++runs;
            successes += r.ok();
            periods += r.periods.size();
            bad += accounting_violations(scenario.instance, r);
        }
    }
    return {bad == 0 && successes > 0, fmt("%zu runs (%zu successful), %zu periods, %zu violations", runs, successes,
                                           periods, bad)};
}

struct DeskSuite {
    SuiteResults results;
    std::size_t scenarios = 0;
    std::size_t start_at_target = 0;  // initial holdings already cover the target
    double wall_seconds = 0.0;
};

DeskSuite run_desk_suite() {
    const auto start = std::chrono::steady_clock::now();
    const auto market = random_walk_market(40, 48 + 10 + 1 + 120, 31337);
    ScenarioRanges ranges;
    ranges.min_assets = 10;
    ranges.max_assets = 10;
    ranges.horizon = 10;
    ExperimentSuite suite;
    for (std::uint64_t seed = 0; seed < 40; ++seed) suite.scenarios.push_back(generate_scenario(market, ranges, seed).spec);
    for (const auto* name : {"Naive", "Directional", "DirP_25", "Base", "ColGen_True", "ColGen_False"}) {
        suite.policies.push_back(parse_policy(name));
    }
    suite.forecaster.method = ForecastMethod::drift;
    suite.forecaster.lookback = ranges.lookback;
    suite.solver.backend = backend_available(milp::Backend::highs) ? milp::Backend::highs : milp::Backend::automatic;
    suite.jobs = std::max(1u, std::thread::hardware_concurrency());
    DeskSuite out;
    out.scenarios = suite.scenarios.size();
    for (const auto& spec : suite.scenarios) {
        out.start_at_target += satisfies_target(spec.initial, spec.target);
    }
    out.results = run_suite(suite, market);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

Outcome criterion_trend(const DeskSuite& desk) {
    const auto trades = summarize(desk.results.records, Metric::trades, {"Directional", "Naive"});
    const auto fees = summarize(desk.results.records, Metric::fees, {"Directional", "Naive"});
    auto named = [](const SummaryTable& t, std::size_t i, const char* policy) {
        return t.rows.size() > i && t.rows[i].policy == policy;
    };
    if (!named(trades, 0, "Directional") || !named(trades, 1, "Naive") || !named(fees, 0, "Directional") ||
        !named(fees, 1, "Naive")) {
        return {false, "missing usable results"};
    }
    const std::size_t n = std::min(trades.rows[0].count, trades.rows[1].count);
    const bool ok = n >= 30 && trades.rows[0].mean < trades.rows[1].mean && fees.rows[0].mean < fees.rows[1].mean;
    return {ok, fmt("%zu scenarios used (%zu excluded by MAPE, %zu of %zu start at target); Directional vs Naive: "
                    "trades %.2f vs %.2f, fees %.2f vs %.2f",
                    n, desk.results.excluded.size(), desk.start_at_target, desk.scenarios, trades.rows[0].mean,
                    trades.rows[1].mean, fees.rows[0].mean, fees.rows[1].mean)};
}

Outcome criterion_runtime(const DeskSuite& desk) {
    std::size_t solves = 0, slow = 0, failed = 0;
    double slowest = 0.0;
    std::string where = "-";
    for (const auto& r : desk.results.records) {
        failed += !r.ok();
        for (std::size_t t = 0; t < r.solve_seconds.size(); ++t) {
            const double s = r.solve_seconds[t];
            ++solves;
            slow += s >= 5.0;
            if (s > slowest) {
                slowest = s;
                where = r.policy + " on " + r.scenario + " at t=" + std::to_string(t);
            }
        }
    }
    const auto table = render_summary(summarize(desk.results.records, Metric::percent_change, desk.results.policies));
    const std::string header = table.substr(0, table.find('\n'));
    const bool schema = header == "| Policy | Mean | Std Dev | Median | Max | Min |";
    const bool highs = backend_available(milp::Backend::highs);
    return {highs && slow == 0 && schema && solves > 0,
            fmt("%zu solves across %zu runs (%zu failed), slowest %.3f s (%s), %zu at or above 5 s; backend %s; "
                "five statistic columns %s; suite wall time %.1f s",
                solves, desk.results.records.size(), failed, slowest, where.c_str(), slow, highs ? "highs" : "builtin",
                schema ? "yes" : "no", desk.wall_seconds)};
}

bool close_rel(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(std::abs(a), std::abs(b))); }

Outcome criterion_statistics() {
    std::mt19937_64 rng(4242);
    std::size_t moment_bad = 0, count_bad = 0;
    const std::vector<Metric> metrics{Metric::percent_change, Metric::trades, Metric::fees, Metric::runtime};
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t policies = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
        const std::size_t scenarios = std::uniform_int_distribution<std::size_t>(1, 25)(rng);
        std::vector<std::string> roster;
        for (std::size_t p = 0; p < policies; ++p) roster.push_back("P" + std::to_string(p));
        std::vector<RunRecord> records;
        std::bernoulli_distribution coin(0.1);
        std::uniform_int_distribution<int> grid(-400, 400);
        for (std::size_t s = 0; s < scenarios; ++s) {
            const bool excluded = coin(rng);
            for (const auto& p : roster) {
                RunRecord r;
                r.scenario = "s" + std::to_string(s);
                r.policy = p;
                r.status = coin(rng) ? "infeasible" : "success";
                r.excluded = excluded;
                // Values on a 0.001 grid so ties and near-ties at the 0.005 tolerance occur.
                r.percent_change = grid(rng) / 1000.0;
                r.trades = std::uniform_int_distribution<std::int64_t>(0, 40)(rng);
                r.fees = Money::from_cents(std::uniform_int_distribution<std::int64_t>(0, 40'000)(rng));
                r.runtime = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
                records.push_back(r);
            }
        }
        const Metric metric = metrics[static_cast<std::size_t>(trial) % metrics.size()];
        const auto table = summarize(records, metric, roster);
        std::size_t row = 0;
        for (const auto& p : roster) {
            const auto expected = oracle::moments(oracle::values_for(records, p, metric));
            if (expected.count == 0) continue;
            if (row >= table.rows.size() || table.rows[row].policy != p) {
                ++count_bad;
                break;
            }
            const auto& got = table.rows[row++];
            count_bad += got.count != expected.count;
            moment_bad += !close_rel(got.mean, expected.mean) || !close_rel(got.std_dev, expected.std_dev) ||
                          !close_rel(got.median, expected.median) || got.max != expected.max ||
                          got.min != expected.min;
        }
        count_bad += row != table.rows.size();

        try {
            const auto m = win_loss_tie(records, metric, 0.005, roster);
            for (std::size_t i = 0; i < roster.size(); ++i) {
                for (std::size_t j = 0; j < roster.size(); ++j) {
                    const auto t = oracle::pairwise(records, roster[i], roster[j], metric, 0.005);
                    const auto& c = m.cells[i][j];
                    count_bad += c.wins != t.wins || c.losses != t.losses || c.ties != t.ties;
                    count_bad += c.wins != m.cells[j][i].losses || c.ties != m.cells[j][i].ties;
                }
            }
        } catch (const InvalidArgument&) {
            // Only legitimate when two policies with usable records share no scenario.
            bool disjoint = false;
            for (const auto& a : roster) {
                for (const auto& b : roster) {
                    const auto t = oracle::pairwise(records, a, b, metric, 0.005);
                    disjoint = disjoint || (t.wins + t.losses + t.ties == 0 &&
                                            !oracle::values_for(records, a, metric).empty() &&
                                            !oracle::values_for(records, b, metric).empty());
                }
            }
            count_bad += !disjoint;
        }
    }
    return {moment_bad + count_bad == 0,
            fmt("1000 trials, %zu count mismatches, %zu moment mismatches", count_bad, moment_bad)};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> expected_red;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--expect-red" && i + 1 < argc) {
            std::stringstream ids(argv[++i]);
            for (std::string id; std::getline(ids, id, ',');) expected_red.insert(std::stoi(id));
        }
    }
    int failures = 0;
    int red = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool known = expected_red.contains(id);
        if (!o.pass) ++(known ? red : failures);
        std::printf("[%s] %2d %-40s %s%s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
                    !o.pass && known ? " (expected red)" : "");
        std::fflush(stdout);
    };

    double suite_seconds = 0.0;
    std::vector<SuiteEntry> suite;
    try {
        suite = build_suite(suite_seconds);
    } catch (const std::exception& e) {
        std::printf("oracle suite construction failed: %s\n", e.what());
        return 12;
    }
    report(1, "oracle equivalence (base)", [&] { return criterion_base(suite, suite_seconds); });
    report(2, "oracle equivalence (dir, penalized, naive)", [&] { return criterion_variants(suite); });
    report(3, "formulation relations", [&] { return criterion_relations(suite); });
    report(4, "lambda monotonicity", [&] { return criterion_monotone(suite); });
    report(5, "big-M validity", [&] { return criterion_big_m(suite); });
    report(6, "pattern counting", [] { return criterion_patterns(); });
    report(7, "pattern master equivalence", [&] { return criterion_colgen(suite); });
    report(8, "perfect-forecast dominance", [] { return criterion_dominance(); });
    report(9, "accounting invariants", [] { return criterion_accounting(); });

    std::optional<DeskSuite> desk;
    try {
        desk = run_desk_suite();
    } catch (const std::exception& e) {
        std::printf("desk suite failed: %s\n", e.what());
    }
    report(10, "trading-behaviour trend", [&] {
        return desk ? criterion_trend(*desk) : Outcome{false, "desk suite did not run"};
    });
    report(11, "runtime and table schema", [&] {
        return desk ? criterion_runtime(*desk) : Outcome{false, "desk suite did not run"};
    });
    report(12, "statistics correctness", [] { return criterion_statistics(); });

    std::printf("%d of 12 criteria failed (%d expected red)\n", failures + red, red);
    return failures;
}
