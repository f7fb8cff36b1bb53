#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "changeover/errors.hpp"
#include "changeover/experiments.hpp"
#include "oracle/brute_force.hpp"
#include "oracle/instances.hpp"

using namespace changeover;
namespace fs = std::filesystem;

namespace {

struct SolverFlags {
    double gap = 1e-6;
    double time_limit = 60.0;
    std::uint64_t seed = 0;
    std::string backend = "auto";

    void attach(CLI::App* app) {
        app->add_option("--gap", gap, "Relative MIP gap")->capture_default_str()->check(CLI::NonNegativeNumber);
        app->add_option("--time-limit", time_limit, "Seconds per solve")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--seed", seed, "Solver random seed")->capture_default_str();
        app->add_option("--backend", backend, "auto, highs or builtin")->capture_default_str();
    }

    milp::SolveSettings settings() const {
        milp::SolveSettings s;
        s.gap = gap;
        s.time_limit = time_limit;
        s.seed = seed;
        s.backend = milp::parse_backend(backend);
        return s;
    }
};

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw DataError("cannot write " + path.string());
}

int gen_market(std::size_t assets, std::size_t rows, std::uint64_t seed, double volatility, const fs::path& out) {
    write_file(out, prices_to_csv(random_walk_market(assets, rows, seed, volatility)));
    std::cout << "wrote " << rows << " rows x " << assets << " assets to " << out.string() << '\n';
    return 0;
}

int gen_scenarios(const fs::path& history_file, std::size_t count, std::uint64_t seed, const ScenarioRanges& ranges,
                  const fs::path& out) {
    const auto loaded = load_prices(history_file);
    for (const auto& d : loaded.dropped) std::cerr << "dropped " << d << " (unfillable gap)\n";
    std::vector<ScenarioSpec> specs;
    for (std::size_t i = 0; i < count; ++i) specs.push_back(generate_scenario(loaded.history, ranges, seed + i).spec);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_scenarios(out, specs);
    std::cout << "wrote " << specs.size() << " scenarios to " << out.string() << '\n';
    return 0;
}

void print_tables(const SuiteResults& results) {
    for (Metric m : {Metric::percent_change, Metric::trades, Metric::fees, Metric::runtime}) {
        const auto table = summarize(results.records, m, results.policies);
        std::cout << "\n" << to_string(m) << "\n" << render_summary(table);
        for (const auto& w : table.warnings) std::cout << "warning: " << w << '\n';
    }
}

int run_cmd(const fs::path& history_file, const fs::path& scenario_file, std::vector<std::string> policies,
            const std::vector<double>& lambdas, const ForecastConfig& forecaster, double mape_threshold,
            std::size_t jobs, const SolverFlags& solver, const fs::path& out) {
    ExperimentSuite suite;
    suite.scenarios = read_scenarios(scenario_file);
    for (double l : lambdas) {
        char name[32];
        std::snprintf(name, sizeof name, "DirP_%ld", std::lround(l * 100.0));
        policies.emplace_back(name);
    }
    if (policies.empty()) throw InvalidArgument("no policies given");
    for (const auto& p : policies) suite.policies.push_back(parse_policy(p));
    suite.forecaster = forecaster;
    suite.solver = solver.settings();
    suite.mape_threshold = mape_threshold;
    suite.jobs = jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : jobs;
    const auto history = load_prices(history_file).history;
    const auto results = run_suite(suite, history);
    const auto bundle = emit_report(results, out);
    std::cout << results.records.size() << " runs, " << results.excluded.size() << " scenarios excluded, "
              << results.failures.size() << " scenario failures; " << bundle.files.size() << " files in "
              << out.string() << '\n';
    print_tables(results);
    return 0;
}

int report_cmd(const fs::path& results_dir, const fs::path& out) {
    const auto results = load_results(results_dir);
    if (!out.empty()) emit_report(results, out);
    print_tables(results);
    std::cout << '\n'
              << render_win_loss(win_loss_tie(results.records, Metric::percent_change, 0.005, results.policies));
    return 0;
}

int oracle_check(std::size_t count, std::uint64_t seed, const SolverFlags& solver) {
    milp::SolveSettings settings = solver.settings();
    settings.gap = 0.0;
    auto milp_value = [&](const PolicyModel& pm) -> std::optional<double> {
        try {
            return solve_policy(pm, settings).objective;
        } catch (const InfeasibleTargetError&) {
            return std::nullopt;
        }
    };
    std::size_t mismatches = 0, checked = 0;
    auto compare = [&](const char* what, std::size_t i, const std::optional<double>& got, const oracle::Result& want) {
        ++checked;
        const bool same = got.has_value() == want.feasible && (!got || std::abs(*got - want.objective) <= 1e-6);
        if (same) return;
        ++mismatches;
        std::cout << "mismatch: instance " << i << ' ' << what << " milp "
                  << (got ? std::to_string(*got) : std::string("infeasible")) << " oracle "
                  << (want.feasible ? std::to_string(want.objective) : std::string("infeasible")) << '\n';
    };
    const auto instances = oracle::suite(count, seed);
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto in = PolicyInputs::from_instance(instances[i]);
        const auto part = partition_assets(in.state, in.target);
        compare("base", i, milp_value(build_base(in)), oracle::solve(oracle::base_problem(in)));
        compare("directional", i, milp_value(build_directional(in, part)), oracle::solve(oracle::directional_problem(in)));
        for (double l : {0.0, 0.25, 0.5, 0.75, 5.0}) {
            compare("penalized", i, milp_value(build_penalized(in, part, l)),
                    oracle::solve(oracle::penalized_problem(in, l)));
        }
        compare("naive", i, milp_value(build_naive(in)), oracle::solve(oracle::naive_problem(in)));
    }
    std::cout << checked << " comparisons over " << instances.size() << " instances, " << mismatches
              << " mismatches\n";
    return mismatches == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-period portfolio changeover experiments"};
    app.require_subcommand(1);

    auto* market = app.add_subcommand("gen-market", "Write a synthetic random-walk price file");
    std::size_t m_assets = 40, m_rows = 300;
    std::uint64_t m_seed = 1;
    double m_vol = 0.02;
    fs::path m_out = "prices.csv";
    market->add_option("--assets", m_assets)->capture_default_str();
    market->add_option("--rows", m_rows)->capture_default_str();
    market->add_option("--seed", m_seed)->capture_default_str();
    market->add_option("--volatility", m_vol)->capture_default_str();
    market->add_option("-o,--out", m_out)->capture_default_str();

    auto* gen = app.add_subcommand("gen-scenarios", "Draw random scenarios from a price history");
    fs::path g_history, g_out = "scenarios.jsonl";
    std::size_t g_count = 10;
    std::uint64_t g_seed = 1;
    ScenarioRanges ranges;
    double min_fee = ranges.min_fee.to_double(), max_fee = ranges.max_fee.to_double();
    double min_budget = ranges.min_budget.to_double(), max_budget = ranges.max_budget.to_double();
    std::string budget_mode = "independent";
    gen->add_option("history", g_history, "Price CSV")->required()->check(CLI::ExistingFile);
    gen->add_option("--count", g_count)->capture_default_str();
    gen->add_option("--seed", g_seed, "Seed of the first scenario; later ones use seed+1, ...")->capture_default_str();
    gen->add_option("--min-assets", ranges.min_assets)->capture_default_str();
    gen->add_option("--max-assets", ranges.max_assets)->capture_default_str();
    gen->add_option("--horizon", ranges.horizon)->capture_default_str();
    gen->add_option("--lookback", ranges.lookback)->capture_default_str();
    gen->add_option("--min-fee", min_fee)->capture_default_str();
    gen->add_option("--max-fee", max_fee)->capture_default_str();
    gen->add_option("--min-budget", min_budget)->capture_default_str();
    gen->add_option("--max-budget", max_budget)->capture_default_str();
    gen->add_option("--budget-mode", budget_mode)->check(CLI::IsMember({"independent", "same"}))->capture_default_str();
    gen->add_option("-o,--out", g_out)->capture_default_str();

    auto* run = app.add_subcommand("run", "Run policies over a scenario file and write a report");
    fs::path r_history, r_scenarios, r_out = "results";
    std::vector<std::string> r_policies;
    std::vector<double> r_lambdas;
    std::string r_forecaster = "drift";
    std::size_t r_lookback = 48, r_jobs = 1;
    double r_mape = 10.0;
    SolverFlags r_solver;
    run->add_option("history", r_history, "Price CSV")->required()->check(CLI::ExistingFile);
    run->add_option("scenarios", r_scenarios, "Scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("-p,--policies", r_policies, "Naive, Directional, Base, DirP_<pct>, ColGen_True, ColGen_False")
        ->delimiter(',');
    run->add_option("--lambda", r_lambdas, "Penalty fractions; each adds a DirP policy")->delimiter(',');
    run->add_option("--forecaster", r_forecaster)->check(CLI::IsMember({"persistence", "drift", "oracle"}))
        ->capture_default_str();
    run->add_option("--lookback", r_lookback)->capture_default_str();
    run->add_option("--mape-threshold", r_mape, "Exclude scenarios whose mean MAPE exceeds this")->capture_default_str();
    run->add_option("--jobs", r_jobs, "Parallel scenarios (0 = all cores)")->capture_default_str();
    run->add_option("-o,--out", r_out)->capture_default_str();
    r_solver.attach(run);

    auto* report = app.add_subcommand("report", "Print the tables of a results directory");
    fs::path p_dir, p_out;
    report->add_option("results", p_dir)->required()->check(CLI::ExistingDirectory);
    report->add_option("-o,--out", p_out, "Also rewrite the full report here");

    auto* check = app.add_subcommand("oracle-check", "Compare the MILP policies against brute force");
    std::size_t c_count = 200;
    std::uint64_t c_seed = 2024;
    SolverFlags c_solver;
    check->add_option("--count", c_count)->capture_default_str();
    c_solver.attach(check);
    check->get_option("--seed")->default_val(c_seed)->description("Instance seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*market) return gen_market(m_assets, m_rows, m_seed, m_vol, m_out);
        if (*gen) {
            ranges.min_fee = Money::from_decimal(min_fee);
            ranges.max_fee = Money::from_decimal(max_fee);
            ranges.min_budget = Money::from_decimal(min_budget);
            ranges.max_budget = Money::from_decimal(max_budget);
            ranges.budget_mode = budget_mode == "same" ? BudgetMode::same : BudgetMode::independent;
            return gen_scenarios(g_history, g_count, g_seed, ranges, g_out);
        }
        if (*run) {
            ForecastConfig fc;
            fc.method = parse_forecast_method(r_forecaster);
            fc.lookback = r_lookback;
            return run_cmd(r_history, r_scenarios, r_policies, r_lambdas, fc, r_mape, r_jobs, r_solver, r_out);
        }
        if (*report) return report_cmd(p_dir, p_out);
        if (*check) return oracle_check(c_count, c_solver.seed, c_solver);
    } catch (const ChangeoverError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
