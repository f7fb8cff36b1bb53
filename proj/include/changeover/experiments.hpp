#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "changeover/data_ingest.hpp"
#include "changeover/engine.hpp"

namespace changeover {

/// One (scenario, policy) run as persisted in results.jsonl. Runtime lives
/// in the separate timings file so results are byte-identical across runs.
struct RunRecord {
    std::string scenario;
    std::string policy;
    std::string status;
    std::optional<std::size_t> failure_period;
    std::string message;
    Money initial_value;
    Money final_value;
    double percent_change = 0.0;
    std::int64_t trades = 0;
    Money fees;
    std::size_t solves = 0;
    std::size_t time_limit_events = 0;
    bool target_satisfied = false;
    std::optional<double> scenario_mape;
    bool excluded = false;  ///< scenario MAPE above the threshold

    // timings
    double runtime = 0.0;
    std::vector<double> solve_seconds;

    bool ok() const { return status == "success"; }
};

RunRecord make_record(const std::string& scenario, const SimulationResult& result, std::optional<double> scenario_mape,
                      bool excluded);

struct ExclusionEntry {
    std::string scenario;
    double mape = 0.0;
};

struct ScenarioFailure {
    std::string scenario;
    std::string message;
};

struct ExperimentSuite {
    std::vector<ScenarioSpec> scenarios;
    std::vector<EnginePolicy> policies;
    ForecastConfig forecaster;
    milp::SolveSettings solver;
    double mape_threshold = 10.0;
    std::size_t jobs = 1;
};

struct SuiteResults {
    std::vector<std::string> policies;  ///< roster order
    std::vector<RunRecord> records;     ///< scenario order, then roster order
    std::vector<ExclusionEntry> excluded;
    std::vector<ScenarioFailure> failures;  ///< scenarios that could not be set up
};

/// Runs every (scenario, policy) pair. Forecasts are computed once per
/// scenario and shared by all policies. Scenarios whose mean MAPE exceeds
/// the threshold still run but are flagged and logged as excluded.
SuiteResults run_suite(const ExperimentSuite& suite, const MarketHistory& market);

enum class Metric { percent_change, trades, fees, runtime };
std::string to_string(Metric metric);
Metric parse_metric(const std::string& text);
double metric_value(const RunRecord& record, Metric metric);

struct SummaryRow {
    std::string policy;
    std::size_t count = 0;
    double mean = 0.0;
    double std_dev = 0.0;  ///< sample (n - 1); 0 for a single value
    double median = 0.0;   ///< midpoint of the two middle values for even n
    double max = 0.0;
    double min = 0.0;
};

struct SummaryTable {
    Metric metric = Metric::percent_change;
    std::vector<SummaryRow> rows;
    std::vector<std::string> warnings;  ///< policies omitted for lack of data
};

SummaryRow summarize_values(const std::string& policy, std::vector<double> values);

/// Statistics over successful, non-excluded records. Policies follow
/// `roster` order, then any other policy in first-seen order; policies with
/// no usable record are omitted with a warning.
SummaryTable summarize(const std::vector<RunRecord>& records, Metric metric,
                       const std::vector<std::string>& roster = {});

struct WinLossTie {
    std::size_t wins = 0;
    std::size_t losses = 0;
    std::size_t ties = 0;
};

struct WinLossMatrix {
    Metric metric = Metric::percent_change;
    double tolerance = 0.005;
    std::vector<std::string> policies;
    std::vector<std::vector<WinLossTie>> cells;  ///< [row][column]
};

/// Pairwise comparison over scenarios both policies completed. The row wins
/// a scenario when its value exceeds the column's by more than `tolerance`.
/// Throws InvalidArgument when two policies with records share no scenario.
WinLossMatrix win_loss_tie(const std::vector<RunRecord>& records, Metric metric, double tolerance = 0.005,
                           const std::vector<std::string>& roster = {});

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y = slope * x + intercept. Throws InvalidArgument
/// with fewer than two points or constant x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Markdown table with the columns Policy | Mean | Std Dev | Median | Max | Min.
std::string render_summary(const SummaryTable& table);
std::string render_win_loss(const WinLossMatrix& matrix);

std::string record_to_json(const RunRecord& record);
std::string timing_to_json(const RunRecord& record);
RunRecord record_from_json(const std::string& line);

struct ReportBundle {
    std::vector<std::filesystem::path> files;
};

/// Writes results.jsonl, timings.jsonl, exclusions.jsonl, failures.jsonl,
/// summary tables, the win-loss-tie table, the scatter of returns against
/// Naive with fitted trendlines and the runtime histogram.
ReportBundle emit_report(const SuiteResults& results, const std::filesystem::path& directory);

/// Reads results.jsonl (and timings.jsonl and exclusions.jsonl when present)
/// back into SuiteResults.
SuiteResults load_results(const std::filesystem::path& directory);

}  // namespace changeover
