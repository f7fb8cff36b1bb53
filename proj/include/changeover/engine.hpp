#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "changeover/colgen.hpp"
#include "changeover/data_ingest.hpp"
#include "changeover/forecasting.hpp"
#include "changeover/formulations.hpp"
#include "changeover/milp.hpp"

namespace changeover {

enum class PolicyFamily { compact, colgen };

/// A compact policy or a pattern-enumeration variant, named as in reports:
/// Naive, Directional, Base, DirP_<percent>, ColGen_True, ColGen_False.
struct EnginePolicy {
    PolicyFamily family = PolicyFamily::compact;
    PolicyConfig compact;
    colgen::ColgenConfig colgen;

    std::string name() const;
    static EnginePolicy from_compact(PolicyConfig config);
    static EnginePolicy from_colgen(colgen::Variant variant, colgen::MasterMode mode = colgen::MasterMode::per_asset);
};

/// Throws InvalidArgument for unknown names. DirP_<n> means penalty n/100.
EnginePolicy parse_policy(const std::string& name);

struct SimulationConfig {
    EnginePolicy policy;
    ForecastConfig forecaster;  ///< horizon is set per iteration to the remaining periods
    std::optional<std::size_t> horizon;  ///< when set, must equal the instance horizon
    milp::SolveSettings solver;
    bool record_lp_exports = false;
    std::filesystem::path export_dir;
};

/// Forecasts for every decision period t = 0..T-1 (rows t+1..T), computed
/// once and shared by every policy run on the same scenario.
struct ForecastSchedule {
    std::vector<PriceMatrix> forecasts;
    std::vector<std::optional<double>> mape;

    /// Cell-weighted mean MAPE over all periods with a known realization.
    std::optional<double> mean_mape() const;
};

/// Row of `instance`'s first period inside `market` and the market columns
/// of its assets. Throws DataError when the market does not match the
/// instance prices over the horizon.
struct MarketAlignment {
    std::size_t start_row = 0;
    std::vector<std::size_t> columns;
};
MarketAlignment align_market(const TransitionInstance& instance, const MarketHistory& market);

ForecastSchedule build_forecast_schedule(const TransitionInstance& instance, const MarketHistory& market,
                                         const ForecastConfig& config);

enum class RunStatus { success, infeasible, solver_error, forecast_error, trade_error, target_missed };
std::string to_string(RunStatus status);

struct PeriodRecord {
    std::size_t t = 0;
    std::string label;
    std::vector<Money> prices;           ///< realized Y_t
    std::optional<PriceMatrix> forecast;  ///< rows t+1..T used by the solve
    TradeRow trades;                      ///< executed at Y_t
    Money fees;
    Money value_before;                   ///< Y_t . P_{t-1} + C_{t-1}
    std::vector<std::int64_t> holdings;   ///< after trading
    Money cash;                           ///< after trading
    Money value;                          ///< Y_t . holdings + cash
    bool solved = false;
    double solve_seconds = 0.0;
    std::string solver_status;
    bool time_limit_hit = false;
};

struct SimulationResult {
    std::string policy;
    RunStatus status = RunStatus::success;
    std::optional<std::size_t> failure_period;
    std::string message;
    std::vector<PeriodRecord> periods;

    Money initial_value;
    Money final_value;
    std::int64_t total_trades = 0;  ///< executed flags
    Money total_fees;
    double total_runtime = 0.0;     ///< solver seconds
    std::size_t solves = 0;
    std::size_t time_limit_events = 0;
    bool target_satisfied = false;
    std::optional<double> mean_mape;

    bool ok() const { return status == RunStatus::success; }
};

/// Receding-horizon simulation over the instance horizon. `schedule`, when
/// given, replaces per-run forecasting. Failures are recorded in the result,
/// never thrown; configuration mistakes throw InvalidArgument / DataError.
SimulationResult run(const TransitionInstance& instance, const MarketHistory& market, const SimulationConfig& config,
                     const ForecastSchedule* schedule = nullptr);

/// 100 * (V_T - V_0) / V_0.
double percent_change(const SimulationResult& result);
double percent_change(Money initial, Money final_value);

/// Market holding exactly `prices` (any labels) relabelled with
/// synthetic_date labels, plus `history` leading rows copied from
/// the first row. Used for synthetic experiments.
MarketHistory synthetic_market(const AssetUniverse& universe, const PriceMatrix& prices, std::size_t history = 0);

/// `instance` with prices relabelled to match `synthetic_market(..., history)`.
TransitionInstance relabel_instance(const TransitionInstance& instance, const MarketHistory& market,
                                    std::size_t start_row);

}  // namespace changeover
