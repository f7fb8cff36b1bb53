#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "changeover/domain.hpp"

namespace changeover {

/// Exogenous series (rates, indices) on the same calendar as the prices.
/// Values may be any finite number.
struct Covariates {
    std::vector<std::string> names;
    std::vector<double> values;  ///< periods x names, row-major

    std::size_t series() const { return names.size(); }
    double at(std::size_t period, std::size_t series_index) const { return values[period * names.size() + series_index]; }
};

/// Aligned historical prices. Labels of `prices` are ISO dates, strictly
/// increasing; covariates, when present, share that calendar.
struct MarketHistory {
    AssetUniverse universe;
    PriceMatrix prices;
    std::optional<Covariates> covariates;

    std::size_t periods() const { return prices.periods(); }
    /// Row holding `date`, or periods() when absent.
    std::size_t row_of(const std::string& date) const;

    /// Throws DataError when calendars disagree or dates are not strictly
    /// increasing ISO dates.
    void validate() const;

    /// Market restricted to the given columns, in that order.
    MarketHistory select_assets(std::span<const std::size_t> columns) const;
};

/// True for YYYY-MM-DD with a plausible month and day.
bool is_iso_date(const std::string& text);

/// Weekday calendar starting Monday 2000-01-03: index 5 is 2000-01-10.
std::string synthetic_date(std::size_t index);

struct LoadOptions {
    std::optional<std::string> first_date;  ///< inclusive
    std::optional<std::string> last_date;   ///< inclusive
    std::size_t max_fill_gap = 3;           ///< longest run of missing cells forward-filled
};

struct LoadReport {
    MarketHistory history;
    std::vector<std::string> dropped;  ///< assets removed for long or leading gaps
};

/// Reads `date,SYM1,SYM2,...` with decimal prices. Empty, "NA" and "NaN"
/// cells count as missing. Throws DataError on malformed files, non-positive
/// prices, or when no asset survives.
LoadReport load_prices(const std::filesystem::path& csv, const LoadOptions& options = {});
LoadReport parse_prices(const std::string& csv_text, const LoadOptions& options = {});

/// Inverse of parse_prices: `date,SYM1,...` with two-decimal prices.
std::string prices_to_csv(const MarketHistory& history);

/// Reads `date,X1,X2,...` covariates (no gaps allowed).
Covariates parse_covariates(const std::string& csv_text, std::vector<std::string>& dates);

/// Joins covariates onto `history` by date, keeping the shared dates only.
/// Throws DataError when the calendars do not intersect.
MarketHistory attach_covariates(const MarketHistory& history, const Covariates& covariates,
                                const std::vector<std::string>& covariate_dates);

enum class BudgetMode {
    independent,  ///< target budget drawn separately from the initial budget
    same,         ///< target budget starts at the initial budget
};

/// Distribution parameters for random scenarios. Ranges are inclusive.
struct ScenarioRanges {
    std::size_t min_assets = 20;
    std::size_t max_assets = 50;
    std::size_t horizon = 30;
    std::size_t lookback = 48;
    Money min_fee = Money::from_cents(200);
    Money max_fee = Money::from_cents(900);
    Money min_budget = Money::from_cents(1'500'000);
    Money max_budget = Money::from_cents(35'000'000);
    BudgetMode budget_mode = BudgetMode::independent;

    void validate() const;
};

/// Everything needed to replay a scenario bit-identically against the same
/// history: the drawn parameters and the realized portfolios.
struct ScenarioSpec {
    std::string id;
    std::uint64_t seed = 0;
    AssetUniverse universe;
    std::string start_date;
    std::size_t horizon = 30;
    Money fee;
    Money initial_budget;
    Money target_budget;
    PortfolioState initial;
    TargetPortfolio target;

    friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

struct Scenario {
    ScenarioSpec spec;
    TransitionInstance instance;
};

/// Greedy random fill: repeatedly buys one share of a uniformly drawn asset
/// among those still affordable until none is. Returns the holdings; the
/// unspent budget is `budget - prices . holdings`.
template <class Rng>
std::vector<std::int64_t> random_fill(std::span<const Money> prices, Money budget, Rng& rng);

/// Draws a scenario from `history`. The target budget is lowered until the
/// direct one-period changeover (target value plus one fee per changed
/// asset) fits the initial value. Pure in (history, ranges, seed).
Scenario generate_scenario(const MarketHistory& history, const ScenarioRanges& ranges, std::uint64_t seed);

/// Rebuilds the instance for a stored spec. Throws DataError when the
/// history lacks the assets, start date or horizon.
TransitionInstance instance_from_spec(const MarketHistory& history, const ScenarioSpec& spec);

/// Column indices of the spec's universe inside `history`.
std::vector<std::size_t> spec_columns(const MarketHistory& history, const ScenarioSpec& spec);

/// Geometric random walk per asset starting between $5 and $100, rounded to
/// cents and floored at one cent, on the synthetic_date calendar. Symbols
/// are A0, A1, ...
MarketHistory random_walk_market(std::size_t assets, std::size_t rows, std::uint64_t seed, double volatility = 0.02);

/// One JSON object per line.
std::string scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const std::string& line);
void write_scenarios(const std::filesystem::path& file, const std::vector<ScenarioSpec>& specs);
std::vector<ScenarioSpec> read_scenarios(const std::filesystem::path& file);

}  // namespace changeover

#include "changeover/detail/random_fill.ipp"
