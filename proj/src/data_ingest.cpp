#include "changeover/data_ingest.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "changeover/errors.hpp"

namespace changeover {

using nlohmann::json;

std::size_t MarketHistory::row_of(const std::string& date) const {
    const auto& labels = prices.labels();
    const auto it = std::lower_bound(labels.begin(), labels.end(), date);
    if (it == labels.end() || *it != date) return periods();
    return static_cast<std::size_t>(it - labels.begin());
}

void MarketHistory::validate() const {
    if (universe.size() != prices.assets()) throw DataError("universe and price columns differ");
    const auto& labels = prices.labels();
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (!is_iso_date(labels[r])) throw DataError("not an ISO date: '" + labels[r] + "'");
        if (r > 0 && labels[r] <= labels[r - 1]) throw DataError("dates not strictly increasing at " + labels[r]);
    }
    if (covariates) {
        if (covariates->values.size() != covariates->series() * periods()) {
            throw DataError("covariate calendar differs from price calendar");
        }
    }
}

MarketHistory MarketHistory::select_assets(std::span<const std::size_t> columns) const {
    std::vector<std::string> symbols;
    for (std::size_t c : columns) symbols.push_back(universe.symbol(c));
    return MarketHistory{AssetUniverse(std::move(symbols)), prices.select_assets(columns), covariates};
}

bool is_iso_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (text[i] < '0' || text[i] > '9') return false;
    }
    const int month = std::stoi(text.substr(5, 2));
    const int day = std::stoi(text.substr(8, 2));
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

std::string synthetic_date(std::size_t index) {
    using namespace std::chrono;
    const sys_days day = sys_days{year{2000} / January / 3} + days{static_cast<long>(index / 5 * 7 + index % 5)};
    const year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool is_missing(const std::string& cell) {
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null";
}

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::string> dates;
    std::vector<std::vector<std::string>> cells;  // row-major, without the date column
};

RawTable read_table(const std::string& text) {
    RawTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (table.header.empty()) {
            if (fields.size() < 2) throw DataError("header must name a date column and at least one series");
            table.header.assign(fields.begin() + 1, fields.end());
            continue;
        }
        if (fields.size() != table.header.size() + 1) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size() + 1) +
                            " fields, found " + std::to_string(fields.size()));
        }
        if (!is_iso_date(fields[0])) throw DataError("line " + std::to_string(line_no) + ": bad date '" + fields[0] + "'");
        if (!table.dates.empty() && fields[0] <= table.dates.back()) {
            throw DataError("line " + std::to_string(line_no) + ": dates must be strictly increasing");
        }
        table.dates.push_back(fields[0]);
        table.cells.emplace_back(fields.begin() + 1, fields.end());
    }
    if (table.header.empty()) throw DataError("empty price file");
    if (table.dates.empty()) throw DataError("price file has no data rows");
    return table;
}

}  // namespace

LoadReport parse_prices(const std::string& csv_text, const LoadOptions& options) {
    RawTable table = read_table(csv_text);
    std::size_t first = 0;
    std::size_t last = table.dates.size();
    if (options.first_date) {
        first = static_cast<std::size_t>(std::lower_bound(table.dates.begin(), table.dates.end(), *options.first_date) -
                                         table.dates.begin());
    }
    if (options.last_date) {
        last = static_cast<std::size_t>(std::upper_bound(table.dates.begin(), table.dates.end(), *options.last_date) -
                                        table.dates.begin());
    }
    if (first >= last) throw DataError("no price rows in the requested date range");

    const std::size_t rows = last - first;
    const std::size_t cols = table.header.size();
    LoadReport report;
    std::vector<std::size_t> kept;
    std::vector<std::vector<Money>> columns;
    for (std::size_t c = 0; c < cols; ++c) {
        std::vector<Money> series;
        std::optional<Money> previous;
        std::size_t gap = 0;
        bool drop = false;
        for (std::size_t r = first; r < last; ++r) {
            const std::string& cell = table.cells[r][c];
            if (is_missing(cell)) {
                ++gap;
                if (!previous || gap > options.max_fill_gap) {
                    drop = true;
                    break;
                }
                series.push_back(*previous);
                continue;
            }
            Money price;
            try {
                price = Money::parse(cell);
            } catch (const DataError&) {
                throw DataError("unparseable price '" + cell + "' for " + table.header[c] + " on " + table.dates[r]);
            }
            if (price <= Money{}) {
                throw DataError("non-positive price for " + table.header[c] + " on " + table.dates[r]);
            }
            gap = 0;
            previous = price;
            series.push_back(price);
        }
        if (drop) {
            report.dropped.push_back(table.header[c]);
        } else {
            kept.push_back(c);
            columns.push_back(std::move(series));
        }
    }
    if (kept.empty()) throw DataError("every asset has an unfillable gap; nothing left to load");

    std::vector<Money> values(rows * kept.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < kept.size(); ++j) values[r * kept.size() + j] = columns[j][r];
    }
    std::vector<std::string> symbols;
    for (std::size_t c : kept) symbols.push_back(table.header[c]);
    std::vector<std::string> dates(table.dates.begin() + static_cast<std::ptrdiff_t>(first),
                                   table.dates.begin() + static_cast<std::ptrdiff_t>(last));
    report.history = MarketHistory{AssetUniverse(std::move(symbols)), PriceMatrix(kept.size(), std::move(values), dates),
                                   std::nullopt};
    report.history.validate();
    return report;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

LoadReport load_prices(const std::filesystem::path& csv, const LoadOptions& options) {
    return parse_prices(read_file(csv), options);
}

std::string prices_to_csv(const MarketHistory& history) {
    std::string out = "date";
    for (const auto& s : history.universe.symbols()) out += "," + s;
    out += '\n';
    for (std::size_t r = 0; r < history.periods(); ++r) {
        out += history.prices.label(r);
        for (const Money& p : history.prices.row(r)) out += "," + p.to_string();
        out += '\n';
    }
    return out;
}

Covariates parse_covariates(const std::string& csv_text, std::vector<std::string>& dates) {
    RawTable table = read_table(csv_text);
    Covariates cov;
    cov.names = table.header;
    for (std::size_t r = 0; r < table.dates.size(); ++r) {
        for (std::size_t c = 0; c < cov.names.size(); ++c) {
            const std::string& cell = table.cells[r][c];
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (is_missing(cell) || used != cell.size() || !std::isfinite(value)) {
                throw DataError("bad covariate '" + cell + "' for " + cov.names[c] + " on " + table.dates[r]);
            }
            cov.values.push_back(value);
        }
    }
    dates = std::move(table.dates);
    return cov;
}

MarketHistory attach_covariates(const MarketHistory& history, const Covariates& covariates,
                                const std::vector<std::string>& covariate_dates) {
    if (covariates.values.size() != covariates.series() * covariate_dates.size()) {
        throw DimensionError("covariate values do not match their dates");
    }
    std::vector<std::size_t> price_rows;
    Covariates joined{covariates.names, {}};
    std::size_t j = 0;
    for (std::size_t r = 0; r < history.periods(); ++r) {
        const std::string& date = history.prices.label(r);
        while (j < covariate_dates.size() && covariate_dates[j] < date) ++j;
        if (j < covariate_dates.size() && covariate_dates[j] == date) {
            price_rows.push_back(r);
            for (std::size_t c = 0; c < covariates.series(); ++c) joined.values.push_back(covariates.at(j, c));
        }
    }
    if (price_rows.empty()) throw DataError("price and covariate calendars do not intersect");
    std::vector<Money> values;
    std::vector<std::string> labels;
    for (std::size_t r : price_rows) {
        const auto row = history.prices.row(r);
        values.insert(values.end(), row.begin(), row.end());
        labels.push_back(history.prices.label(r));
    }
    MarketHistory out{history.universe, PriceMatrix(history.prices.assets(), std::move(values), std::move(labels)),
                      std::move(joined)};
    out.validate();
    return out;
}

void ScenarioRanges::validate() const {
    if (min_assets < 1 || min_assets > max_assets) throw InvalidArgument("bad universe size range");
    if (horizon < 1) throw InvalidArgument("horizon must be at least 1");
    if (lookback < 1) throw InvalidArgument("lookback must be at least 1");
    if (min_fee < Money{} || min_fee > max_fee) throw InvalidArgument("bad fee range");
    if (min_budget <= Money{} || min_budget > max_budget) throw InvalidArgument("bad budget range");
}

namespace {

Money draw_money(std::mt19937_64& rng, Money lo, Money hi) {
    std::uniform_int_distribution<std::int64_t> d(lo.cents(), hi.cents());
    return Money::from_cents(d(rng));
}

constexpr int kTargetRetries = 32;
constexpr int kBudgetRetries = 1000;

}  // namespace

Scenario generate_scenario(const MarketHistory& history, const ScenarioRanges& ranges, std::uint64_t seed) {
    ranges.validate();
    const std::size_t n_total = history.prices.assets();
    if (n_total < ranges.min_assets) {
        throw DataError("history has " + std::to_string(n_total) + " assets, fewer than the minimum universe size " +
                        std::to_string(ranges.min_assets));
    }
    if (history.periods() < ranges.lookback + ranges.horizon + 1) {
        throw DataError("history has " + std::to_string(history.periods()) + " rows; need at least lookback + horizon + 1 = " +
                        std::to_string(ranges.lookback + ranges.horizon + 1));
    }
    std::mt19937_64 rng(seed);
    const std::size_t max_n = std::min(ranges.max_assets, n_total);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(ranges.min_assets, max_n)(rng);

    std::vector<std::size_t> columns(n_total);
    for (std::size_t i = 0; i < n_total; ++i) columns[i] = i;
    std::shuffle(columns.begin(), columns.end(), rng);
    columns.resize(n);
    std::sort(columns.begin(), columns.end());

    const std::size_t start = std::uniform_int_distribution<std::size_t>(
        ranges.lookback, history.periods() - ranges.horizon - 1)(rng);
    const Money fee = draw_money(rng, ranges.min_fee, ranges.max_fee);

    const PriceMatrix prices = history.prices.select_assets(columns);
    const auto y0 = prices.row(start);

    for (int round = 0; round < kBudgetRetries; ++round) {
        const Money initial_budget = draw_money(rng, ranges.min_budget, ranges.max_budget);
        const auto initial_shares = random_fill(y0, initial_budget, rng);
        Money invested;
        for (std::size_t a = 0; a < n; ++a) invested += y0[a] * initial_shares[a];
        const PortfolioState initial{initial_shares, initial_budget - invested};

        Money target_budget = ranges.budget_mode == BudgetMode::same
                                  ? initial_budget
                                  : draw_money(rng, ranges.min_budget, ranges.max_budget);
        for (int attempt = 0; attempt <= kTargetRetries; ++attempt) {
            const TargetPortfolio target{random_fill(y0, target_budget, rng)};
            if (direct_changeover_cost(initial, target, y0, fee) <= initial_budget) {
                ScenarioSpec spec;
                spec.id = "s" + std::to_string(seed);
                spec.seed = seed;
                std::vector<std::string> symbols;
                for (std::size_t c : columns) symbols.push_back(history.universe.symbol(c));
                spec.universe = AssetUniverse(std::move(symbols));
                spec.start_date = history.prices.label(start);
                spec.horizon = ranges.horizon;
                spec.fee = fee;
                spec.initial_budget = initial_budget;
                spec.target_budget = target_budget;
                spec.initial = initial;
                spec.target = target;
                TransitionInstance instance = instance_from_spec(history, spec);
                return Scenario{std::move(spec), std::move(instance)};
            }
            if (target_budget <= ranges.min_budget) break;
            target_budget = draw_money(rng, ranges.min_budget, target_budget - Money::from_cents(1));
        }
    }
    throw DataError("could not draw an affordable target portfolio for seed " + std::to_string(seed) +
                    "; widen the budget range or lower the fee range");
}

MarketHistory random_walk_market(std::size_t assets, std::size_t rows, std::uint64_t seed, double volatility) {
    if (assets < 1 || rows < 1) throw InvalidArgument("random walk market needs at least one asset and one row");
    if (!(volatility >= 0.0)) throw InvalidArgument("volatility must be non-negative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> start(5.0, 100.0);
    std::uniform_real_distribution<double> drift(-0.002, 0.002);
    std::normal_distribution<double> shock(0.0, 1.0);
    std::vector<double> level(assets);
    std::vector<double> mu(assets);
    for (std::size_t a = 0; a < assets; ++a) {
        level[a] = start(rng);
        mu[a] = drift(rng);
    }
    std::vector<Money> values;
    values.reserve(assets * rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t a = 0; a < assets; ++a) {
            if (r > 0) level[a] *= std::exp(mu[a] + volatility * shock(rng));
            values.push_back(Money::from_cents(std::max<long long>(std::llround(level[a] * 100.0), 1)));
        }
    }
    std::vector<std::string> symbols;
    for (std::size_t a = 0; a < assets; ++a) symbols.push_back("A" + std::to_string(a));
    std::vector<std::string> labels;
    for (std::size_t r = 0; r < rows; ++r) labels.push_back(synthetic_date(r));
    MarketHistory m{AssetUniverse(std::move(symbols)), PriceMatrix(assets, std::move(values), std::move(labels)),
                    std::nullopt};
    m.validate();
    return m;
}

std::vector<std::size_t> spec_columns(const MarketHistory& history, const ScenarioSpec& spec) {
    std::vector<std::size_t> columns;
    for (const auto& symbol : spec.universe.symbols()) {
        const std::size_t c = history.universe.index_of(symbol);
        if (c == history.universe.size()) throw DataError("history lacks asset " + symbol);
        columns.push_back(c);
    }
    return columns;
}

TransitionInstance instance_from_spec(const MarketHistory& history, const ScenarioSpec& spec) {
    const auto columns = spec_columns(history, spec);
    const std::size_t start = history.row_of(spec.start_date);
    if (start == history.periods()) throw DataError("history lacks start date " + spec.start_date);
    if (start + spec.horizon >= history.periods()) {
        throw DataError("history ends before " + spec.start_date + " + " + std::to_string(spec.horizon) + " periods");
    }
    PriceMatrix prices = history.prices.select_assets(columns).slice(start, spec.horizon + 1);
    return TransitionInstance(spec.universe, spec.initial, spec.target, spec.horizon, spec.fee, std::move(prices));
}

std::string scenario_to_json(const ScenarioSpec& spec) {
    json j;
    j["id"] = spec.id;
    j["seed"] = spec.seed;
    j["assets"] = spec.universe.symbols();
    j["start_date"] = spec.start_date;
    j["horizon"] = spec.horizon;
    j["fee"] = spec.fee.to_string();
    j["initial_budget"] = spec.initial_budget.to_string();
    j["target_budget"] = spec.target_budget.to_string();
    j["initial_shares"] = spec.initial.holdings;
    j["initial_cash"] = spec.initial.cash.to_string();
    j["target_shares"] = spec.target.min_shares;
    return j.dump();
}

ScenarioSpec scenario_from_json(const std::string& line) {
    try {
        const json j = json::parse(line);
        ScenarioSpec spec;
        spec.id = j.at("id").get<std::string>();
        spec.seed = j.at("seed").get<std::uint64_t>();
        spec.universe = AssetUniverse(j.at("assets").get<std::vector<std::string>>());
        spec.start_date = j.at("start_date").get<std::string>();
        spec.horizon = j.at("horizon").get<std::size_t>();
        spec.fee = Money::parse(j.at("fee").get<std::string>());
        spec.initial_budget = Money::parse(j.at("initial_budget").get<std::string>());
        spec.target_budget = Money::parse(j.at("target_budget").get<std::string>());
        spec.initial.holdings = j.at("initial_shares").get<std::vector<std::int64_t>>();
        spec.initial.cash = Money::parse(j.at("initial_cash").get<std::string>());
        spec.target.min_shares = j.at("target_shares").get<std::vector<std::int64_t>>();
        if (spec.initial.holdings.size() != spec.universe.size() || spec.target.min_shares.size() != spec.universe.size()) {
            throw DataError("scenario " + spec.id + ": share vectors do not match the asset list");
        }
        spec.initial.validate();
        spec.target.validate();
        return spec;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad scenario record: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("bad scenario record: ") + e.what());
    }
}

void write_scenarios(const std::filesystem::path& file, const std::vector<ScenarioSpec>& specs) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    for (const auto& spec : specs) out << scenario_to_json(spec) << '\n';
    if (!out) throw DataError("write failed for " + file.string());
}

std::vector<ScenarioSpec> read_scenarios(const std::filesystem::path& file) {
    std::istringstream in(read_file(file));
    std::vector<ScenarioSpec> specs;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        specs.push_back(scenario_from_json(line));
    }
    return specs;
}

}  // namespace changeover
