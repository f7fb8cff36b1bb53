#include "changeover/forecasting.hpp"

#include <cmath>

#include "changeover/errors.hpp"

namespace changeover {

std::string to_string(ForecastMethod method) {
    switch (method) {
        case ForecastMethod::persistence: return "persistence";
        case ForecastMethod::drift: return "drift";
        case ForecastMethod::oracle: return "oracle";
    }
    return "unknown";
}

ForecastMethod parse_forecast_method(const std::string& text) {
    if (text == "persistence") return ForecastMethod::persistence;
    if (text == "drift") return ForecastMethod::drift;
    if (text == "oracle") return ForecastMethod::oracle;
    throw InvalidArgument("unknown forecaster '" + text + "' (expected persistence, drift or oracle)");
}

void ForecastConfig::validate() const {
    if (lookback < 1) throw InvalidArgument("forecast lookback must be at least 1");
    if (horizon < 1) throw InvalidArgument("forecast horizon must be at least 1");
}

namespace {

void check_history(const MarketHistory& market, std::size_t current_row, std::size_t lookback) {
    if (current_row >= market.periods()) throw DataError("current row is past the end of the market");
    if (current_row + 1 < lookback) {
        throw DataError("forecast needs " + std::to_string(lookback) + " rows of history, have " +
                        std::to_string(current_row + 1));
    }
}

std::vector<std::string> future_labels(const MarketHistory& market, std::size_t current_row, std::size_t horizon) {
    std::vector<std::string> labels;
    for (std::size_t h = 1; h <= horizon; ++h) labels.push_back(market.prices.label(current_row) + "+" + std::to_string(h));
    return labels;
}

}  // namespace

PriceMatrix PersistenceForecaster::predict(const MarketHistory& market, std::size_t current_row,
                                           std::size_t horizon) const {
    check_history(market, current_row, lookback_);
    const auto last = market.prices.row(current_row);
    std::vector<Money> values;
    for (std::size_t h = 0; h < horizon; ++h) values.insert(values.end(), last.begin(), last.end());
    return PriceMatrix(market.prices.assets(), std::move(values), future_labels(market, current_row, horizon));
}

PriceMatrix DriftForecaster::predict(const MarketHistory& market, std::size_t current_row, std::size_t horizon) const {
    check_history(market, current_row, lookback_);
    const std::size_t n = market.prices.assets();
    const std::size_t first = current_row + 1 - lookback_;
    const long double L = static_cast<long double>(lookback_);
    const long double x_mean = (L - 1.0L) / 2.0L;
    long double sxx = 0.0L;
    for (std::size_t i = 0; i < lookback_; ++i) sxx += (i - x_mean) * (i - x_mean);

    std::vector<Money> values(horizon * n);
    for (std::size_t a = 0; a < n; ++a) {
        long double y_mean = 0.0L;
        for (std::size_t i = 0; i < lookback_; ++i) y_mean += market.prices.at(first + i, a).cents();
        y_mean /= L;
        long double sxy = 0.0L;
        for (std::size_t i = 0; i < lookback_; ++i) {
            sxy += (i - x_mean) * (market.prices.at(first + i, a).cents() - y_mean);
        }
        const long double slope = sxx > 0.0L ? sxy / sxx : 0.0L;
        for (std::size_t h = 1; h <= horizon; ++h) {
            const long double x = L - 1.0L + static_cast<long double>(h);
            const long long cents = std::llround(y_mean + slope * (x - x_mean));
            values[(h - 1) * n + a] = Money::from_cents(std::max<long long>(cents, 1));
        }
    }
    return PriceMatrix(n, std::move(values), future_labels(market, current_row, horizon));
}

PriceMatrix OracleForecaster::predict(const MarketHistory& market, std::size_t current_row, std::size_t horizon) const {
    if (current_row + horizon >= market.periods()) throw DataError("oracle forecaster needs the realized future rows");
    return market.prices.slice(current_row + 1, horizon);
}

std::unique_ptr<Forecaster> make_forecaster(const ForecastConfig& config) {
    config.validate();
    switch (config.method) {
        case ForecastMethod::persistence: return std::make_unique<PersistenceForecaster>(config.lookback);
        case ForecastMethod::drift: return std::make_unique<DriftForecaster>(config.lookback);
        case ForecastMethod::oracle: return std::make_unique<OracleForecaster>();
    }
    throw InvalidArgument("unknown forecast method");
}

Forecast forecast(const MarketHistory& market, std::size_t current_row, const ForecastConfig& config) {
    Forecast out{make_forecaster(config)->predict(market, current_row, config.horizon), std::nullopt};
    if (current_row + config.horizon < market.periods()) {
        out.mape = mape(out.prices, market.prices.slice(current_row + 1, config.horizon));
    }
    return out;
}

double mape(const PriceMatrix& forecast, const PriceMatrix& realized) {
    if (forecast.periods() != realized.periods() || forecast.assets() != realized.assets()) {
        throw DimensionError("forecast and realized shapes differ");
    }
    const std::size_t cells = forecast.periods() * forecast.assets();
    if (cells == 0) return 0.0;
    long double total = 0.0L;
    for (std::size_t r = 0; r < forecast.periods(); ++r) {
        for (std::size_t a = 0; a < forecast.assets(); ++a) {
            const long double y = realized.at(r, a).cents();
            total += std::fabs(static_cast<long double>(forecast.at(r, a).cents()) - y) / y;
        }
    }
    return static_cast<double>(total / static_cast<long double>(cells) * 100.0L);
}

bool exclude_scenario(double mean_mape, double threshold) {
    if (!(mean_mape >= 0.0)) throw InvalidArgument("MAPE must be non-negative");
    return mean_mape > threshold;
}

}  // namespace changeover
