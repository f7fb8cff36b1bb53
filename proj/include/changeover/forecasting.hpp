#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "changeover/data_ingest.hpp"
#include "changeover/domain.hpp"

namespace changeover {

enum class ForecastMethod { persistence, drift, oracle };

std::string to_string(ForecastMethod method);
ForecastMethod parse_forecast_method(const std::string& text);

struct ForecastConfig {
    std::size_t lookback = 48;
    std::size_t horizon = 1;
    ForecastMethod method = ForecastMethod::drift;

    void validate() const;
};

struct Forecast {
    PriceMatrix prices;         ///< horizon x assets predictions
    std::optional<double> mape;  ///< set when the realized prices are known
};

/// Maps the market up to `current_row` (inclusive) to predictions for rows
/// current_row + 1 .. current_row + horizon. Covariates are available but
/// the baseline methods ignore them. Only the oracle reads past
/// `current_row`.
class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual PriceMatrix predict(const MarketHistory& market, std::size_t current_row, std::size_t horizon) const = 0;
};

/// Every future row equals the last observed row.
class PersistenceForecaster final : public Forecaster {
public:
    explicit PersistenceForecaster(std::size_t lookback = 1) : lookback_(lookback) {}
    PriceMatrix predict(const MarketHistory& market, std::size_t current_row, std::size_t horizon) const override;

private:
    std::size_t lookback_;
};

/// Per-asset least-squares line through the last `lookback` prices,
/// extrapolated, rounded to cents and floored at one cent.
class DriftForecaster final : public Forecaster {
public:
    explicit DriftForecaster(std::size_t lookback) : lookback_(lookback) {}
    PriceMatrix predict(const MarketHistory& market, std::size_t current_row, std::size_t horizon) const override;

private:
    std::size_t lookback_;
};

/// Copies the realized future (testing only).
class OracleForecaster final : public Forecaster {
public:
    PriceMatrix predict(const MarketHistory& market, std::size_t current_row, std::size_t horizon) const override;
};

std::unique_ptr<Forecaster> make_forecaster(const ForecastConfig& config);

/// Predicts with the configured method and fills `mape` whenever the
/// market holds the realized rows. Throws DataError on insufficient history
/// or future.
Forecast forecast(const MarketHistory& market, std::size_t current_row, const ForecastConfig& config);

/// Mean over all cells of |forecast - realized| / realized, times 100.
double mape(const PriceMatrix& forecast, const PriceMatrix& realized);

/// True iff mean_mape > threshold.
bool exclude_scenario(double mean_mape, double threshold = 10.0);

}  // namespace changeover
