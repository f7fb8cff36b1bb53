#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "changeover/money.hpp"

namespace changeover {

/// Ordered set of asset identifiers. Index order is fixed for the lifetime
/// of every object that refers to it.
class AssetUniverse {
public:
    AssetUniverse() = default;
    explicit AssetUniverse(std::vector<std::string> symbols);

    std::size_t size() const { return symbols_.size(); }
    const std::vector<std::string>& symbols() const { return symbols_; }
    const std::string& symbol(std::size_t i) const { return symbols_.at(i); }

    /// Returns size() when the symbol is absent.
    std::size_t index_of(const std::string& symbol) const;

    friend bool operator==(const AssetUniverse&, const AssetUniverse&) = default;

private:
    std::vector<std::string> symbols_;
};

/// Dense periods x assets matrix of strictly positive prices with one label
/// per period (ISO dates for historical data, "t+k" for forecasts).
class PriceMatrix {
public:
    PriceMatrix() = default;
    PriceMatrix(std::size_t assets, std::vector<Money> row_major, std::vector<std::string> labels);

    static PriceMatrix from_rows(const std::vector<std::vector<Money>>& rows,
                                 std::vector<std::string> labels = {});
    /// Convenience for tests and bindings: decimal prices rounded to cents.
    static PriceMatrix from_decimal_rows(const std::vector<std::vector<double>>& rows,
                                         std::vector<std::string> labels = {});

    std::size_t periods() const { return labels_.size(); }
    std::size_t assets() const { return assets_; }
    bool empty() const { return labels_.empty(); }

    Money at(std::size_t period, std::size_t asset) const { return values_[period * assets_ + asset]; }
    std::span<const Money> row(std::size_t period) const {
        return {values_.data() + period * assets_, assets_};
    }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(std::size_t period) const { return labels_.at(period); }

    /// Rows [first, first + count).
    PriceMatrix slice(std::size_t first, std::size_t count) const;
    /// Columns in the given order.
    PriceMatrix select_assets(std::span<const std::size_t> columns) const;
    /// Rows of `top` followed by rows of `bottom`; asset counts must match.
    static PriceMatrix stack(const PriceMatrix& top, const PriceMatrix& bottom);

    Money min_in_row(std::size_t period) const;

    friend bool operator==(const PriceMatrix&, const PriceMatrix&) = default;

private:
    std::size_t assets_ = 0;
    std::vector<Money> values_;
    std::vector<std::string> labels_;
};

/// Whole-share holdings plus cash at one point in time.
struct PortfolioState {
    std::vector<std::int64_t> holdings;
    Money cash;

    /// Throws InvalidArgument on negative holdings or cash.
    void validate() const;

    friend bool operator==(const PortfolioState&, const PortfolioState&) = default;
};

struct TargetPortfolio {
    std::vector<std::int64_t> min_shares;

    void validate() const;

    friend bool operator==(const TargetPortfolio&, const TargetPortfolio&) = default;
};

/// One period of a trade plan: buy/sell magnitudes and their execution flags.
struct TradeRow {
    std::vector<std::int64_t> buys;
    std::vector<std::int64_t> sells;
    std::vector<std::uint8_t> buy_flags;
    std::vector<std::uint8_t> sell_flags;

    static TradeRow zeros(std::size_t assets);

    std::size_t assets() const { return buys.size(); }
    /// Number of raised flags, i.e. the number of fees charged.
    std::int64_t executed_flags() const;
    bool is_empty() const;
    /// Throws InvalidArgument when a magnitude is negative, a positive
    /// magnitude lacks its flag, or both flags are raised on one asset.
    void validate(bool allow_simultaneous = false) const;

    friend bool operator==(const TradeRow&, const TradeRow&) = default;
};

/// Per-period trades over the remaining horizon; row 0 is the current period.
struct TradePlan {
    std::vector<TradeRow> rows;

    static TradePlan zeros(std::size_t periods, std::size_t assets);

    std::size_t periods() const { return rows.size(); }
    std::int64_t executed_flags() const;
    void validate(bool allow_simultaneous = false) const;

    friend bool operator==(const TradePlan&, const TradePlan&) = default;
};

/// A single solvable changeover problem.
///
/// `prices` row 0 holds the current (known) prices and rows 1..horizon the
/// realized path. Trading happens in periods 0..horizon-1; the terminal
/// portfolio is valued at row `horizon`.
class TransitionInstance {
public:
    TransitionInstance(AssetUniverse universe, PortfolioState initial, TargetPortfolio target,
                       std::size_t horizon, Money fee, PriceMatrix prices);

    const AssetUniverse& universe() const { return universe_; }
    const PortfolioState& initial() const { return initial_; }
    const TargetPortfolio& target() const { return target_; }
    std::size_t horizon() const { return horizon_; }
    Money fee() const { return fee_; }
    const PriceMatrix& prices() const { return prices_; }
    std::size_t assets() const { return universe_.size(); }

    /// V_0 at prices row 0.
    Money initial_value() const;

private:
    AssetUniverse universe_;
    PortfolioState initial_;
    TargetPortfolio target_;
    std::size_t horizon_;
    Money fee_;
    PriceMatrix prices_;
};

/// dot(holdings, prices) + cash.
Money portfolio_value(const PortfolioState& state, std::span<const Money> prices);

/// Executes one trade row at the given prices, charging `fee` per raised flag.
/// Throws InfeasibleTradeError naming the violated constraint when the
/// result would hold negative shares or negative cash.
PortfolioState apply_trades(const PortfolioState& state, const TradeRow& trades,
                            std::span<const Money> prices, Money fee);

bool satisfies_target(const PortfolioState& state, const TargetPortfolio& target);

/// Cost of the cheapest direct changeover at `prices`: buy every deficit and
/// pay one fee per asset whose holdings differ from the target. Used to
/// check that a generated target is reachable in a single period.
Money direct_changeover_cost(const PortfolioState& state, const TargetPortfolio& target,
                             std::span<const Money> prices, Money fee);

}  // namespace changeover
