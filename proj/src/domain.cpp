#include "changeover/domain.hpp"

#include <algorithm>
#include <unordered_set>

#include "changeover/errors.hpp"

namespace changeover {

AssetUniverse::AssetUniverse(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
    if (symbols_.empty()) {
        throw InvalidArgument("asset universe must contain at least one symbol");
    }
    std::unordered_set<std::string> seen;
    for (const auto& s : symbols_) {
        if (!seen.insert(s).second) {
            throw InvalidArgument("duplicate asset symbol '" + s + "'");
        }
    }
}

std::size_t AssetUniverse::index_of(const std::string& symbol) const {
    auto it = std::find(symbols_.begin(), symbols_.end(), symbol);
    return static_cast<std::size_t>(it - symbols_.begin());
}

PriceMatrix::PriceMatrix(std::size_t assets, std::vector<Money> row_major,
                         std::vector<std::string> labels)
    : assets_(assets), values_(std::move(row_major)), labels_(std::move(labels)) {
    if (assets_ == 0) {
        throw DimensionError("price matrix needs at least one asset column");
    }
    if (values_.size() % assets_ != 0) {
        throw DimensionError("price matrix storage is not a whole number of rows");
    }
    const std::size_t rows = values_.size() / assets_;
    if (labels_.empty()) {
        for (std::size_t r = 0; r < rows; ++r) labels_.push_back("t" + std::to_string(r));
    }
    if (labels_.size() != rows) {
        throw DimensionError("price matrix has " + std::to_string(rows) + " rows but " +
                             std::to_string(labels_.size()) + " labels");
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (values_[k].cents() <= 0) {
            throw InvalidArgument("non-positive price at row " + std::to_string(k / assets_) +
                                  ", column " + std::to_string(k % assets_));
        }
    }
}

PriceMatrix PriceMatrix::from_rows(const std::vector<std::vector<Money>>& rows,
                                   std::vector<std::string> labels) {
    if (rows.empty()) {
        throw DimensionError("price matrix needs at least one row");
    }
    const std::size_t n = rows.front().size();
    std::vector<Money> flat;
    flat.reserve(rows.size() * n);
    for (const auto& r : rows) {
        if (r.size() != n) throw DimensionError("ragged price rows");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return PriceMatrix(n, std::move(flat), std::move(labels));
}

PriceMatrix PriceMatrix::from_decimal_rows(const std::vector<std::vector<double>>& rows,
                                           std::vector<std::string> labels) {
    std::vector<std::vector<Money>> converted;
    converted.reserve(rows.size());
    for (const auto& r : rows) {
        std::vector<Money> row;
        row.reserve(r.size());
        for (double v : r) row.push_back(Money::from_decimal(v));
        converted.push_back(std::move(row));
    }
    return from_rows(converted, std::move(labels));
}

PriceMatrix PriceMatrix::slice(std::size_t first, std::size_t count) const {
    if (first + count > periods() || count == 0) {
        throw DimensionError("price slice [" + std::to_string(first) + ", " +
                             std::to_string(first + count) + ") outside " +
                             std::to_string(periods()) + " rows");
    }
    std::vector<Money> vals(values_.begin() + static_cast<std::ptrdiff_t>(first * assets_),
                            values_.begin() + static_cast<std::ptrdiff_t>((first + count) * assets_));
    std::vector<std::string> labs(labels_.begin() + static_cast<std::ptrdiff_t>(first),
                                  labels_.begin() + static_cast<std::ptrdiff_t>(first + count));
    return PriceMatrix(assets_, std::move(vals), std::move(labs));
}

PriceMatrix PriceMatrix::select_assets(std::span<const std::size_t> columns) const {
    std::vector<Money> vals;
    vals.reserve(periods() * columns.size());
    for (std::size_t r = 0; r < periods(); ++r) {
        for (std::size_t c : columns) {
            if (c >= assets_) throw DimensionError("asset column out of range");
            vals.push_back(at(r, c));
        }
    }
    return PriceMatrix(columns.size(), std::move(vals), labels_);
}

PriceMatrix PriceMatrix::stack(const PriceMatrix& top, const PriceMatrix& bottom) {
    if (top.empty()) return bottom;
    if (bottom.empty()) return top;
    if (top.assets() != bottom.assets()) {
        throw DimensionError("cannot stack price matrices with different asset counts");
    }
    std::vector<Money> vals = top.values_;
    vals.insert(vals.end(), bottom.values_.begin(), bottom.values_.end());
    std::vector<std::string> labs = top.labels_;
    labs.insert(labs.end(), bottom.labels_.begin(), bottom.labels_.end());
    return PriceMatrix(top.assets(), std::move(vals), std::move(labs));
}

Money PriceMatrix::min_in_row(std::size_t period) const {
    auto r = row(period);
    return *std::min_element(r.begin(), r.end());
}

void PortfolioState::validate() const {
    for (std::size_t a = 0; a < holdings.size(); ++a) {
        if (holdings[a] < 0) {
            throw InvalidArgument("negative holdings for asset " + std::to_string(a));
        }
    }
    if (cash.cents() < 0) {
        throw InvalidArgument("negative cash " + cash.to_string());
    }
}

void TargetPortfolio::validate() const {
    for (std::size_t a = 0; a < min_shares.size(); ++a) {
        if (min_shares[a] < 0) {
            throw InvalidArgument("negative target for asset " + std::to_string(a));
        }
    }
}

TradeRow TradeRow::zeros(std::size_t assets) {
    return TradeRow{std::vector<std::int64_t>(assets, 0), std::vector<std::int64_t>(assets, 0),
                    std::vector<std::uint8_t>(assets, 0), std::vector<std::uint8_t>(assets, 0)};
}

std::int64_t TradeRow::executed_flags() const {
    std::int64_t n = 0;
    for (std::size_t a = 0; a < assets(); ++a) n += buy_flags[a] + sell_flags[a];
    return n;
}

bool TradeRow::is_empty() const { return executed_flags() == 0; }

void TradeRow::validate(bool allow_simultaneous) const {
    const std::size_t n = buys.size();
    if (sells.size() != n || buy_flags.size() != n || sell_flags.size() != n) {
        throw DimensionError("trade row vectors have different lengths");
    }
    for (std::size_t a = 0; a < n; ++a) {
        if (buys[a] < 0 || sells[a] < 0) {
            throw InvalidArgument("negative trade magnitude for asset " + std::to_string(a));
        }
        if (buy_flags[a] > 1 || sell_flags[a] > 1) {
            throw InvalidArgument("trade flag is not binary for asset " + std::to_string(a));
        }
        if (buys[a] > 0 && buy_flags[a] == 0) {
            throw InvalidArgument("buy without buy flag for asset " + std::to_string(a));
        }
        if (sells[a] > 0 && sell_flags[a] == 0) {
            throw InvalidArgument("sell without sell flag for asset " + std::to_string(a));
        }
        if (!allow_simultaneous && buy_flags[a] + sell_flags[a] > 1) {
            throw InvalidArgument("buy and sell flagged together for asset " + std::to_string(a));
        }
    }
}

TradePlan TradePlan::zeros(std::size_t periods, std::size_t assets) {
    return TradePlan{std::vector<TradeRow>(periods, TradeRow::zeros(assets))};
}

std::int64_t TradePlan::executed_flags() const {
    std::int64_t n = 0;
    for (const auto& r : rows) n += r.executed_flags();
    return n;
}

void TradePlan::validate(bool allow_simultaneous) const {
    for (const auto& r : rows) r.validate(allow_simultaneous);
}

TransitionInstance::TransitionInstance(AssetUniverse universe, PortfolioState initial,
                                       TargetPortfolio target, std::size_t horizon, Money fee,
                                       PriceMatrix prices)
    : universe_(std::move(universe)),
      initial_(std::move(initial)),
      target_(std::move(target)),
      horizon_(horizon),
      fee_(fee),
      prices_(std::move(prices)) {
    const std::size_t n = universe_.size();
    if (n == 0) throw InvalidArgument("transition instance needs a non-empty universe");
    if (initial_.holdings.size() != n) throw DimensionError("initial holdings length != universe size");
    if (target_.min_shares.size() != n) throw DimensionError("target length != universe size");
    if (prices_.assets() != n) throw DimensionError("price columns != universe size");
    if (horizon_ < 1) throw InvalidArgument("horizon must be at least 1");
    if (prices_.periods() < horizon_ + 1) {
        throw InvalidArgument("price path has " + std::to_string(prices_.periods()) +
                              " rows, horizon " + std::to_string(horizon_) + " needs " +
                              std::to_string(horizon_ + 1));
    }
    if (fee_.cents() < 0) throw InvalidArgument("fee must be non-negative");
    initial_.validate();
    target_.validate();

    // Target must be affordable at current prices: Y_0 . T <= V_0.
    Money target_cost;
    for (std::size_t a = 0; a < n; ++a) target_cost += prices_.at(0, a) * target_.min_shares[a];
    const Money value = initial_value();
    if (target_cost > value) {
        throw InvalidArgument("target portfolio costs " + target_cost.to_string() +
                              " at current prices but the portfolio is worth " + value.to_string());
    }
}

Money TransitionInstance::initial_value() const { return portfolio_value(initial_, prices_.row(0)); }

Money portfolio_value(const PortfolioState& state, std::span<const Money> prices) {
    if (state.holdings.size() != prices.size()) {
        throw DimensionError("holdings length " + std::to_string(state.holdings.size()) +
                             " != price length " + std::to_string(prices.size()));
    }
    Money value = state.cash;
    for (std::size_t a = 0; a < prices.size(); ++a) {
        if (prices[a].cents() <= 0) throw InvalidArgument("non-positive price");
        value += prices[a] * state.holdings[a];
    }
    return value;
}

PortfolioState apply_trades(const PortfolioState& state, const TradeRow& trades,
                            std::span<const Money> prices, Money fee) {
    const std::size_t n = state.holdings.size();
    if (trades.assets() != n || prices.size() != n) {
        throw DimensionError("trade row, prices and holdings must have equal length");
    }
    trades.validate(true);

    PortfolioState next = state;
    for (std::size_t a = 0; a < n; ++a) {
        const std::int64_t net = trades.buys[a] - trades.sells[a];
        next.holdings[a] += net;
        next.cash -= prices[a] * net;
        if (next.holdings[a] < 0) {
            throw InfeasibleTradeError("no-short-selling violated: asset " + std::to_string(a) +
                                       " would hold " + std::to_string(next.holdings[a]) + " shares");
        }
    }
    next.cash -= fee * trades.executed_flags();
    if (next.cash.cents() < 0) {
        throw InfeasibleTradeError("no-leverage violated: cash would be " + next.cash.to_string());
    }
    return next;
}

bool satisfies_target(const PortfolioState& state, const TargetPortfolio& target) {
    if (state.holdings.size() != target.min_shares.size()) {
        throw DimensionError("holdings and target lengths differ");
    }
    for (std::size_t a = 0; a < state.holdings.size(); ++a) {
        if (state.holdings[a] < target.min_shares[a]) return false;
    }
    return true;
}

Money direct_changeover_cost(const PortfolioState& state, const TargetPortfolio& target,
                             std::span<const Money> prices, Money fee) {
    if (state.holdings.size() != target.min_shares.size() || prices.size() != target.min_shares.size()) {
        throw DimensionError("holdings, target and prices lengths differ");
    }
    Money cost;
    for (std::size_t a = 0; a < prices.size(); ++a) {
        cost += prices[a] * target.min_shares[a];
        if (state.holdings[a] != target.min_shares[a]) cost += fee;
    }
    return cost;
}

}  // namespace changeover
