#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "changeover/domain.hpp"
#include "changeover/milp.hpp"

namespace changeover {

enum class PolicyKind { base, directional, penalized, naive };

/// Which compact policy to build. `penalty` is a fraction of traded value
/// (0.25 means 25%) and only affects PolicyKind::penalized.
struct PolicyConfig {
    PolicyKind kind = PolicyKind::directional;
    double penalty = 0.0;

    /// Report label: Naive, Directional, DirP_0, DirP_25, DirP_500, Base.
    std::string name() const;
};

/// Everything one policy solve sees: the live state and the price path
/// [Y_t, forecast_{t+1..T}]. Trading periods are rows 0..periods()-1; the
/// last row values the terminal portfolio.
struct PolicyInputs {
    PriceMatrix path;
    PortfolioState state;
    TargetPortfolio target;
    Money fee;

    std::size_t periods() const { return path.periods() - 1; }
    std::size_t assets() const { return path.assets(); }

    /// Perfect-information inputs at t = 0 (path = realized prices).
    static PolicyInputs from_instance(const TransitionInstance& instance);
};

/// Assets that may only be bought (holdings below target) and those that
/// may only be sold (the rest).
struct DirectionalPartition {
    std::vector<std::uint8_t> buy_set;  ///< 1 when holdings < target

    bool may_buy(std::size_t a) const { return buy_set[a] != 0; }
    bool may_sell(std::size_t a) const { return buy_set[a] == 0; }
};

DirectionalPartition partition_assets(const PortfolioState& state, const TargetPortfolio& target);

/// Per-period bounds on accessible portfolio value (currency units) and on
/// shares traded in one asset.
struct BigMSchedule {
    std::vector<double> value_bound;
    std::vector<std::int64_t> share_cap;
};

/// Value bound U: U_0 = V, U_k = V * prod_{i=1..k} max(1, max_a Y_i,a / Y_{i-1,a});
/// share cap M_k = ceil(U_k / min_a Y_k,a), at least 1. Computed for
/// periods 0..periods-1 of `path`.
BigMSchedule compute_big_m(const PriceMatrix& path, Money current_value, std::size_t periods);

/// Variable ids of the trade block of a policy model, laid out
/// period-major (index = period * assets + asset).
struct TradeVariables {
    std::size_t periods = 0;
    std::size_t assets = 0;
    std::vector<milp::VarId> buy;
    std::vector<milp::VarId> sell;
    std::vector<milp::VarId> buy_flag;
    std::vector<milp::VarId> sell_flag;

    std::size_t cell(std::size_t period, std::size_t asset) const { return period * assets + asset; }
};

/// A built policy MILP. The model's objective is in cents and includes a
/// tiny per-flag tie-break; `reported_objective` is the same objective
/// without it.
struct PolicyModel {
    milp::MilpModel model;
    TradeVariables vars;
    milp::LinearExpr reported_objective;
    BigMSchedule big_m;
    bool allow_simultaneous = false;  ///< buy and sell of one asset in one period
};

struct BaseOptions {
    bool one_action_per_asset = true;  ///< w+ + w- <= 1
    bool once_per_direction = false;   ///< sum_t w+ <= 1 and sum_t w- <= 1 per asset
};

PolicyModel build_base(const PolicyInputs& inputs, const BaseOptions& options = {});
PolicyModel build_directional(const PolicyInputs& inputs, const DirectionalPartition& partition);
PolicyModel build_penalized(const PolicyInputs& inputs, const DirectionalPartition& partition, double penalty);
/// Single-period changeover at path row 0; the target must hold after it.
PolicyModel build_naive(const PolicyInputs& inputs);

/// Dispatches on config.kind, computing the partition from inputs.state.
PolicyModel build_policy(const PolicyConfig& config, const PolicyInputs& inputs);

/// Rounds trade variables to integers (tolerance 1e-6) and checks the trade
/// plan invariants. Throws DecodeError on any violation.
TradePlan decode(const milp::SolveOutcome& outcome, const PolicyModel& policy);

struct PolicySolution {
    milp::SolveOutcome outcome;
    TradePlan plan;
    double objective = 0.0;  ///< reported objective in currency units
};

/// Solves and decodes. Infeasibility is raised as InfeasibleTargetError
/// (the target constraint P_T >= target cannot be met); backend errors as
/// SolverError.
PolicySolution solve_policy(const PolicyModel& policy, const milp::SolveSettings& settings = {});

/// Value of trades against the partition: sells of buy-set assets plus buys
/// of sell-set assets, priced at the path row of each period.
Money wrong_direction_value(const TradePlan& plan, const PriceMatrix& path, const DirectionalPartition& partition);

}  // namespace changeover
