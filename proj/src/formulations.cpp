#include "changeover/formulations.hpp"

#include <algorithm>
#include <cmath>

#include "changeover/errors.hpp"
#include "policy_skeleton.hpp"

namespace changeover {

using milp::LinearExpr;
using milp::RowSense;
using milp::VarId;

namespace {

std::string cell_suffix(std::size_t period, std::size_t asset) {
    return std::to_string(period) + "_" + std::to_string(asset);
}

std::string percent_label(double penalty) {
    const double pct = penalty * 100.0;
    const double rounded = std::round(pct);
    if (std::abs(pct - rounded) < 1e-9) return std::to_string(static_cast<long long>(rounded));
    std::string s = std::to_string(pct);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

void require_periods(const PolicyInputs& inputs) {
    if (inputs.path.periods() < 2) {
        throw InvalidArgument("policy price path needs a current row and at least one future row");
    }
    if (inputs.state.holdings.size() != inputs.assets() || inputs.target.min_shares.size() != inputs.assets()) {
        throw DimensionError("state, target and price path disagree on the number of assets");
    }
}

}  // namespace

std::string PolicyConfig::name() const {
    switch (kind) {
        case PolicyKind::base: return "Base";
        case PolicyKind::directional: return "Directional";
        case PolicyKind::penalized: return "DirP_" + percent_label(penalty);
        case PolicyKind::naive: return "Naive";
    }
    return "Unknown";
}

PolicyInputs PolicyInputs::from_instance(const TransitionInstance& instance) {
    return PolicyInputs{instance.prices().slice(0, instance.horizon() + 1), instance.initial(), instance.target(),
                        instance.fee()};
}

DirectionalPartition partition_assets(const PortfolioState& state, const TargetPortfolio& target) {
    if (state.holdings.size() != target.min_shares.size()) {
        throw DimensionError("holdings and target lengths differ");
    }
    DirectionalPartition p;
    p.buy_set.resize(state.holdings.size());
    for (std::size_t a = 0; a < state.holdings.size(); ++a) {
        p.buy_set[a] = state.holdings[a] < target.min_shares[a] ? 1 : 0;
    }
    return p;
}

BigMSchedule compute_big_m(const PriceMatrix& path, Money current_value, std::size_t periods) {
    if (periods == 0 || periods > path.periods()) {
        throw InvalidArgument("big-M needs 1.." + std::to_string(path.periods()) + " periods");
    }
    if (current_value.cents() < 0) throw InvalidArgument("portfolio value must be non-negative");
    BigMSchedule out;
    // Per-period growth factor floored at 1.
    long double bound = static_cast<long double>(current_value.cents());
    for (std::size_t k = 0; k < periods; ++k) {
        if (k > 0) {
            long double factor = 1.0L;
            for (std::size_t a = 0; a < path.assets(); ++a) {
                const auto prev = static_cast<long double>(path.at(k - 1, a).cents());
                const auto cur = static_cast<long double>(path.at(k, a).cents());
                factor = std::max(factor, cur / prev);
            }
            bound *= factor;
        }
        const auto min_price = static_cast<long double>(path.min_in_row(k).cents());
        const long double ratio = bound / min_price;
        auto cap = static_cast<std::int64_t>(std::ceil(ratio - 1e-9L * std::max(1.0L, ratio)));
        out.value_bound.push_back(static_cast<double>(bound / 100.0L));
        out.share_cap.push_back(std::max<std::int64_t>(1, cap));
    }
    return out;
}

namespace detail {

double tie_break_weight(Money fee) {
    return 1e-7 * static_cast<double>(std::max<std::int64_t>(fee.cents(), 1));
}

void add_to_objective(PolicyModel& policy, const LinearExpr& extra) {
    LinearExpr obj = policy.model.objective();
    for (const auto& t : extra.terms) {
        obj.add(t.var, t.coef);
        policy.reported_objective.add(t.var, t.coef);
    }
    obj.constant += extra.constant;
    policy.reported_objective.constant += extra.constant;
    policy.model.set_objective(std::move(obj));
}

PolicySkeleton build_skeleton(const PolicyInputs& inputs, const std::string& name, std::size_t periods,
                              std::size_t terminal_row) {
    require_periods(inputs);
    inputs.state.validate();
    inputs.target.validate();
    const std::size_t n = inputs.assets();
    const Money value = portfolio_value(inputs.state, inputs.path.row(0));

    PolicySkeleton sk;
    PolicyModel& pm = sk.policy;
    pm.model = milp::MilpModel(name);
    pm.big_m = compute_big_m(inputs.path, value, periods);
    auto& m = pm.model;
    auto& v = pm.vars;
    v.periods = periods;
    v.assets = n;

    for (std::size_t k = 0; k < periods; ++k) {
        const auto cap = static_cast<double>(pm.big_m.share_cap[k]);
        for (std::size_t a = 0; a < n; ++a) {
            const auto sfx = cell_suffix(k, a);
            v.buy.push_back(m.add_integer("zb_" + sfx, 0.0, cap));
            v.sell.push_back(m.add_integer("zs_" + sfx, 0.0, cap));
            v.buy_flag.push_back(m.add_binary("wb_" + sfx));
            v.sell_flag.push_back(m.add_binary("ws_" + sfx));
            sk.holdings.push_back(m.add_continuous("P_" + sfx));
        }
        sk.cash.push_back(m.add_continuous("C_" + std::to_string(k)));
    }

    const double fee = static_cast<double>(inputs.fee.cents());
    for (std::size_t k = 0; k < periods; ++k) {
        LinearExpr cash_row;
        cash_row.add(sk.cash[k], 1.0);
        double cash_rhs = 0.0;
        if (k > 0) {
            cash_row.add(sk.cash[k - 1], -1.0);
        } else {
            cash_rhs = static_cast<double>(inputs.state.cash.cents());
        }
        for (std::size_t a = 0; a < n; ++a) {
            const std::size_t c = v.cell(k, a);
            const auto sfx = cell_suffix(k, a);
            const double price = static_cast<double>(inputs.path.at(k, a).cents());

            LinearExpr hold;
            hold.add(sk.holdings[c], 1.0).add(v.buy[c], -1.0).add(v.sell[c], 1.0);
            double hold_rhs = 0.0;
            if (k > 0) {
                hold.add(sk.holdings[v.cell(k - 1, a)], -1.0);
            } else {
                hold_rhs = static_cast<double>(inputs.state.holdings[a]);
            }
            m.add_constraint("hold_" + sfx, std::move(hold), RowSense::equal, hold_rhs);

            cash_row.add(v.buy[c], price).add(v.sell[c], -price);
            cash_row.add(v.buy_flag[c], fee).add(v.sell_flag[c], fee);

            // Per-asset link coefficient from the value bound at this period's price.
            const double cap = std::min(static_cast<double>(pm.big_m.share_cap[k]),
                                        std::max(1.0, std::floor(pm.big_m.value_bound[k] * 100.0 / price + 1e-9)));
            LinearExpr link_b;
            link_b.add(v.buy[c], 1.0).add(v.buy_flag[c], -cap);
            m.add_constraint("linkb_" + sfx, std::move(link_b), RowSense::less_equal, 0.0);
            LinearExpr link_s;
            link_s.add(v.sell[c], 1.0).add(v.sell_flag[c], -cap);
            m.add_constraint("links_" + sfx, std::move(link_s), RowSense::less_equal, 0.0);

            sk.flag_sum.add(v.buy_flag[c], 1.0).add(v.sell_flag[c], 1.0);
        }
        m.add_constraint("cash_" + std::to_string(k), std::move(cash_row), RowSense::equal, cash_rhs);
    }
    for (std::size_t a = 0; a < n; ++a) {
        LinearExpr t;
        t.add(sk.holdings[v.cell(periods - 1, a)], 1.0);
        m.add_constraint("target_" + std::to_string(a), std::move(t), RowSense::greater_equal,
                         static_cast<double>(inputs.target.min_shares[a]));
    }

    LinearExpr reported;
    reported.add(sk.cash[periods - 1], 1.0);
    for (std::size_t a = 0; a < n; ++a) {
        reported.add(sk.holdings[v.cell(periods - 1, a)], static_cast<double>(inputs.path.at(terminal_row, a).cents()));
    }
    for (const auto& t : sk.flag_sum.terms) reported.add(t.var, -fee);
    LinearExpr objective = reported;
    const double eps = tie_break_weight(inputs.fee);
    for (const auto& t : sk.flag_sum.terms) objective.add(t.var, -eps);
    pm.reported_objective = std::move(reported);
    m.set_objective(std::move(objective));
    return sk;
}

}  // namespace detail

namespace {

void add_one_action_rows(PolicyModel& pm) {
    const auto& v = pm.vars;
    for (std::size_t k = 0; k < v.periods; ++k) {
        for (std::size_t a = 0; a < v.assets; ++a) {
            const std::size_t c = v.cell(k, a);
            LinearExpr e;
            e.add(v.buy_flag[c], 1.0).add(v.sell_flag[c], 1.0);
            pm.model.add_constraint("onedir_" + cell_suffix(k, a), std::move(e), RowSense::less_equal, 1.0);
        }
    }
}

}  // namespace

PolicyModel build_base(const PolicyInputs& inputs, const BaseOptions& options) {
    auto sk = detail::build_skeleton(inputs, "base", inputs.periods(), inputs.periods());
    PolicyModel& pm = sk.policy;
    if (options.one_action_per_asset) add_one_action_rows(pm);
    if (options.once_per_direction) {
        const auto& v = pm.vars;
        for (std::size_t a = 0; a < v.assets; ++a) {
            LinearExpr buys;
            LinearExpr sells;
            for (std::size_t k = 0; k < v.periods; ++k) {
                buys.add(v.buy_flag[v.cell(k, a)], 1.0);
                sells.add(v.sell_flag[v.cell(k, a)], 1.0);
            }
            pm.model.add_constraint("oncebuy_" + std::to_string(a), std::move(buys), RowSense::less_equal, 1.0);
            pm.model.add_constraint("oncesell_" + std::to_string(a), std::move(sells), RowSense::less_equal, 1.0);
        }
    }
    pm.allow_simultaneous = !options.one_action_per_asset;
    return std::move(sk.policy);
}

PolicyModel build_directional(const PolicyInputs& inputs, const DirectionalPartition& partition) {
    if (partition.buy_set.size() != inputs.assets()) throw DimensionError("partition size != asset count");
    auto sk = detail::build_skeleton(inputs, "directional", inputs.periods(), inputs.periods());
    PolicyModel& pm = sk.policy;
    const auto& v = pm.vars;
    // No w+ + w- <= 1 row: each asset has a single permitted direction.
    for (std::size_t k = 0; k < v.periods; ++k) {
        for (std::size_t a = 0; a < v.assets; ++a) {
            const std::size_t c = v.cell(k, a);
            LinearExpr e;
            if (partition.may_buy(a)) {
                e.add(v.sell_flag[c], 1.0);
                pm.model.add_constraint("nosell_" + cell_suffix(k, a), std::move(e), RowSense::less_equal, 0.0);
            } else {
                e.add(v.buy_flag[c], 1.0);
                pm.model.add_constraint("nobuy_" + cell_suffix(k, a), std::move(e), RowSense::less_equal, 0.0);
            }
        }
    }
    return std::move(sk.policy);
}

PolicyModel build_penalized(const PolicyInputs& inputs, const DirectionalPartition& partition, double penalty) {
    if (!(penalty >= 0.0) || !std::isfinite(penalty)) throw InvalidArgument("penalty must be a finite value >= 0");
    if (partition.buy_set.size() != inputs.assets()) throw DimensionError("partition size != asset count");
    auto sk = detail::build_skeleton(inputs, "penalized", inputs.periods(), inputs.periods());
    add_one_action_rows(sk.policy);
    PolicyModel pm = std::move(sk.policy);
    if (penalty == 0.0) return pm;
    const auto& v = pm.vars;
    LinearExpr pen;
    for (std::size_t k = 0; k < v.periods; ++k) {
        for (std::size_t a = 0; a < v.assets; ++a) {
            const std::size_t c = v.cell(k, a);
            const double price = static_cast<double>(inputs.path.at(k, a).cents());
            pen.add(partition.may_buy(a) ? v.sell[c] : v.buy[c], -penalty * price);
        }
    }
    detail::add_to_objective(pm, pen);
    return pm;
}

PolicyModel build_naive(const PolicyInputs& inputs) {
    // One trading period at row 0, valued at row 0. There is no
    // w+ + w- <= 1 row in this formulation.
    auto sk = detail::build_skeleton(inputs, "naive", 1, 0);
    sk.policy.allow_simultaneous = true;
    return std::move(sk.policy);
}

PolicyModel build_policy(const PolicyConfig& config, const PolicyInputs& inputs) {
    switch (config.kind) {
        case PolicyKind::base: return build_base(inputs);
        case PolicyKind::directional:
            return build_directional(inputs, partition_assets(inputs.state, inputs.target));
        case PolicyKind::penalized:
            return build_penalized(inputs, partition_assets(inputs.state, inputs.target), config.penalty);
        case PolicyKind::naive: return build_naive(inputs);
    }
    throw InvalidArgument("unknown policy kind");
}

TradePlan decode(const milp::SolveOutcome& outcome, const PolicyModel& policy) {
    if (!outcome.has_solution()) {
        throw DecodeError("cannot decode a solve with status " + std::string(milp::to_string(outcome.status)));
    }
    const auto& v = policy.vars;
    if (outcome.assignment.size() != policy.model.num_variables()) {
        throw DecodeError("assignment length does not match the model");
    }
    const auto integral = [&](VarId id) -> std::int64_t {
        const double x = outcome.assignment[id];
        const double r = std::round(x);
        if (std::abs(x - r) > milp::kIntegralityTolerance) {
            throw DecodeError("variable " + policy.model.variable(id).name + " = " + std::to_string(x) +
                              " is not integral");
        }
        return static_cast<std::int64_t>(r);
    };
    TradePlan plan = TradePlan::zeros(v.periods, v.assets);
    for (std::size_t k = 0; k < v.periods; ++k) {
        auto& row = plan.rows[k];
        for (std::size_t a = 0; a < v.assets; ++a) {
            const std::size_t c = v.cell(k, a);
            row.buys[a] = integral(v.buy[c]);
            row.sells[a] = integral(v.sell[c]);
            const auto wb = integral(v.buy_flag[c]);
            const auto ws = integral(v.sell_flag[c]);
            if (wb < 0 || wb > 1 || ws < 0 || ws > 1) {
                throw DecodeError("trade flag outside {0,1} at period " + std::to_string(k));
            }
            row.buy_flags[a] = static_cast<std::uint8_t>(wb);
            row.sell_flags[a] = static_cast<std::uint8_t>(ws);
        }
    }
    try {
        plan.validate(policy.allow_simultaneous);
    } catch (const InvalidArgument& e) {
        throw DecodeError(std::string("decoded plan is invalid: ") + e.what());
    }
    return plan;
}

PolicySolution solve_policy(const PolicyModel& policy, const milp::SolveSettings& settings) {
    PolicySolution sol;
    sol.outcome = milp::solve(policy.model, settings);
    switch (sol.outcome.status) {
        case milp::SolveStatus::infeasible:
            throw InfeasibleTargetError("no trade plan reaches the target portfolio (P_T >= target) in model '" +
                                        policy.model.name() + "'");
        case milp::SolveStatus::error: throw SolverError("solver failed: " + sol.outcome.message);
        default: break;
    }
    sol.plan = decode(sol.outcome, policy);
    sol.objective = policy.reported_objective.evaluate(sol.outcome.assignment) / 100.0;
    return sol;
}

Money wrong_direction_value(const TradePlan& plan, const PriceMatrix& path, const DirectionalPartition& partition) {
    Money total;
    for (std::size_t k = 0; k < plan.periods(); ++k) {
        const auto& row = plan.rows[k];
        for (std::size_t a = 0; a < row.assets(); ++a) {
            const std::int64_t shares = partition.may_buy(a) ? row.sells[a] : row.buys[a];
            total += path.at(k, a) * shares;
        }
    }
    return total;
}

}  // namespace changeover
