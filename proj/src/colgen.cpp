#include "changeover/colgen.hpp"

#include <algorithm>
#include <limits>

#include "changeover/errors.hpp"
#include "policy_skeleton.hpp"

namespace changeover::colgen {

using milp::LinearExpr;
using milp::RowSense;
using milp::VarId;

bool ActionPattern::acts_on(std::size_t asset) const {
    for (std::size_t k = 0; k < periods; ++k) {
        if (acts(k, asset)) return true;
    }
    return false;
}

bool ActionPattern::is_never() const {
    return std::all_of(schedule.begin(), schedule.end(), [](std::uint8_t x) { return x == 0; });
}

void ActionPattern::validate() const {
    if (schedule.size() != periods * assets) throw DimensionError("pattern schedule has the wrong size");
    for (std::size_t a = 0; a < assets; ++a) {
        int count = 0;
        for (std::size_t k = 0; k < periods; ++k) count += acts(k, a) ? 1 : 0;
        if (count > 1) throw InvalidArgument("pattern acts on asset " + std::to_string(a) + " more than once");
    }
}

std::uint64_t joint_pattern_count(std::size_t assets, std::size_t periods) {
    std::uint64_t count = 1;
    const std::uint64_t base = periods + 1;
    for (std::size_t i = 0; i < assets; ++i) {
        if (count > std::numeric_limits<std::uint64_t>::max() / base) return std::numeric_limits<std::uint64_t>::max();
        count *= base;
    }
    return count;
}

namespace {

void check_assets(std::span<const std::size_t> relevant, std::size_t total_assets) {
    std::vector<std::size_t> sorted(relevant.begin(), relevant.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InvalidArgument("relevant asset list contains duplicates");
    }
    if (!sorted.empty() && sorted.back() >= total_assets) throw DimensionError("relevant asset out of range");
}

}  // namespace

std::vector<ActionPattern> enumerate_patterns(Direction direction, std::span<const std::size_t> relevant,
                                              std::size_t periods, std::size_t total_assets, std::uint64_t cap) {
    if (cap < 1) throw InvalidArgument("pattern cap must be at least 1");
    if (periods < 1) throw InvalidArgument("pattern enumeration needs at least one period");
    check_assets(relevant, total_assets);
    const std::uint64_t count = joint_pattern_count(relevant.size(), periods);
    if (count > cap) {
        throw PatternCapError("joint enumeration of " + std::to_string(relevant.size()) + " assets over " +
                              std::to_string(periods) + " periods needs " + std::to_string(count) +
                              " patterns (cap " + std::to_string(cap) + "); use per-asset decomposition mode");
    }
    std::vector<ActionPattern> out;
    out.reserve(static_cast<std::size_t>(count));
    // Mixed-radix counter: digit 0 = never, digit d = act in period d - 1.
    std::vector<std::size_t> digit(relevant.size(), 0);
    for (std::uint64_t i = 0; i < count; ++i) {
        ActionPattern p{direction, periods, total_assets, std::vector<std::uint8_t>(periods * total_assets, 0)};
        for (std::size_t j = 0; j < relevant.size(); ++j) {
            if (digit[j] > 0) p.schedule[(digit[j] - 1) * total_assets + relevant[j]] = 1;
        }
        out.push_back(std::move(p));
        for (std::size_t j = 0; j < digit.size(); ++j) {
            if (++digit[j] <= periods) break;
            digit[j] = 0;
        }
    }
    return out;
}

std::vector<PatternGroup> per_asset_groups(Direction direction, std::span<const std::size_t> relevant,
                                           std::size_t periods, std::size_t total_assets) {
    check_assets(relevant, total_assets);
    std::vector<PatternGroup> groups;
    for (std::size_t a : relevant) {
        const std::size_t one[] = {a};
        groups.push_back({direction, {a}, enumerate_patterns(direction, one, periods, total_assets)});
    }
    return groups;
}

PatternGroup joint_group(Direction direction, std::span<const std::size_t> relevant, std::size_t periods,
                         std::size_t total_assets, std::uint64_t cap) {
    return PatternGroup{direction, std::vector<std::size_t>(relevant.begin(), relevant.end()),
                        enumerate_patterns(direction, relevant, periods, total_assets, cap)};
}

namespace {

bool completed(Direction direction, std::size_t a, const PortfolioState& state, const TargetPortfolio& target) {
    return direction == Direction::sell ? state.holdings[a] <= target.min_shares[a]
                                        : state.holdings[a] >= target.min_shares[a];
}

bool survives(const ActionPattern& p, const PortfolioState& state, const TargetPortfolio& target) {
    for (std::size_t a = 0; a < p.assets; ++a) {
        if (completed(p.direction, a, state, target) && p.acts_on(a)) return false;
    }
    return true;
}

}  // namespace

std::vector<ActionPattern> prune_completed(const std::vector<ActionPattern>& patterns, const PortfolioState& state,
                                           const TargetPortfolio& target) {
    if (state.holdings.size() != target.min_shares.size()) throw DimensionError("holdings and target lengths differ");
    std::vector<ActionPattern> out;
    for (const auto& p : patterns) {
        if (p.assets != state.holdings.size()) throw DimensionError("pattern asset count != holdings length");
        if (survives(p, state, target)) out.push_back(p);
    }
    return out;
}

void prune_completed(PatternGroup& group, const PortfolioState& state, const TargetPortfolio& target) {
    group.patterns = prune_completed(group.patterns, state, target);
    std::erase_if(group.assets, [&](std::size_t a) { return completed(group.direction, a, state, target); });
}

std::string variant_name(Variant variant) {
    return variant == Variant::colgen_true ? "ColGen_True" : "ColGen_False";
}

namespace {

// Adds selection variables and convexity rows for `groups`, returning for
// every cell the expression sum(selection * pattern cell).
std::vector<LinearExpr> add_selection(PolicyModel& pm, const std::vector<PatternGroup>& groups, Direction direction,
                                      const std::string& prefix) {
    const auto& v = pm.vars;
    std::vector<LinearExpr> cell_expr(v.periods * v.assets);
    std::vector<std::uint8_t> covered(v.assets, 0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& group = groups[g];
        if (group.direction != direction) throw InvalidArgument("pattern group has the wrong direction");
        if (group.patterns.empty()) throw InvalidArgument("pattern group is empty (the never-act pattern is required)");
        for (std::size_t a : group.assets) {
            if (a >= v.assets) throw DimensionError("pattern group asset out of range");
            if (covered[a]++) throw InvalidArgument("asset " + std::to_string(a) + " appears in two pattern groups");
        }
        LinearExpr convexity;
        for (std::size_t l = 0; l < group.patterns.size(); ++l) {
            const auto& p = group.patterns[l];
            if (p.periods != v.periods || p.assets != v.assets) {
                throw DimensionError("pattern shape does not match the policy horizon");
            }
            p.validate();
            const VarId sel = pm.model.add_binary(prefix + std::to_string(g) + "_" + std::to_string(l));
            convexity.add(sel, 1.0);
            for (std::size_t k = 0; k < v.periods; ++k) {
                for (std::size_t a = 0; a < v.assets; ++a) {
                    if (!p.acts(k, a)) continue;
                    if (std::find(group.assets.begin(), group.assets.end(), a) == group.assets.end()) {
                        throw InvalidArgument("pattern acts on an asset outside its group");
                    }
                    cell_expr[v.cell(k, a)].add(sel, 1.0);
                }
            }
        }
        pm.model.add_constraint("conv" + prefix + std::to_string(g), std::move(convexity), RowSense::equal, 1.0);
    }
    return cell_expr;
}

void link_flags(PolicyModel& pm, const std::vector<milp::VarId>& flags, std::vector<LinearExpr> cell_expr,
                const std::string& row_prefix) {
    const auto& v = pm.vars;
    for (std::size_t k = 0; k < v.periods; ++k) {
        for (std::size_t a = 0; a < v.assets; ++a) {
            const std::size_t c = v.cell(k, a);
            LinearExpr e = std::move(cell_expr[c]);
            for (auto& t : e.terms) t.coef = -t.coef;
            e.add(flags[c], 1.0);
            pm.model.add_constraint(row_prefix + std::to_string(k) + "_" + std::to_string(a), std::move(e),
                                    RowSense::equal, 0.0);
        }
    }
}

}  // namespace

PolicyModel build_master(const PolicyInputs& inputs, const std::vector<PatternGroup>& buy_groups,
                         const std::vector<PatternGroup>& sell_groups, Variant variant) {
    auto sk = detail::build_skeleton(inputs, variant == Variant::colgen_true ? "colgen_true" : "colgen_false",
                                     inputs.periods(), inputs.periods());
    PolicyModel& pm = sk.policy;
    const auto& v = pm.vars;

    link_flags(pm, v.buy_flag, add_selection(pm, buy_groups, Direction::buy, "lb"), "patb_");
    if (variant == Variant::colgen_true) {
        link_flags(pm, v.sell_flag, add_selection(pm, sell_groups, Direction::sell, "ls"), "pats_");
    }
    for (std::size_t k = 0; k < v.periods; ++k) {
        for (std::size_t a = 0; a < v.assets; ++a) {
            const std::size_t c = v.cell(k, a);
            LinearExpr e;
            e.add(v.buy_flag[c], 1.0).add(v.sell_flag[c], 1.0);
            pm.model.add_constraint("onedir_" + std::to_string(k) + "_" + std::to_string(a), std::move(e),
                                    RowSense::less_equal, 1.0);
        }
    }
    return std::move(sk.policy);
}

std::vector<std::size_t> active_assets(Direction direction, const PortfolioState& state,
                                       const TargetPortfolio& target) {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < state.holdings.size(); ++a) {
        if (!completed(direction, a, state, target)) out.push_back(a);
    }
    return out;
}

namespace {

std::vector<PatternGroup> make_groups(Direction direction, std::span<const std::size_t> assets, std::size_t periods,
                                      std::size_t total, const ColgenConfig& config) {
    if (config.mode == MasterMode::per_asset) return per_asset_groups(direction, assets, periods, total);
    return {joint_group(direction, assets, periods, total, config.cap)};
}

}  // namespace

PolicyModel build_colgen_unpruned(const PolicyInputs& inputs, const ColgenConfig& config,
                                  std::span<const std::size_t> buy_assets, std::span<const std::size_t> sell_assets) {
    const std::size_t periods = inputs.periods();
    const std::size_t n = inputs.assets();
    auto buys = make_groups(Direction::buy, buy_assets, periods, n, config);
    std::vector<PatternGroup> sells;
    if (config.variant == Variant::colgen_true) sells = make_groups(Direction::sell, sell_assets, periods, n, config);
    return build_master(inputs, buys, sells, config.variant);
}

PolicyModel build_colgen_policy(const PolicyInputs& inputs, const ColgenConfig& config) {
    const std::size_t periods = inputs.periods();
    const std::size_t n = inputs.assets();
    const auto buy_assets = active_assets(Direction::buy, inputs.state, inputs.target);
    const auto sell_assets = active_assets(Direction::sell, inputs.state, inputs.target);
    auto buys = make_groups(Direction::buy, buy_assets, periods, n, config);
    for (auto& g : buys) prune_completed(g, inputs.state, inputs.target);
    std::vector<PatternGroup> sells;
    if (config.variant == Variant::colgen_true) {
        sells = make_groups(Direction::sell, sell_assets, periods, n, config);
        for (auto& g : sells) prune_completed(g, inputs.state, inputs.target);
    }
    return build_master(inputs, buys, sells, config.variant);
}

}  // namespace changeover::colgen
