#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "changeover/domain.hpp"
#include "changeover/formulations.hpp"

namespace changeover::colgen {

enum class Direction { buy, sell };

/// When each covered asset is acted on: at most one period per asset.
/// An all-zero schedule is the never-act pattern.
struct ActionPattern {
    Direction direction = Direction::buy;
    std::size_t periods = 0;
    std::size_t assets = 0;
    std::vector<std::uint8_t> schedule;  ///< periods x assets, period-major

    bool acts(std::size_t period, std::size_t asset) const { return schedule[period * assets + asset] != 0; }
    bool acts_on(std::size_t asset) const;
    bool is_never() const;
    /// Throws InvalidArgument if an asset is scheduled more than once.
    void validate() const;
};

/// A set of alternative patterns tied together by one convexity row
/// (exactly one pattern of the group is selected).
struct PatternGroup {
    Direction direction = Direction::buy;
    std::vector<std::size_t> assets;  ///< assets the group's patterns may act on
    std::vector<ActionPattern> patterns;
};

inline constexpr std::uint64_t kDefaultPatternCap = 100000;

/// (periods + 1)^assets, saturating at UINT64_MAX.
std::uint64_t joint_pattern_count(std::size_t assets, std::size_t periods);

/// Every joint timing pattern over `relevant` assets: each asset is acted
/// on in one of `periods` periods or never. Throws PatternCapError when the
/// count exceeds `cap`.
std::vector<ActionPattern> enumerate_patterns(Direction direction, std::span<const std::size_t> relevant,
                                              std::size_t periods, std::size_t total_assets,
                                              std::uint64_t cap = kDefaultPatternCap);

/// One group per relevant asset with periods + 1 patterns each.
std::vector<PatternGroup> per_asset_groups(Direction direction, std::span<const std::size_t> relevant,
                                           std::size_t periods, std::size_t total_assets);

/// A single group holding the joint enumeration.
PatternGroup joint_group(Direction direction, std::span<const std::size_t> relevant, std::size_t periods,
                         std::size_t total_assets, std::uint64_t cap = kDefaultPatternCap);

/// Drops sell patterns that sell an asset already at or below target and
/// buy patterns that buy an asset already at or above target.
std::vector<ActionPattern> prune_completed(const std::vector<ActionPattern>& patterns, const PortfolioState& state,
                                           const TargetPortfolio& target);
void prune_completed(PatternGroup& group, const PortfolioState& state, const TargetPortfolio& target);

enum class Variant {
    colgen_true,   ///< buys and sells pattern-selected
    colgen_false,  ///< buys pattern-selected, sells compact
};

enum class MasterMode { per_asset, joint };

std::string variant_name(Variant variant);

/// Restricted master problem. Flag variables are tied to the selected
/// patterns (w = sum lambda * pattern), every group has a convexity row,
/// and a buy and a sell of the same asset never share a period. With
/// Variant::colgen_false, `sell_groups` is ignored and sells use compact
/// flags.
PolicyModel build_master(const PolicyInputs& inputs, const std::vector<PatternGroup>& buy_groups,
                         const std::vector<PatternGroup>& sell_groups, Variant variant);

struct ColgenConfig {
    Variant variant = Variant::colgen_true;
    MasterMode mode = MasterMode::per_asset;
    std::uint64_t cap = kDefaultPatternCap;
};

/// Assets that still need a move in `direction`: below target for buys,
/// above target for sells.
std::vector<std::size_t> active_assets(Direction direction, const PortfolioState& state,
                                       const TargetPortfolio& target);

/// Enumerates patterns for the assets that still need a move, prunes
/// completed ones, and builds the master.
PolicyModel build_colgen_policy(const PolicyInputs& inputs, const ColgenConfig& config);

/// Same as build_colgen_policy but with explicit candidate assets per
/// direction and no pruning; used to compare against the compact model.
PolicyModel build_colgen_unpruned(const PolicyInputs& inputs, const ColgenConfig& config,
                                  std::span<const std::size_t> buy_assets, std::span<const std::size_t> sell_assets);

}  // namespace changeover::colgen
