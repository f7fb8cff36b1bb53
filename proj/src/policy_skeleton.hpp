#pragma once

// Shared construction of the trade/holdings/cash block used by every
// compact policy and by the pattern master problems.

#include <string>
#include <vector>

#include "changeover/formulations.hpp"

namespace changeover::detail {

struct PolicySkeleton {
    PolicyModel policy;
    std::vector<milp::VarId> holdings;  ///< post-trade P, period-major
    std::vector<milp::VarId> cash;      ///< post-trade C per period
    milp::LinearExpr flag_sum;          ///< sum of every buy and sell flag
};

/// Builds variables z+/z- (integer, [0, M_k]), w+/w- (binary), P, C >= 0 and
/// the holdings, cash, big-M link and target rows. The objective is set to
/// C_last + Y_terminal . P_last - F * sum(w) (cents) with the tie-break.
/// `terminal_row` selects which path row values the final portfolio.
PolicySkeleton build_skeleton(const PolicyInputs& inputs, const std::string& name, std::size_t periods,
                              std::size_t terminal_row);

/// Adds `extra` to both the solver objective and the reported objective.
void add_to_objective(PolicyModel& policy, const milp::LinearExpr& extra);

/// Per-flag objective perturbation (cents) that prefers fewer executed
/// flags among equally good plans.
double tie_break_weight(Money fee);

}  // namespace changeover::detail
