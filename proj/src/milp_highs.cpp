#include <cmath>
#include <map>

#include "changeover/errors.hpp"
#include "changeover/milp.hpp"

#ifdef CHANGEOVER_HAVE_HIGHS
#include "Highs.h"
#endif

namespace changeover::milp::detail {

#ifdef CHANGEOVER_HAVE_HIGHS

namespace {

double to_highs_bound(double v) {
    if (v >= kInfinity) return kHighsInf;
    if (v <= -kInfinity) return -kHighsInf;
    return v;
}

HighsModel to_highs(const MilpModel& model) {
    HighsModel hm;
    HighsLp& lp = hm.lp_;
    lp.model_name_ = model.name();
    lp.num_col_ = static_cast<HighsInt>(model.num_variables());
    lp.num_row_ = static_cast<HighsInt>(model.constraints().size());
    lp.sense_ = ObjSense::kMaximize;
    lp.offset_ = model.objective().constant;

    lp.col_cost_.assign(model.num_variables(), 0.0);
    for (const auto& t : model.objective().terms) lp.col_cost_[t.var] += t.coef;

    bool any_integer = false;
    lp.integrality_.assign(model.num_variables(), HighsVarType::kContinuous);
    for (std::size_t j = 0; j < model.num_variables(); ++j) {
        const auto& v = model.variable(j);
        lp.col_lower_.push_back(to_highs_bound(v.lower));
        lp.col_upper_.push_back(to_highs_bound(v.upper));
        if (v.kind != VarKind::continuous) {
            lp.integrality_[j] = HighsVarType::kInteger;
            any_integer = true;
        }
    }
    if (!any_integer) lp.integrality_.clear();

    lp.a_matrix_.format_ = MatrixFormat::kRowwise;
    lp.a_matrix_.num_col_ = lp.num_col_;
    lp.a_matrix_.num_row_ = lp.num_row_;
    lp.a_matrix_.start_.assign(1, 0);
    for (const auto& c : model.constraints()) {
        std::map<VarId, double> merged;
        for (const auto& t : c.expr.terms) merged[t.var] += t.coef;
        for (const auto& [var, coef] : merged) {
            if (coef == 0.0) continue;
            lp.a_matrix_.index_.push_back(static_cast<HighsInt>(var));
            lp.a_matrix_.value_.push_back(coef);
        }
        lp.a_matrix_.start_.push_back(static_cast<HighsInt>(lp.a_matrix_.index_.size()));
        const double rhs = c.rhs - c.expr.constant;
        switch (c.sense) {
            case RowSense::less_equal:
                lp.row_lower_.push_back(-kHighsInf);
                lp.row_upper_.push_back(rhs);
                break;
            case RowSense::greater_equal:
                lp.row_lower_.push_back(rhs);
                lp.row_upper_.push_back(kHighsInf);
                break;
            case RowSense::equal:
                lp.row_lower_.push_back(rhs);
                lp.row_upper_.push_back(rhs);
                break;
        }
    }
    return hm;
}

void configure(Highs& highs, const SolveSettings& settings) {
    highs.setOptionValue("output_flag", false);
    highs.setOptionValue("mip_rel_gap", settings.gap);
    highs.setOptionValue("mip_abs_gap", 1e-9);
    highs.setOptionValue("time_limit", settings.time_limit);
    highs.setOptionValue("random_seed", static_cast<HighsInt>(settings.seed % 2147483647ULL));
    highs.setOptionValue("threads", static_cast<HighsInt>(std::max(1, settings.threads)));
    // Doubleton-equation presolve returns wrong optima on these models in 1.9.0.
    highs.setOptionValue("presolve_rule_off", static_cast<HighsInt>(1) << kPresolveRuleDoubletonEquation);
}

}  // namespace

SolveOutcome solve_highs(const MilpModel& model, const SolveSettings& settings) {
    SolveOutcome out;
    Highs highs;
    configure(highs, settings);
    if (highs.passModel(to_highs(model)) == HighsStatus::kError) {
        out.status = SolveStatus::error;
        out.message = "HiGHS rejected the model";
        return out;
    }
    if (highs.run() == HighsStatus::kError) {
        out.status = SolveStatus::error;
        out.message = "HiGHS run failed";
        return out;
    }
    HighsModelStatus status = highs.getModelStatus();
    if (status == HighsModelStatus::kUnboundedOrInfeasible) {
        // Presolve could not tell which; settle it without presolve.
        highs.setOptionValue("presolve", "off");
        highs.clearSolver();
        highs.run();
        status = highs.getModelStatus();
    }

    const HighsInfo& info = highs.getInfo();
    const bool has_primal = info.primal_solution_status == kSolutionStatusFeasible;
    switch (status) {
        case HighsModelStatus::kOptimal:
            out.status = SolveStatus::optimal;
            break;
        case HighsModelStatus::kInfeasible:
            out.status = SolveStatus::infeasible;
            return out;
        case HighsModelStatus::kTimeLimit:
        case HighsModelStatus::kIterationLimit:
        case HighsModelStatus::kSolutionLimit:
        case HighsModelStatus::kInterrupt:
            if (!has_primal) {
                out.status = SolveStatus::error;
                out.message = "HiGHS stopped (" + highs.modelStatusToString(status) + ") without a feasible solution";
                return out;
            }
            out.status = SolveStatus::time_limit_feasible;
            break;
        default:
            out.status = SolveStatus::error;
            out.message = "HiGHS status: " + highs.modelStatusToString(status);
            return out;
    }
    out.assignment = highs.getSolution().col_value;
    out.objective_value = info.objective_function_value;
    out.gap = model.num_integer_variables() > 0 ? std::max(0.0, info.mip_gap) : 0.0;
    if (!std::isfinite(out.gap)) out.gap = 0.0;
    // Snap integer columns that HiGHS left within its own tolerance.
    for (std::size_t j = 0; j < model.num_variables(); ++j) {
        if (model.variable(j).kind != VarKind::continuous) {
            const double r = std::round(out.assignment[j]);
            if (std::abs(out.assignment[j] - r) <= kIntegralityTolerance) out.assignment[j] = r;
        }
    }
    return out;
}

#else

SolveOutcome solve_highs(const MilpModel&, const SolveSettings&) {
    throw SolverError("HiGHS backend is not compiled in");
}

#endif

}  // namespace changeover::milp::detail
