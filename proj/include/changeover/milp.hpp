#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace changeover::milp {

enum class VarKind { continuous, integer, binary };
enum class RowSense { less_equal, equal, greater_equal };

using VarId = std::size_t;

struct Term {
    VarId var;
    double coef;
};

/// Sparse linear expression sum(coef * x[var]) + constant. Duplicate
/// variables are allowed and summed on evaluation.
struct LinearExpr {
    std::vector<Term> terms;
    double constant = 0.0;

    LinearExpr& add(VarId var, double coef) {
        if (coef != 0.0) terms.push_back({var, coef});
        return *this;
    }
    double evaluate(const std::vector<double>& x) const;
};

struct Variable {
    std::string name;
    VarKind kind = VarKind::continuous;
    double lower = 0.0;
    double upper = 0.0;
};

struct Constraint {
    std::string name;
    LinearExpr expr;
    RowSense sense = RowSense::less_equal;
    double rhs = 0.0;
};

inline constexpr double kInfinity = 1e30;

/// Mixed-integer linear program with a maximization objective.
class MilpModel {
public:
    explicit MilpModel(std::string name = "model") : name_(std::move(name)) {}

    VarId add_variable(std::string name, VarKind kind, double lower, double upper);
    VarId add_continuous(std::string name, double lower = 0.0, double upper = kInfinity) {
        return add_variable(std::move(name), VarKind::continuous, lower, upper);
    }
    VarId add_integer(std::string name, double lower, double upper) {
        return add_variable(std::move(name), VarKind::integer, lower, upper);
    }
    VarId add_binary(std::string name) { return add_variable(std::move(name), VarKind::binary, 0.0, 1.0); }

    void add_constraint(std::string name, LinearExpr expr, RowSense sense, double rhs);
    void set_objective(LinearExpr objective) { objective_ = std::move(objective); }

    const std::string& name() const { return name_; }
    const std::vector<Variable>& variables() const { return variables_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    const LinearExpr& objective() const { return objective_; }
    const Variable& variable(VarId id) const { return variables_.at(id); }
    std::size_t num_variables() const { return variables_.size(); }
    std::size_t num_integer_variables() const;

    /// Throws InvalidArgument when a row or the objective references an
    /// undeclared variable, or a bound pair is inverted.
    void validate() const;

    /// Largest absolute row violation, bound violation or integrality
    /// violation of `x`. Integrality is measured as distance to the nearest
    /// integer.
    struct Violation {
        double row = 0.0;
        double bound = 0.0;
        double integrality = 0.0;
        std::string worst;
    };
    Violation violation(const std::vector<double>& x) const;

private:
    std::string name_;
    std::vector<Variable> variables_;
    std::vector<Constraint> constraints_;
    LinearExpr objective_;
};

enum class SolveStatus { optimal, infeasible, time_limit_feasible, error };

std::string_view to_string(SolveStatus status);

enum class Backend {
    automatic,  ///< HiGHS when compiled in, otherwise the built-in solver
    builtin,    ///< in-process LP-based branch and bound for tiny models
    highs,
};

std::string_view to_string(Backend backend);
Backend parse_backend(std::string_view text);
bool backend_available(Backend backend);

struct SolveSettings {
    double gap = 1e-6;          ///< relative optimality gap
    double time_limit = 60.0;   ///< seconds
    std::uint64_t seed = 0;
    int threads = 1;
    Backend backend = Backend::automatic;
};

struct SolveOutcome {
    SolveStatus status = SolveStatus::error;
    double objective_value = 0.0;
    std::vector<double> assignment;  ///< indexed by VarId
    double solve_time = 0.0;         ///< seconds
    double gap = 0.0;
    std::string message;
    Backend backend = Backend::automatic;

    bool has_solution() const {
        return status == SolveStatus::optimal || status == SolveStatus::time_limit_feasible;
    }
    std::map<std::string, double> assignment_by_name(const MilpModel& model) const;
};

inline constexpr double kFeasibilityTolerance = 1e-6;
inline constexpr double kIntegralityTolerance = 1e-6;

/// Solves `model` with the selected backend. A returned assignment is
/// re-verified against every row, bound and integrality requirement; any
/// violation beyond 1e-6 turns the outcome into SolveStatus::error. The
/// reported objective is re-evaluated from the assignment.
SolveOutcome solve(const MilpModel& model, const SolveSettings& settings = {});

/// CPLEX-style LP text rendering of `model`.
std::string export_lp_text(const MilpModel& model);

namespace detail {
SolveOutcome solve_builtin(const MilpModel& model, const SolveSettings& settings);
SolveOutcome solve_highs(const MilpModel& model, const SolveSettings& settings);
}  // namespace detail

}  // namespace changeover::milp
