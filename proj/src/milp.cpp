#include "changeover/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "changeover/errors.hpp"

namespace changeover::milp {

double LinearExpr::evaluate(const std::vector<double>& x) const {
    double v = constant;
    for (const auto& t : terms) v += t.coef * x.at(t.var);
    return v;
}

VarId MilpModel::add_variable(std::string name, VarKind kind, double lower, double upper) {
    if (kind == VarKind::binary) {
        lower = std::max(lower, 0.0);
        upper = std::min(upper, 1.0);
    }
    variables_.push_back({std::move(name), kind, lower, upper});
    return variables_.size() - 1;
}

void MilpModel::add_constraint(std::string name, LinearExpr expr, RowSense sense, double rhs) {
    constraints_.push_back({std::move(name), std::move(expr), sense, rhs});
}

std::size_t MilpModel::num_integer_variables() const {
    return static_cast<std::size_t>(std::count_if(variables_.begin(), variables_.end(), [](const Variable& v) {
        return v.kind != VarKind::continuous;
    }));
}

void MilpModel::validate() const {
    const auto check_expr = [&](const LinearExpr& e, const std::string& where) {
        for (const auto& t : e.terms) {
            if (t.var >= variables_.size()) {
                throw InvalidArgument(where + " references undeclared variable " + std::to_string(t.var));
            }
            if (!std::isfinite(t.coef)) throw InvalidArgument(where + " has a non-finite coefficient");
        }
    };
    for (const auto& v : variables_) {
        if (v.lower > v.upper) {
            throw InvalidArgument("variable " + v.name + " has lower bound above upper bound");
        }
    }
    for (const auto& c : constraints_) check_expr(c.expr, "constraint " + c.name);
    check_expr(objective_, "objective");
}

MilpModel::Violation MilpModel::violation(const std::vector<double>& x) const {
    Violation out;
    if (x.size() != variables_.size()) {
        out.row = kInfinity;
        out.worst = "assignment length mismatch";
        return out;
    }
    for (const auto& c : constraints_) {
        const double lhs = c.expr.evaluate(x);
        double v = 0.0;
        switch (c.sense) {
            case RowSense::less_equal: v = lhs - c.rhs; break;
            case RowSense::greater_equal: v = c.rhs - lhs; break;
            case RowSense::equal: v = std::abs(lhs - c.rhs); break;
        }
        if (v > out.row) {
            out.row = v;
            out.worst = "row " + c.name;
        }
    }
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        const auto& var = variables_[i];
        const double b = std::max(var.lower - x[i], x[i] - var.upper);
        if (b > out.bound) {
            out.bound = b;
            if (b > out.row) out.worst = "bound " + var.name;
        }
        if (var.kind != VarKind::continuous) {
            const double frac = std::abs(x[i] - std::round(x[i]));
            if (frac > out.integrality) {
                out.integrality = frac;
                if (frac > std::max(out.row, out.bound)) out.worst = "integrality " + var.name;
            }
        }
    }
    return out;
}

std::string_view to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::time_limit_feasible: return "time-limit-feasible";
        case SolveStatus::error: return "error";
    }
    return "error";
}

std::string_view to_string(Backend backend) {
    switch (backend) {
        case Backend::automatic: return "auto";
        case Backend::builtin: return "builtin";
        case Backend::highs: return "highs";
    }
    return "auto";
}

Backend parse_backend(std::string_view text) {
    if (text == "auto") return Backend::automatic;
    if (text == "builtin") return Backend::builtin;
    if (text == "highs") return Backend::highs;
    throw InvalidArgument("unknown solver backend '" + std::string(text) + "'");
}

bool backend_available(Backend backend) {
    switch (backend) {
        case Backend::automatic:
        case Backend::builtin: return true;
        case Backend::highs:
#ifdef CHANGEOVER_HAVE_HIGHS
            return true;
#else
            return false;
#endif
    }
    return false;
}

std::map<std::string, double> SolveOutcome::assignment_by_name(const MilpModel& model) const {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < assignment.size() && i < model.num_variables(); ++i) {
        out[model.variable(i).name] = assignment[i];
    }
    return out;
}

SolveOutcome solve(const MilpModel& model, const SolveSettings& settings) {
    SolveOutcome outcome;
    try {
        model.validate();
        if (settings.gap < 0.0 || settings.time_limit <= 0.0) {
            throw InvalidArgument("solver gap must be >= 0 and time limit > 0");
        }
        Backend backend = settings.backend;
        if (backend == Backend::automatic) {
            backend = backend_available(Backend::highs) ? Backend::highs : Backend::builtin;
        }
        if (!backend_available(backend)) {
            throw SolverError("backend '" + std::string(to_string(backend)) + "' is not compiled in");
        }
        const auto start = std::chrono::steady_clock::now();
        outcome = backend == Backend::highs ? detail::solve_highs(model, settings)
                                            : detail::solve_builtin(model, settings);
        outcome.backend = backend;
        outcome.solve_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    } catch (const std::exception& e) {
        outcome = SolveOutcome{};
        outcome.status = SolveStatus::error;
        outcome.message = e.what();
        return outcome;
    }

    if (outcome.has_solution()) {
        const auto v = model.violation(outcome.assignment);
        if (v.row > kFeasibilityTolerance || v.bound > kFeasibilityTolerance ||
            v.integrality > kIntegralityTolerance) {
            std::ostringstream msg;
            msg << "backend returned an infeasible assignment (worst: " << v.worst << ", row "
                << v.row << ", bound " << v.bound << ", integrality " << v.integrality << ")";
            outcome.status = SolveStatus::error;
            outcome.message = msg.str();
            return outcome;
        }
        outcome.objective_value = model.objective().evaluate(outcome.assignment);
    }
    return outcome;
}

namespace {

std::string format_number(double v) {
    if (v >= kInfinity) return "+inf";
    if (v <= -kInfinity) return "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

void write_terms(std::ostringstream& out, const LinearExpr& expr, const MilpModel& model) {
    // Merge duplicates so every variable appears once per row.
    std::map<VarId, double> merged;
    for (const auto& t : expr.terms) merged[t.var] += t.coef;
    std::size_t written = 0;
    for (const auto& [var, coef] : merged) {
        if (coef == 0.0) continue;
        if (written > 0 && written % 8 == 0) out << "\n   ";
        out << (coef < 0 ? " - " : " + ");
        const double mag = std::abs(coef);
        if (mag != 1.0) out << format_number(mag) << ' ';
        out << model.variable(var).name;
        ++written;
    }
    if (written == 0) {
        out << " 0 " << (model.num_variables() > 0 ? model.variable(0).name : "x");
    }
}

}  // namespace

std::string export_lp_text(const MilpModel& model) {
    std::ostringstream out;
    out << "\\ Problem: " << model.name() << "\n";
    out << "Maximize\n obj:";
    write_terms(out, model.objective(), model);
    if (model.objective().constant != 0.0) {
        out << (model.objective().constant < 0 ? " - " : " + ") << format_number(std::abs(model.objective().constant));
    }
    out << "\nSubject To\n";
    for (const auto& c : model.constraints()) {
        out << ' ' << c.name << ':';
        write_terms(out, c.expr, model);
        switch (c.sense) {
            case RowSense::less_equal: out << " <= "; break;
            case RowSense::greater_equal: out << " >= "; break;
            case RowSense::equal: out << " = "; break;
        }
        out << format_number(c.rhs - c.expr.constant) << '\n';
    }
    out << "Bounds\n";
    for (const auto& v : model.variables()) {
        if (v.kind == VarKind::binary) continue;
        if (v.lower <= -kInfinity && v.upper >= kInfinity) {
            out << ' ' << v.name << " free\n";
        } else if (v.upper >= kInfinity) {
            out << ' ' << v.name << " >= " << format_number(v.lower) << '\n';
        } else {
            out << ' ' << format_number(v.lower) << " <= " << v.name << " <= " << format_number(v.upper) << '\n';
        }
    }
    bool any_general = false;
    for (const auto& v : model.variables()) {
        if (v.kind != VarKind::integer) continue;
        if (!any_general) out << "Generals\n";
        any_general = true;
        out << ' ' << v.name << '\n';
    }
    bool any_binary = false;
    for (const auto& v : model.variables()) {
        if (v.kind != VarKind::binary) continue;
        if (!any_binary) out << "Binaries\n";
        any_binary = true;
        out << ' ' << v.name << '\n';
    }
    out << "End\n";
    return out.str();
}

}  // namespace changeover::milp
