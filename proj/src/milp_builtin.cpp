// In-process LP-based branch and bound.
//
// Intended for tiny models (a few dozen integer variables): every node
// rebuilds a dense two-phase simplex tableau from scratch, so there is no
// warm start and no cut generation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "changeover/errors.hpp"
#include "changeover/milp.hpp"

namespace changeover::milp::detail {
namespace {

constexpr double kPivotEps = 1e-9;
constexpr double kLpFeasTol = 1e-7;

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;  // maximization value
    std::vector<double> x;
};

// Dense rows of the model, shared by every node.
struct DenseModel {
    std::size_t n = 0;
    std::vector<std::vector<double>> rows;
    std::vector<RowSense> senses;
    std::vector<double> rhs;
    std::vector<double> objective;
    double objective_constant = 0.0;
};

DenseModel densify(const MilpModel& model) {
    DenseModel d;
    d.n = model.num_variables();
    for (const auto& c : model.constraints()) {
        std::vector<double> row(d.n, 0.0);
        for (const auto& t : c.expr.terms) row[t.var] += t.coef;
        d.rows.push_back(std::move(row));
        d.senses.push_back(c.sense);
        d.rhs.push_back(c.rhs - c.expr.constant);
    }
    d.objective.assign(d.n, 0.0);
    for (const auto& t : model.objective().terms) d.objective[t.var] += t.coef;
    d.objective_constant = model.objective().constant;
    return d;
}

class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), a_((rows + 1) * (cols + 1), 0.0), basis_(rows, 0) {}

    double& at(std::size_t r, std::size_t c) { return a_[r * (n_ + 1) + c]; }
    double at(std::size_t r, std::size_t c) const { return a_[r * (n_ + 1) + c]; }
    double& rhs(std::size_t r) { return at(r, n_); }
    double& cost(std::size_t c) { return at(m_, c); }
    double& objective() { return at(m_, n_); }
    std::size_t rows() const { return m_; }
    std::size_t cols() const { return n_; }
    std::vector<std::size_t>& basis() { return basis_; }

    void pivot(std::size_t pr, std::size_t pc) {
        const double p = at(pr, pc);
        for (std::size_t c = 0; c <= n_; ++c) at(pr, c) /= p;
        for (std::size_t r = 0; r <= m_; ++r) {
            if (r == pr) continue;
            const double f = at(r, pc);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c <= n_; ++c) at(r, c) -= f * at(pr, c);
            at(r, pc) = 0.0;
        }
        basis_[pr] = pc;
    }

    // Minimizes the cost row over columns allowed by `eligible`.
    // Returns false when unbounded.
    bool run(const std::vector<bool>& eligible) {
        std::size_t degenerate_streak = 0;
        for (std::size_t iter = 0; iter < 50000; ++iter) {
            const bool bland = degenerate_streak > 50;
            std::size_t enter = n_;
            double best = -kPivotEps;
            for (std::size_t c = 0; c < n_; ++c) {
                if (!eligible[c]) continue;
                const double rc = cost(c);
                if (rc < best) {
                    enter = c;
                    if (bland) break;
                    best = rc;
                }
            }
            if (enter == n_) return true;

            std::size_t leave = m_;
            double ratio = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < m_; ++r) {
                const double v = at(r, enter);
                if (v <= kPivotEps) continue;
                const double q = rhs(r) / v;
                if (q < ratio - 1e-12 || (std::abs(q - ratio) <= 1e-12 && leave < m_ && basis_[r] < basis_[leave])) {
                    ratio = q;
                    leave = r;
                }
            }
            if (leave == m_) return false;
            degenerate_streak = ratio <= 1e-12 ? degenerate_streak + 1 : 0;
            pivot(leave, enter);
        }
        throw SolverError("builtin simplex exceeded its iteration limit");
    }

private:
    std::size_t m_;
    std::size_t n_;
    std::vector<double> a_;
    std::vector<std::size_t> basis_;
};

LpResult solve_lp(const DenseModel& d, const std::vector<double>& lower, const std::vector<double>& upper) {
    const std::size_t n = d.n;
    for (std::size_t j = 0; j < n; ++j) {
        if (lower[j] > upper[j] + kLpFeasTol) return {};
        if (lower[j] <= -kInfinity) throw SolverError("builtin backend requires finite lower bounds");
    }

    // Shifted variables y = x - lower >= 0; finite upper bounds become rows.
    struct Row {
        std::vector<double> coef;
        RowSense sense;
        double rhs;
    };
    std::vector<Row> rows;
    rows.reserve(d.rows.size() + n);
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        double shift = 0.0;
        for (std::size_t j = 0; j < n; ++j) shift += d.rows[i][j] * lower[j];
        rows.push_back({d.rows[i], d.senses[i], d.rhs[i] - shift});
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (upper[j] >= kInfinity) continue;
        std::vector<double> coef(n, 0.0);
        coef[j] = 1.0;
        rows.push_back({std::move(coef), RowSense::less_equal, upper[j] - lower[j]});
    }
    for (auto& r : rows) {
        if (r.rhs < 0.0) {
            for (double& c : r.coef) c = -c;
            r.rhs = -r.rhs;
            if (r.sense == RowSense::less_equal) r.sense = RowSense::greater_equal;
            else if (r.sense == RowSense::greater_equal) r.sense = RowSense::less_equal;
        }
    }

    const std::size_t m = rows.size();
    std::size_t n_slack = 0;
    std::size_t n_art = 0;
    for (const auto& r : rows) {
        if (r.sense != RowSense::equal) ++n_slack;
        if (r.sense != RowSense::less_equal) ++n_art;
    }
    const std::size_t cols = n + n_slack + n_art;
    Tableau tab(m, cols);
    std::vector<bool> is_art(cols, false);

    std::size_t slack_col = n;
    std::size_t art_col = n + n_slack;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = rows[i].coef[j];
        tab.rhs(i) = rows[i].rhs;
        switch (rows[i].sense) {
            case RowSense::less_equal:
                tab.at(i, slack_col) = 1.0;
                tab.basis()[i] = slack_col++;
                break;
            case RowSense::greater_equal:
                tab.at(i, slack_col++) = -1.0;
                [[fallthrough]];
            case RowSense::equal:
                tab.at(i, art_col) = 1.0;
                is_art[art_col] = true;
                tab.basis()[i] = art_col++;
                break;
        }
    }

    // Phase 1: minimize the sum of artificials.
    if (n_art > 0) {
        for (std::size_t i = 0; i < m; ++i) {
            if (!is_art[tab.basis()[i]]) continue;
            for (std::size_t c = 0; c <= cols; ++c) {
                if (c == cols || !is_art[c]) tab.at(m, c) -= tab.at(i, c);
            }
        }
        std::vector<bool> all(cols, true);
        tab.run(all);
        if (-tab.objective() > kLpFeasTol * std::max(1.0, static_cast<double>(m))) return {};
        // Drive artificials out of the basis where possible.
        for (std::size_t i = 0; i < m; ++i) {
            if (!is_art[tab.basis()[i]]) continue;
            for (std::size_t c = 0; c < cols; ++c) {
                if (!is_art[c] && std::abs(tab.at(i, c)) > kPivotEps) {
                    tab.pivot(i, c);
                    break;
                }
            }
        }
    }

    // Phase 2: minimize -objective.
    for (std::size_t c = 0; c <= cols; ++c) tab.at(m, c) = 0.0;
    for (std::size_t j = 0; j < n; ++j) tab.cost(j) = -d.objective[j];
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t b = tab.basis()[i];
        const double cb = tab.at(m, b);
        if (cb == 0.0) continue;
        for (std::size_t c = 0; c <= cols; ++c) tab.at(m, c) -= cb * tab.at(i, c);
    }
    std::vector<bool> eligible(cols, true);
    for (std::size_t c = 0; c < cols; ++c) eligible[c] = !is_art[c];
    if (!tab.run(eligible)) return {LpStatus::unbounded, 0.0, {}};

    LpResult out;
    out.status = LpStatus::optimal;
    out.x = lower;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t b = tab.basis()[i];
        if (b < n) out.x[b] = lower[b] + tab.rhs(i);
    }
    out.objective = d.objective_constant;
    for (std::size_t j = 0; j < n; ++j) out.objective += d.objective[j] * out.x[j];
    return out;
}

struct Node {
    std::vector<double> lower;
    std::vector<double> upper;
    double parent_bound;
};

}  // namespace

SolveOutcome solve_builtin(const MilpModel& model, const SolveSettings& settings) {
    const auto start = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    const DenseModel dense = densify(model);
    const std::size_t n = dense.n;
    std::vector<bool> integral(n, false);
    Node root{std::vector<double>(n), std::vector<double>(n), std::numeric_limits<double>::infinity()};
    for (std::size_t j = 0; j < n; ++j) {
        const auto& v = model.variable(j);
        integral[j] = v.kind != VarKind::continuous;
        root.lower[j] = integral[j] ? std::ceil(v.lower - kIntegralityTolerance) : v.lower;
        root.upper[j] = integral[j] && v.upper < kInfinity ? std::floor(v.upper + kIntegralityTolerance) : v.upper;
    }

    SolveOutcome out;
    bool have_incumbent = false;
    double incumbent_value = -std::numeric_limits<double>::infinity();
    double open_bound_pruned = -std::numeric_limits<double>::infinity();
    std::vector<Node> stack;
    stack.push_back(std::move(root));
    bool timed_out = false;

    const auto prune_threshold = [&](double inc) {
        return inc + std::max(1e-9, settings.gap * std::max(1.0, std::abs(inc)));
    };

    while (!stack.empty()) {
        if (elapsed() > settings.time_limit) {
            timed_out = true;
            break;
        }
        Node node = std::move(stack.back());
        stack.pop_back();
        if (have_incumbent && node.parent_bound <= prune_threshold(incumbent_value)) {
            open_bound_pruned = std::max(open_bound_pruned, std::min(node.parent_bound, kInfinity));
            continue;
        }

        LpResult lp = solve_lp(dense, node.lower, node.upper);
        if (lp.status == LpStatus::infeasible) continue;
        if (lp.status == LpStatus::unbounded) {
            out.status = SolveStatus::error;
            out.message = "LP relaxation is unbounded";
            return out;
        }
        if (have_incumbent && lp.objective <= prune_threshold(incumbent_value)) {
            open_bound_pruned = std::max(open_bound_pruned, lp.objective);
            continue;
        }

        std::size_t branch_var = n;
        double best_frac = kIntegralityTolerance;
        for (std::size_t j = 0; j < n; ++j) {
            if (!integral[j]) continue;
            const double frac = std::abs(lp.x[j] - std::round(lp.x[j]));
            if (frac > best_frac) {
                best_frac = frac;
                branch_var = j;
            }
        }
        if (branch_var == n) {
            for (std::size_t j = 0; j < n; ++j) {
                if (integral[j]) lp.x[j] = std::round(lp.x[j]);
            }
            const double value = model.objective().evaluate(lp.x);
            if (!have_incumbent || value > incumbent_value) {
                have_incumbent = true;
                incumbent_value = value;
                out.assignment = lp.x;
            }
            continue;
        }

        const double v = lp.x[branch_var];
        Node down{node.lower, node.upper, lp.objective};
        down.upper[branch_var] = std::floor(v);
        Node up{std::move(node.lower), std::move(node.upper), lp.objective};
        up.lower[branch_var] = std::ceil(v);
        // Depth-first: explore the nearer side first (pushed last).
        if (v - std::floor(v) > 0.5) {
            stack.push_back(std::move(down));
            stack.push_back(std::move(up));
        } else {
            stack.push_back(std::move(up));
            stack.push_back(std::move(down));
        }
    }

    if (timed_out) {
        for (const auto& node : stack) open_bound_pruned = std::max(open_bound_pruned, std::min(node.parent_bound, kInfinity));
        if (!have_incumbent) {
            out.status = SolveStatus::error;
            out.message = "time limit reached without a feasible solution";
            return out;
        }
        out.status = SolveStatus::time_limit_feasible;
    } else if (!have_incumbent) {
        out.status = SolveStatus::infeasible;
        return out;
    } else {
        out.status = SolveStatus::optimal;
    }
    out.objective_value = incumbent_value;
    const double bound = std::max(open_bound_pruned, incumbent_value);
    out.gap = (bound - incumbent_value) / std::max(1.0, std::abs(incumbent_value));
    return out;
}

}  // namespace changeover::milp::detail
