#include "changeover/engine.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "changeover/errors.hpp"

namespace changeover {

std::string EnginePolicy::name() const {
    if (family == PolicyFamily::colgen) return colgen::variant_name(colgen.variant);
    return compact.name();
}

EnginePolicy EnginePolicy::from_compact(PolicyConfig config) {
    EnginePolicy p;
    p.family = PolicyFamily::compact;
    p.compact = config;
    return p;
}

EnginePolicy EnginePolicy::from_colgen(colgen::Variant variant, colgen::MasterMode mode) {
    EnginePolicy p;
    p.family = PolicyFamily::colgen;
    p.colgen.variant = variant;
    p.colgen.mode = mode;
    return p;
}

EnginePolicy parse_policy(const std::string& name) {
    if (name == "Naive") return EnginePolicy::from_compact({PolicyKind::naive, 0.0});
    if (name == "Directional") return EnginePolicy::from_compact({PolicyKind::directional, 0.0});
    if (name == "Base") return EnginePolicy::from_compact({PolicyKind::base, 0.0});
    if (name == "ColGen_True") return EnginePolicy::from_colgen(colgen::Variant::colgen_true);
    if (name == "ColGen_False") return EnginePolicy::from_colgen(colgen::Variant::colgen_false);
    if (name.rfind("DirP_", 0) == 0 && name.size() > 5) {
        const std::string digits = name.substr(5);
        if (digits.find_first_not_of("0123456789") == std::string::npos && digits.size() <= 6) {
            return EnginePolicy::from_compact({PolicyKind::penalized, std::stoi(digits) / 100.0});
        }
    }
    throw InvalidArgument("unknown policy '" + name +
                          "' (expected Naive, Directional, Base, DirP_<percent>, ColGen_True or ColGen_False)");
}

std::optional<double> ForecastSchedule::mean_mape() const {
    long double weighted = 0.0L;
    std::size_t cells = 0;
    for (std::size_t t = 0; t < forecasts.size(); ++t) {
        if (!mape[t]) continue;
        const std::size_t c = forecasts[t].periods() * forecasts[t].assets();
        weighted += static_cast<long double>(*mape[t]) * c;
        cells += c;
    }
    if (cells == 0) return std::nullopt;
    return static_cast<double>(weighted / cells);
}

MarketAlignment align_market(const TransitionInstance& instance, const MarketHistory& market) {
    MarketAlignment al;
    al.start_row = market.row_of(instance.prices().label(0));
    if (al.start_row == market.periods()) {
        throw DataError("market has no row labelled " + instance.prices().label(0));
    }
    if (al.start_row + instance.horizon() >= market.periods()) throw DataError("market ends before the horizon");
    for (const auto& symbol : instance.universe().symbols()) {
        const std::size_t c = market.universe.index_of(symbol);
        if (c == market.universe.size()) throw DataError("market lacks asset " + symbol);
        al.columns.push_back(c);
    }
    for (std::size_t r = 0; r <= instance.horizon(); ++r) {
        for (std::size_t a = 0; a < al.columns.size(); ++a) {
            if (market.prices.at(al.start_row + r, al.columns[a]) != instance.prices().at(r, a)) {
                throw DataError("market and instance prices differ at " + instance.prices().label(r));
            }
        }
    }
    return al;
}

ForecastSchedule build_forecast_schedule(const TransitionInstance& instance, const MarketHistory& market,
                                         const ForecastConfig& config) {
    const auto al = align_market(instance, market);
    const MarketHistory view = market.select_assets(al.columns);
    ForecastSchedule schedule;
    const std::size_t T = instance.horizon();
    for (std::size_t t = 0; t < T; ++t) {
        ForecastConfig c = config;
        c.horizon = T - t;
        Forecast f = forecast(view, al.start_row + t, c);
        schedule.forecasts.push_back(std::move(f.prices));
        schedule.mape.push_back(f.mape);
    }
    return schedule;
}

std::string to_string(RunStatus status) {
    switch (status) {
        case RunStatus::success: return "success";
        case RunStatus::infeasible: return "infeasible";
        case RunStatus::solver_error: return "solver_error";
        case RunStatus::forecast_error: return "forecast_error";
        case RunStatus::trade_error: return "trade_error";
        case RunStatus::target_missed: return "target_missed";
    }
    return "unknown";
}

namespace {

PolicyModel build_for(const EnginePolicy& policy, const PolicyInputs& inputs) {
    if (policy.family == PolicyFamily::colgen) return colgen::build_colgen_policy(inputs, policy.colgen);
    return build_policy(policy.compact, inputs);
}

void export_lp(const SimulationConfig& config, const PolicyModel& model, std::size_t t) {
    if (!config.record_lp_exports || config.export_dir.empty()) return;
    std::filesystem::create_directories(config.export_dir);
    const auto file = config.export_dir / (config.policy.name() + "_t" + std::to_string(t) + ".lp");
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out << milp::export_lp_text(model.model);
}

void fail(SimulationResult& result, RunStatus status, std::size_t t, std::string message) {
    result.status = status;
    result.failure_period = t;
    result.message = std::move(message);
}

}  // namespace

SimulationResult run(const TransitionInstance& instance, const MarketHistory& market, const SimulationConfig& config,
                     const ForecastSchedule* schedule) {
    const std::size_t T = instance.horizon();
    if (config.horizon && *config.horizon != T) {
        throw InvalidArgument("configured horizon " + std::to_string(*config.horizon) + " != instance horizon " +
                              std::to_string(T));
    }
    if (schedule && schedule->forecasts.size() != T) throw InvalidArgument("forecast schedule length != horizon");
    const bool naive = config.policy.family == PolicyFamily::compact && config.policy.compact.kind == PolicyKind::naive;
    const auto al = align_market(instance, market);
    std::optional<MarketHistory> view;

    SimulationResult result;
    result.policy = config.policy.name();
    const PriceMatrix& realized = instance.prices();
    const Money fee = instance.fee();
    PortfolioState state = instance.initial();
    result.initial_value = portfolio_value(state, realized.row(0));

    long double mape_sum = 0.0L;
    std::size_t mape_cells = 0;
    for (std::size_t t = 0; t <= T; ++t) {
        PeriodRecord rec;
        rec.t = t;
        rec.label = realized.label(t);
        const auto y = realized.row(t);
        rec.prices.assign(y.begin(), y.end());
        rec.value_before = portfolio_value(state, y);
        rec.trades = TradeRow::zeros(instance.assets());

        const bool decide = t < T && (!naive || t == 0);
        if (decide) {
            PriceMatrix predicted;
            std::optional<double> period_mape;
            try {
                if (schedule) {
                    predicted = schedule->forecasts[t];
                    period_mape = schedule->mape[t];
                } else {
                    if (!view) view = market.select_assets(al.columns);
                    ForecastConfig fc = config.forecaster;
                    fc.horizon = T - t;
                    Forecast f = forecast(*view, al.start_row + t, fc);
                    predicted = std::move(f.prices);
                    period_mape = f.mape;
                }
                if (predicted.periods() != T - t || predicted.assets() != instance.assets()) {
                    throw DimensionError("forecast shape does not match the remaining horizon");
                }
            } catch (const ChangeoverError& e) {
                fail(result, RunStatus::forecast_error, t, e.what());
                break;
            }
            if (period_mape) {
                mape_sum += static_cast<long double>(*period_mape) * predicted.periods() * predicted.assets();
                mape_cells += predicted.periods() * predicted.assets();
            }
            const std::vector<std::vector<Money>> current{rec.prices};
            PolicyInputs inputs{PriceMatrix::stack(PriceMatrix::from_rows(current, {rec.label}), predicted), state,
                                instance.target(), fee};
            rec.forecast = std::move(predicted);
            try {
                const PolicyModel model = build_for(config.policy, inputs);
                export_lp(config, model, t);
                const auto started = std::chrono::steady_clock::now();
                PolicySolution sol = solve_policy(model, config.solver);
                rec.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
                rec.solved = true;
                rec.solver_status = milp::to_string(sol.outcome.status);
                rec.time_limit_hit = sol.outcome.status == milp::SolveStatus::time_limit_feasible;
                rec.trades = sol.plan.rows.at(0);
                result.solves += 1;
                result.total_runtime += rec.solve_seconds;
                result.time_limit_events += rec.time_limit_hit ? 1 : 0;
            } catch (const InfeasibleTargetError& e) {
                fail(result, RunStatus::infeasible, t, e.what());
                break;
            } catch (const ChangeoverError& e) {
                fail(result, RunStatus::solver_error, t, e.what());
                break;
            }
            try {
                state = apply_trades(state, rec.trades, y, fee);
            } catch (const InfeasibleTradeError& e) {
                fail(result, RunStatus::trade_error, t, e.what());
                break;
            }
        }
        rec.fees = fee * rec.trades.executed_flags();
        rec.holdings = state.holdings;
        rec.cash = state.cash;
        rec.value = portfolio_value(state, y);
        result.total_trades += rec.trades.executed_flags();
        result.total_fees += rec.fees;
        result.periods.push_back(std::move(rec));
    }

    if (mape_cells > 0) result.mean_mape = static_cast<double>(mape_sum / mape_cells);
    result.final_value = portfolio_value(state, realized.row(result.periods.empty() ? 0 : result.periods.size() - 1));
    result.target_satisfied = satisfies_target(state, instance.target());
    if (result.ok() && !result.target_satisfied) {
        fail(result, RunStatus::target_missed, T, "final holdings do not meet the target portfolio");
    }
    return result;
}

double percent_change(Money initial, Money final_value) {
    if (initial <= Money{}) throw InvalidArgument("initial portfolio value must be positive");
    return static_cast<double>(100.0L * static_cast<long double>(final_value.cents() - initial.cents()) /
                               static_cast<long double>(initial.cents()));
}

double percent_change(const SimulationResult& result) {
    return percent_change(result.initial_value, result.final_value);
}

namespace {

std::vector<std::string> synthetic_labels(std::size_t count) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(synthetic_date(i));
    return out;
}

}  // namespace

MarketHistory synthetic_market(const AssetUniverse& universe, const PriceMatrix& prices, std::size_t history) {
    if (universe.size() != prices.assets()) throw DimensionError("universe and price columns differ");
    if (prices.empty()) throw InvalidArgument("synthetic market needs at least one row");
    std::vector<Money> values;
    const auto first = prices.row(0);
    for (std::size_t r = 0; r < history; ++r) values.insert(values.end(), first.begin(), first.end());
    for (std::size_t r = 0; r < prices.periods(); ++r) {
        const auto row = prices.row(r);
        values.insert(values.end(), row.begin(), row.end());
    }
    MarketHistory m{universe, PriceMatrix(prices.assets(), std::move(values), synthetic_labels(history + prices.periods())),
                    std::nullopt};
    m.validate();
    return m;
}

TransitionInstance relabel_instance(const TransitionInstance& instance, const MarketHistory& market,
                                    std::size_t start_row) {
    if (start_row + instance.horizon() >= market.periods()) throw DataError("market ends before the horizon");
    std::vector<std::string> labels(market.prices.labels().begin() + static_cast<std::ptrdiff_t>(start_row),
                                    market.prices.labels().begin() +
                                        static_cast<std::ptrdiff_t>(start_row + instance.prices().periods()));
    const auto& p = instance.prices();
    std::vector<Money> values;
    for (std::size_t r = 0; r < p.periods(); ++r) {
        const auto row = p.row(r);
        values.insert(values.end(), row.begin(), row.end());
    }
    return TransitionInstance(instance.universe(), instance.initial(), instance.target(), instance.horizon(),
                              instance.fee(), PriceMatrix(p.assets(), std::move(values), std::move(labels)));
}

}  // namespace changeover
