#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "changeover/errors.hpp"
#include "changeover/experiments.hpp"

namespace py = pybind11;
using namespace changeover;

namespace {

std::vector<std::vector<double>> to_rows(const PriceMatrix& m) {
    std::vector<std::vector<double>> rows(m.periods(), std::vector<double>(m.assets()));
    for (std::size_t r = 0; r < m.periods(); ++r) {
        for (std::size_t a = 0; a < m.assets(); ++a) rows[r][a] = m.at(r, a).to_double();
    }
    return rows;
}

py::dict plan_dict(const TradePlan& plan) {
    py::list buys, sells, buy_flags, sell_flags;
    for (const auto& row : plan.rows) {
        buys.append(row.buys);
        sells.append(row.sells);
        buy_flags.append(row.buy_flags);
        sell_flags.append(row.sell_flags);
    }
    py::dict d;
    d["buys"] = buys;
    d["sells"] = sells;
    d["buy_flags"] = buy_flags;
    d["sell_flags"] = sell_flags;
    return d;
}

py::dict record_dict(const RunRecord& r) {
    py::dict d;
    d["scenario"] = r.scenario;
    d["policy"] = r.policy;
    d["status"] = r.status;
    d["percent_change"] = r.percent_change;
    d["trades"] = r.trades;
    d["fees"] = r.fees.to_double();
    d["runtime"] = r.runtime;
    d["excluded"] = r.excluded;
    d["scenario_mape"] = r.scenario_mape;
    return d;
}

RunRecord record_from(const py::dict& d) {
    RunRecord r;
    r.scenario = d["scenario"].cast<std::string>();
    r.policy = d["policy"].cast<std::string>();
    r.status = d.contains("status") ? d["status"].cast<std::string>() : "success";
    r.excluded = d.contains("excluded") && d["excluded"].cast<bool>();
    if (d.contains("percent_change")) r.percent_change = d["percent_change"].cast<double>();
    if (d.contains("trades")) r.trades = d["trades"].cast<std::int64_t>();
    if (d.contains("fees")) r.fees = Money::from_decimal(d["fees"].cast<double>());
    if (d.contains("runtime")) r.runtime = d["runtime"].cast<double>();
    return r;
}

std::vector<RunRecord> records_from(const py::list& items) {
    std::vector<RunRecord> out;
    for (const auto& item : items) out.push_back(record_from(item.cast<py::dict>()));
    return out;
}

py::dict summary_dict(const SummaryTable& t) {
    py::dict out;
    for (const auto& r : t.rows) {
        py::dict row;
        row["count"] = r.count;
        row["mean"] = r.mean;
        row["std_dev"] = r.std_dev;
        row["median"] = r.median;
        row["max"] = r.max;
        row["min"] = r.min;
        out[py::str(r.policy)] = row;
    }
    return out;
}

milp::SolveSettings settings_of(double gap, double time_limit, std::uint64_t seed, const std::string& backend) {
    milp::SolveSettings s;
    s.gap = gap;
    s.time_limit = time_limit;
    s.seed = seed;
    s.backend = milp::parse_backend(backend);
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-period portfolio changeover with fixed fees and whole shares";

    auto base_error = py::register_exception<ChangeoverError>(m, "ChangeoverError", PyExc_RuntimeError);
    py::register_exception<DimensionError>(m, "DimensionError", base_error.ptr());
    py::register_exception<InvalidArgument>(m, "InvalidArgument", base_error.ptr());
    py::register_exception<InfeasibleTradeError>(m, "InfeasibleTradeError", base_error.ptr());
    py::register_exception<DataError>(m, "DataError", base_error.ptr());
    py::register_exception<InfeasibleTargetError>(m, "InfeasibleTargetError", base_error.ptr());
    py::register_exception<DecodeError>(m, "DecodeError", base_error.ptr());
    py::register_exception<PatternCapError>(m, "PatternCapError", base_error.ptr());
    py::register_exception<SolverError>(m, "SolverError", base_error.ptr());

    py::class_<Money>(m, "Money")
        .def(py::init([](double dollars) { return Money::from_decimal(dollars); }), py::arg("dollars"))
        .def_static("from_cents", &Money::from_cents)
        .def_static("parse", [](const std::string& s) { return Money::parse(s); })
        .def_property_readonly("cents", &Money::cents)
        .def("__float__", &Money::to_double)
        .def("__str__", &Money::to_string)
        .def("__repr__", [](const Money& x) { return "Money('" + x.to_string() + "')"; })
        .def(py::self == py::self)
        .def(py::self < py::self)
        .def(py::self <= py::self)
        .def(py::self + py::self)
        .def(py::self - py::self);
    py::implicitly_convertible<py::float_, Money>();
    py::implicitly_convertible<py::int_, Money>();

    py::class_<PriceMatrix>(m, "PriceMatrix")
        .def(py::init([](const std::vector<std::vector<double>>& rows, std::vector<std::string> labels) {
                 return PriceMatrix::from_decimal_rows(rows, std::move(labels));
             }),
             py::arg("rows"), py::arg("labels") = std::vector<std::string>{})
        .def_property_readonly("periods", &PriceMatrix::periods)
        .def_property_readonly("assets", &PriceMatrix::assets)
        .def_property_readonly("labels", &PriceMatrix::labels)
        .def("at", &PriceMatrix::at)
        .def("to_list", &to_rows);

    py::class_<PortfolioState>(m, "PortfolioState")
        .def(py::init([](std::vector<std::int64_t> holdings, Money cash) {
                 PortfolioState s{std::move(holdings), cash};
                 s.validate();
                 return s;
             }),
             py::arg("holdings"), py::arg("cash"))
        .def_readonly("holdings", &PortfolioState::holdings)
        .def_readonly("cash", &PortfolioState::cash)
        .def(py::self == py::self);

    py::class_<TargetPortfolio>(m, "TargetPortfolio")
        .def(py::init([](std::vector<std::int64_t> shares) {
                 TargetPortfolio t{std::move(shares)};
                 t.validate();
                 return t;
             }),
             py::arg("min_shares"))
        .def_readonly("min_shares", &TargetPortfolio::min_shares);

    py::class_<TradeRow>(m, "TradeRow")
        .def(py::init([](std::vector<std::int64_t> buys, std::vector<std::int64_t> sells) {
                 TradeRow r = TradeRow::zeros(buys.size());
                 if (sells.size() != buys.size()) throw DimensionError("buys and sells lengths differ");
                 for (std::size_t a = 0; a < buys.size(); ++a) {
                     r.buys[a] = buys[a];
                     r.sells[a] = sells[a];
                     r.buy_flags[a] = buys[a] > 0;
                     r.sell_flags[a] = sells[a] > 0;
                 }
                 return r;
             }),
             py::arg("buys"), py::arg("sells"))
        .def_readonly("buys", &TradeRow::buys)
        .def_readonly("sells", &TradeRow::sells)
        .def("executed_flags", &TradeRow::executed_flags);

    py::class_<AssetUniverse>(m, "AssetUniverse")
        .def(py::init<std::vector<std::string>>())
        .def_property_readonly("symbols", &AssetUniverse::symbols)
        .def("__len__", &AssetUniverse::size);

    py::class_<TransitionInstance>(m, "TransitionInstance")
        .def(py::init<AssetUniverse, PortfolioState, TargetPortfolio, std::size_t, Money, PriceMatrix>(),
             py::arg("universe"), py::arg("initial"), py::arg("target"), py::arg("horizon"), py::arg("fee"),
             py::arg("prices"))
        .def_property_readonly("initial", &TransitionInstance::initial)
        .def_property_readonly("target", &TransitionInstance::target)
        .def_property_readonly("horizon", &TransitionInstance::horizon)
        .def_property_readonly("fee", &TransitionInstance::fee)
        .def_property_readonly("prices", &TransitionInstance::prices)
        .def_property_readonly("universe", &TransitionInstance::universe)
        .def("initial_value", &TransitionInstance::initial_value);

    m.def("portfolio_value",
          [](const PortfolioState& s, const std::vector<double>& prices) {
              const auto row = PriceMatrix::from_decimal_rows({prices});
              return portfolio_value(s, row.row(0));
          },
          py::arg("state"), py::arg("prices"));
    m.def("apply_trades",
          [](const PortfolioState& s, const TradeRow& t, const std::vector<double>& prices, Money fee) {
              const auto row = PriceMatrix::from_decimal_rows({prices});
              return apply_trades(s, t, row.row(0), fee);
          },
          py::arg("state"), py::arg("trades"), py::arg("prices"), py::arg("fee"));
    m.def("satisfies_target", &satisfies_target, py::arg("state"), py::arg("target"));

    m.def(
        "compute_big_m",
        [](const PriceMatrix& path, Money value, std::size_t periods) {
            const auto s = compute_big_m(path, value, periods);
            return py::make_tuple(s.value_bound, s.share_cap);
        },
        py::arg("path"), py::arg("value"), py::arg("periods"));

    m.def(
        "solve_policy",
        [](const TransitionInstance& instance, const std::string& policy, double gap, double time_limit,
           std::uint64_t seed, const std::string& backend) {
            const PolicyInputs in = PolicyInputs::from_instance(instance);
            const EnginePolicy p = parse_policy(policy);
            const PolicyModel model = p.family == PolicyFamily::colgen ? colgen::build_colgen_policy(in, p.colgen)
                                                                       : build_policy(p.compact, in);
            const auto sol = changeover::solve_policy(model, settings_of(gap, time_limit, seed, backend));
            py::dict d;
            d["objective"] = sol.objective;
            d["status"] = std::string(milp::to_string(sol.outcome.status));
            d["plan"] = plan_dict(sol.plan);
            d["share_cap"] = model.big_m.share_cap;
            return d;
        },
        py::arg("instance"), py::arg("policy") = "Base", py::arg("gap") = 1e-6, py::arg("time_limit") = 60.0,
        py::arg("seed") = 0, py::arg("backend") = "auto",
        "Solves one policy on the instance with the realized prices as the forecast.");
    m.def(
        "export_lp",
        [](const TransitionInstance& instance, const std::string& policy) {
            const PolicyInputs in = PolicyInputs::from_instance(instance);
            const EnginePolicy p = parse_policy(policy);
            const PolicyModel model = p.family == PolicyFamily::colgen ? colgen::build_colgen_policy(in, p.colgen)
                                                                       : build_policy(p.compact, in);
            return milp::export_lp_text(model.model);
        },
        py::arg("instance"), py::arg("policy") = "Base");
    m.def("backend_available", [](const std::string& b) { return milp::backend_available(milp::parse_backend(b)); });

    m.def("joint_pattern_count", &colgen::joint_pattern_count, py::arg("assets"), py::arg("periods"));

    py::class_<MarketHistory>(m, "MarketHistory")
        .def_property_readonly("symbols", [](const MarketHistory& h) { return h.universe.symbols(); })
        .def_property_readonly("prices", [](const MarketHistory& h) { return h.prices; })
        .def_property_readonly("periods", &MarketHistory::periods)
        .def("to_csv", &prices_to_csv);
    m.def(
        "parse_prices",
        [](const std::string& text) {
            auto r = parse_prices(text);
            return py::make_tuple(r.history, r.dropped);
        },
        py::arg("csv_text"));
    m.def(
        "load_prices",
        [](const std::filesystem::path& path) {
            auto r = load_prices(path);
            return py::make_tuple(r.history, r.dropped);
        },
        py::arg("path"));
    m.def("random_walk_market", &random_walk_market, py::arg("assets"), py::arg("rows"), py::arg("seed"),
          py::arg("volatility") = 0.02);

    py::class_<ScenarioSpec>(m, "ScenarioSpec")
        .def_readonly("id", &ScenarioSpec::id)
        .def_readonly("seed", &ScenarioSpec::seed)
        .def_readonly("start_date", &ScenarioSpec::start_date)
        .def_readonly("horizon", &ScenarioSpec::horizon)
        .def_readonly("fee", &ScenarioSpec::fee)
        .def_readonly("initial_budget", &ScenarioSpec::initial_budget)
        .def_readonly("target_budget", &ScenarioSpec::target_budget)
        .def_readonly("initial", &ScenarioSpec::initial)
        .def_readonly("target", &ScenarioSpec::target)
        .def_property_readonly("symbols", [](const ScenarioSpec& s) { return s.universe.symbols(); })
        .def("to_json", &scenario_to_json)
        .def(py::self == py::self);
    m.def(
        "generate_scenario",
        [](const MarketHistory& history, std::uint64_t seed, std::size_t min_assets, std::size_t max_assets,
           std::size_t horizon, std::size_t lookback, Money min_fee, Money max_fee, Money min_budget, Money max_budget,
           bool same_budget) {
            ScenarioRanges r;
            r.min_assets = min_assets;
            r.max_assets = max_assets;
            r.horizon = horizon;
            r.lookback = lookback;
            r.min_fee = min_fee;
            r.max_fee = max_fee;
            r.min_budget = min_budget;
            r.max_budget = max_budget;
            r.budget_mode = same_budget ? BudgetMode::same : BudgetMode::independent;
            auto s = generate_scenario(history, r, seed);
            return py::make_tuple(s.spec, s.instance);
        },
        py::arg("history"), py::arg("seed"), py::arg("min_assets") = 20, py::arg("max_assets") = 50,
        py::arg("horizon") = 30, py::arg("lookback") = 48, py::arg("min_fee") = Money::from_cents(200),
        py::arg("max_fee") = Money::from_cents(900), py::arg("min_budget") = Money::from_cents(1'500'000),
        py::arg("max_budget") = Money::from_cents(35'000'000), py::arg("same_budget") = false);
    m.def("write_scenarios", &write_scenarios, py::arg("path"), py::arg("specs"));
    m.def("read_scenarios", &read_scenarios, py::arg("path"));

    m.def(
        "forecast",
        [](const MarketHistory& market, std::size_t current_row, std::size_t horizon, const std::string& method,
           std::size_t lookback) {
            ForecastConfig c;
            c.method = parse_forecast_method(method);
            c.horizon = horizon;
            c.lookback = lookback;
            const auto f = forecast(market, current_row, c);
            return py::make_tuple(to_rows(f.prices), f.mape);
        },
        py::arg("market"), py::arg("current_row"), py::arg("horizon"), py::arg("method") = "drift",
        py::arg("lookback") = 48);
    m.def("mape", &mape, py::arg("forecast"), py::arg("realized"));
    m.def("exclude_scenario", &exclude_scenario, py::arg("mean_mape"), py::arg("threshold") = 10.0);

    m.def(
        "simulate",
        [](const TransitionInstance& instance, const MarketHistory& market, const std::string& policy,
           const std::string& forecaster, std::size_t lookback, double gap, double time_limit, std::uint64_t seed,
           const std::string& backend) {
            SimulationConfig c;
            c.policy = parse_policy(policy);
            c.forecaster.method = parse_forecast_method(forecaster);
            c.forecaster.lookback = lookback;
            c.solver = settings_of(gap, time_limit, seed, backend);
            const auto r = run(instance, market, c);
            py::list periods;
            for (const auto& p : r.periods) {
                py::dict d;
                d["t"] = p.t;
                d["label"] = p.label;
                d["buys"] = p.trades.buys;
                d["sells"] = p.trades.sells;
                d["fees"] = p.fees.to_double();
                d["holdings"] = p.holdings;
                d["cash"] = p.cash.to_double();
                d["value"] = p.value.to_double();
                d["solved"] = p.solved;
                d["solve_seconds"] = p.solve_seconds;
                periods.append(d);
            }
            py::dict d;
            d["policy"] = r.policy;
            d["status"] = to_string(r.status);
            d["message"] = r.message;
            d["failure_period"] = r.failure_period;
            d["initial_value"] = r.initial_value.to_double();
            d["final_value"] = r.final_value.to_double();
            d["percent_change"] = r.initial_value > Money{} ? percent_change(r) : 0.0;
            d["total_trades"] = r.total_trades;
            d["total_fees"] = r.total_fees.to_double();
            d["total_runtime"] = r.total_runtime;
            d["target_satisfied"] = r.target_satisfied;
            d["mean_mape"] = r.mean_mape;
            d["periods"] = periods;
            return d;
        },
        py::arg("instance"), py::arg("market"), py::arg("policy") = "Directional", py::arg("forecaster") = "drift",
        py::arg("lookback") = 48, py::arg("gap") = 1e-6, py::arg("time_limit") = 60.0, py::arg("seed") = 0,
        py::arg("backend") = "auto");
    m.def("synthetic_market", &synthetic_market, py::arg("universe"), py::arg("prices"), py::arg("history") = 0);
    m.def("percent_change", py::overload_cast<Money, Money>(&percent_change), py::arg("initial"), py::arg("final"));

    m.def(
        "run_suite",
        [](const MarketHistory& market, const std::vector<ScenarioSpec>& scenarios,
           const std::vector<std::string>& policies, const std::string& forecaster, std::size_t lookback,
           double mape_threshold, std::size_t jobs, double gap, double time_limit, const std::string& backend,
           const std::optional<std::filesystem::path>& out_dir) {
            ExperimentSuite suite;
            suite.scenarios = scenarios;
            for (const auto& p : policies) suite.policies.push_back(parse_policy(p));
            suite.forecaster.method = parse_forecast_method(forecaster);
            suite.forecaster.lookback = lookback;
            suite.mape_threshold = mape_threshold;
            suite.jobs = jobs;
            suite.solver = settings_of(gap, time_limit, 0, backend);
            SuiteResults res;
            {
                py::gil_scoped_release release;
                res = run_suite(suite, market);
                if (out_dir) emit_report(res, *out_dir);
            }
            py::list records;
            for (const auto& r : res.records) records.append(record_dict(r));
            py::list excluded;
            for (const auto& e : res.excluded) excluded.append(py::make_tuple(e.scenario, e.mape));
            py::dict d;
            d["policies"] = res.policies;
            d["records"] = records;
            d["excluded"] = excluded;
            return d;
        },
        py::arg("market"), py::arg("scenarios"), py::arg("policies"), py::arg("forecaster") = "drift",
        py::arg("lookback") = 48, py::arg("mape_threshold") = 10.0, py::arg("jobs") = 1, py::arg("gap") = 1e-6,
        py::arg("time_limit") = 60.0, py::arg("backend") = "auto", py::arg("out_dir") = py::none());

    m.def(
        "summarize",
        [](const py::list& records, const std::string& metric) {
            return summary_dict(summarize(records_from(records), parse_metric(metric)));
        },
        py::arg("records"), py::arg("metric") = "percent_change",
        "Records are dicts with scenario, policy and metric fields; status defaults to success.");
    m.def(
        "win_loss_tie",
        [](const py::list& records, const std::string& metric, double tolerance) {
            const auto w = win_loss_tie(records_from(records), parse_metric(metric), tolerance);
            py::dict out;
            for (std::size_t i = 0; i < w.policies.size(); ++i) {
                for (std::size_t j = 0; j < w.policies.size(); ++j) {
                    const auto& c = w.cells[i][j];
                    out[py::make_tuple(w.policies[i], w.policies[j])] = py::make_tuple(c.wins, c.losses, c.ties);
                }
            }
            return out;
        },
        py::arg("records"), py::arg("metric") = "percent_change", py::arg("tolerance") = 0.005);
    m.def(
        "fit_line",
        [](const std::vector<double>& x, const std::vector<double>& y) {
            const auto f = fit_line(x, y);
            return py::make_tuple(f.slope, f.intercept);
        },
        py::arg("x"), py::arg("y"));
}
