#include "changeover/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "changeover/errors.hpp"

namespace changeover {

using ojson = nlohmann::ordered_json;

RunRecord make_record(const std::string& scenario, const SimulationResult& result, std::optional<double> scenario_mape,
                      bool excluded) {
    RunRecord r;
    r.scenario = scenario;
    r.policy = result.policy;
    r.status = to_string(result.status);
    r.failure_period = result.failure_period;
    r.message = result.message;
    r.initial_value = result.initial_value;
    r.final_value = result.final_value;
    r.percent_change = result.initial_value > Money{} ? percent_change(result) : 0.0;
    r.trades = result.total_trades;
    r.fees = result.total_fees;
    r.solves = result.solves;
    r.time_limit_events = result.time_limit_events;
    r.target_satisfied = result.target_satisfied;
    r.scenario_mape = scenario_mape;
    r.excluded = excluded;
    r.runtime = result.total_runtime;
    for (const auto& p : result.periods) {
        if (p.solved) r.solve_seconds.push_back(p.solve_seconds);
    }
    return r;
}

namespace {

struct ScenarioOutcome {
    std::vector<RunRecord> records;
    std::optional<ExclusionEntry> exclusion;
    std::optional<ScenarioFailure> failure;
};

ScenarioOutcome run_scenario(const ExperimentSuite& suite, const MarketHistory& market, const ScenarioSpec& spec) {
    ScenarioOutcome out;
    try {
        const TransitionInstance instance = instance_from_spec(market, spec);
        const ForecastSchedule schedule = build_forecast_schedule(instance, market, suite.forecaster);
        const auto mean_mape = schedule.mean_mape();
        const bool excluded = mean_mape && exclude_scenario(*mean_mape, suite.mape_threshold);
        if (excluded) out.exclusion = ExclusionEntry{spec.id, *mean_mape};
        for (const auto& policy : suite.policies) {
            SimulationConfig config;
            config.policy = policy;
            config.forecaster = suite.forecaster;
            config.solver = suite.solver;
            const SimulationResult result = run(instance, market, config, &schedule);
            out.records.push_back(make_record(spec.id, result, mean_mape, excluded));
        }
    } catch (const ChangeoverError& e) {
        out.records.clear();
        out.failure = ScenarioFailure{spec.id, e.what()};
    }
    return out;
}

}  // namespace

SuiteResults run_suite(const ExperimentSuite& suite, const MarketHistory& market) {
    SuiteResults results;
    for (const auto& p : suite.policies) results.policies.push_back(p.name());
    std::set<std::string> ids;
    for (const auto& s : suite.scenarios) {
        if (!ids.insert(s.id).second) throw InvalidArgument("duplicate scenario id " + s.id);
    }

    std::vector<ScenarioOutcome> outcomes(suite.scenarios.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < suite.scenarios.size(); i = next++) {
            outcomes[i] = run_scenario(suite, market, suite.scenarios[i]);
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(suite.jobs, suite.scenarios.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    for (auto& o : outcomes) {
        for (auto& r : o.records) results.records.push_back(std::move(r));
        if (o.exclusion) results.excluded.push_back(*o.exclusion);
        if (o.failure) results.failures.push_back(*o.failure);
    }
    return results;
}

std::string to_string(Metric metric) {
    switch (metric) {
        case Metric::percent_change: return "percent_change";
        case Metric::trades: return "trades";
        case Metric::fees: return "fees";
        case Metric::runtime: return "runtime";
    }
    return "unknown";
}

Metric parse_metric(const std::string& text) {
    if (text == "percent_change") return Metric::percent_change;
    if (text == "trades") return Metric::trades;
    if (text == "fees") return Metric::fees;
    if (text == "runtime") return Metric::runtime;
    throw InvalidArgument("unknown metric '" + text + "'");
}

double metric_value(const RunRecord& record, Metric metric) {
    switch (metric) {
        case Metric::percent_change: return record.percent_change;
        case Metric::trades: return static_cast<double>(record.trades);
        case Metric::fees: return record.fees.to_double();
        case Metric::runtime: return record.runtime;
    }
    return 0.0;
}

SummaryRow summarize_values(const std::string& policy, std::vector<double> values) {
    if (values.empty()) throw InvalidArgument("cannot summarize an empty group");
    SummaryRow row;
    row.policy = policy;
    row.count = values.size();
    const long double n = static_cast<long double>(values.size());
    long double sum = 0.0L;
    for (double v : values) sum += v;
    const long double mean = sum / n;
    long double ss = 0.0L;
    for (double v : values) ss += (v - mean) * (v - mean);
    row.mean = static_cast<double>(mean);
    row.std_dev = values.size() > 1 ? static_cast<double>(std::sqrt(ss / (n - 1.0L))) : 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    row.median = values.size() % 2 == 1
                     ? values[m]
                     : static_cast<double>((static_cast<long double>(values[m - 1]) + values[m]) / 2.0L);
    row.min = values.front();
    row.max = values.back();
    return row;
}

namespace {

bool usable(const RunRecord& r) { return r.ok() && !r.excluded; }

std::vector<std::string> roster_of(const std::vector<RunRecord>& records, const std::vector<std::string>& roster) {
    std::vector<std::string> out = roster;
    for (const auto& r : records) {
        if (std::find(out.begin(), out.end(), r.policy) == out.end()) out.push_back(r.policy);
    }
    return out;
}

}  // namespace

SummaryTable summarize(const std::vector<RunRecord>& records, Metric metric, const std::vector<std::string>& roster) {
    SummaryTable table;
    table.metric = metric;
    for (const auto& policy : roster_of(records, roster)) {
        std::vector<double> values;
        for (const auto& r : records) {
            if (r.policy == policy && usable(r)) values.push_back(metric_value(r, metric));
        }
        if (values.empty()) {
            table.warnings.push_back("policy " + policy + " has no usable results for " + to_string(metric));
            continue;
        }
        table.rows.push_back(summarize_values(policy, std::move(values)));
    }
    return table;
}

WinLossMatrix win_loss_tie(const std::vector<RunRecord>& records, Metric metric, double tolerance,
                           const std::vector<std::string>& roster) {
    if (!(tolerance >= 0.0)) throw InvalidArgument("tie tolerance must be non-negative");
    WinLossMatrix m;
    m.metric = metric;
    m.tolerance = tolerance;
    m.policies = roster_of(records, roster);
    std::vector<std::map<std::string, double>> by_policy(m.policies.size());
    for (const auto& r : records) {
        if (!usable(r)) continue;
        const auto i = static_cast<std::size_t>(std::find(m.policies.begin(), m.policies.end(), r.policy) - m.policies.begin());
        by_policy[i][r.scenario] = metric_value(r, metric);
    }
    const std::size_t p = m.policies.size();
    m.cells.assign(p, std::vector<WinLossTie>(p));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            WinLossTie& cell = m.cells[i][j];
            for (const auto& [scenario, vi] : by_policy[i]) {
                const auto it = by_policy[j].find(scenario);
                if (it == by_policy[j].end()) continue;
                const double diff = vi - it->second;
                if (diff > tolerance) {
                    ++cell.wins;
                } else if (-diff > tolerance) {
                    ++cell.losses;
                } else {
                    ++cell.ties;
                }
            }
            if (cell.wins + cell.losses + cell.ties == 0 && !by_policy[i].empty() && !by_policy[j].empty()) {
                throw InvalidArgument("policies " + m.policies[i] + " and " + m.policies[j] + " share no scenario");
            }
        }
    }
    return m;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionError("x and y lengths differ");
    if (x.size() < 2) throw InvalidArgument("a line fit needs at least two points");
    const long double n = static_cast<long double>(x.size());
    long double mx = 0.0L, my = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    long double sxx = 0.0L, sxy = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0L) throw InvalidArgument("a line fit needs at least two distinct x values");
    const long double slope = sxy / sxx;
    return LineFit{static_cast<double>(slope), static_cast<double>(my - slope * mx)};
}

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    std::string s = buf;
    if (s == "-0.00" || s == "-0.0000") s.erase(0, 1);
    return s;
}

int digits_for(Metric metric) { return metric == Metric::runtime ? 4 : 2; }

}  // namespace

std::string render_summary(const SummaryTable& table) {
    std::ostringstream out;
    const int d = digits_for(table.metric);
    out << "| Policy | Mean | Std Dev | Median | Max | Min |\n";
    out << "|---|---:|---:|---:|---:|---:|\n";
    for (const auto& r : table.rows) {
        out << "| " << r.policy << " | " << fixed(r.mean, d) << " | " << fixed(r.std_dev, d) << " | "
            << fixed(r.median, d) << " | " << fixed(r.max, d) << " | " << fixed(r.min, d) << " |\n";
    }
    return out.str();
}

std::string render_win_loss(const WinLossMatrix& matrix) {
    std::ostringstream out;
    out << "| Row Win/Row Loss/Tie |";
    for (const auto& p : matrix.policies) out << ' ' << p << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < matrix.policies.size(); ++i) out << "---|";
    out << '\n';
    for (std::size_t i = 0; i < matrix.policies.size(); ++i) {
        out << "| " << matrix.policies[i] << " |";
        for (const auto& c : matrix.cells[i]) out << ' ' << c.wins << '/' << c.losses << '/' << c.ties << " |";
        out << '\n';
    }
    return out.str();
}

std::string record_to_json(const RunRecord& r) {
    ojson j;
    j["scenario"] = r.scenario;
    j["policy"] = r.policy;
    j["status"] = r.status;
    j["failure_period"] = r.failure_period ? ojson(*r.failure_period) : ojson(nullptr);
    j["message"] = r.message;
    j["initial_value"] = r.initial_value.to_string();
    j["final_value"] = r.final_value.to_string();
    j["percent_change"] = r.percent_change;
    j["trades"] = r.trades;
    j["fees"] = r.fees.to_string();
    j["solves"] = r.solves;
    j["time_limit_events"] = r.time_limit_events;
    j["target_satisfied"] = r.target_satisfied;
    j["scenario_mape"] = r.scenario_mape ? ojson(*r.scenario_mape) : ojson(nullptr);
    j["excluded"] = r.excluded;
    return j.dump();
}

std::string timing_to_json(const RunRecord& r) {
    ojson j;
    j["scenario"] = r.scenario;
    j["policy"] = r.policy;
    j["runtime"] = r.runtime;
    j["solve_seconds"] = r.solve_seconds;
    return j.dump();
}

RunRecord record_from_json(const std::string& line) {
    try {
        const ojson j = ojson::parse(line);
        RunRecord r;
        r.scenario = j.at("scenario").get<std::string>();
        r.policy = j.at("policy").get<std::string>();
        r.status = j.at("status").get<std::string>();
        if (!j.at("failure_period").is_null()) r.failure_period = j.at("failure_period").get<std::size_t>();
        r.message = j.at("message").get<std::string>();
        r.initial_value = Money::parse(j.at("initial_value").get<std::string>());
        r.final_value = Money::parse(j.at("final_value").get<std::string>());
        r.percent_change = j.at("percent_change").get<double>();
        r.trades = j.at("trades").get<std::int64_t>();
        r.fees = Money::parse(j.at("fees").get<std::string>());
        r.solves = j.at("solves").get<std::size_t>();
        r.time_limit_events = j.at("time_limit_events").get<std::size_t>();
        r.target_satisfied = j.at("target_satisfied").get<bool>();
        if (!j.at("scenario_mape").is_null()) r.scenario_mape = j.at("scenario_mape").get<double>();
        r.excluded = j.at("excluded").get<bool>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad result record: ") + e.what());
    }
}

namespace {

struct Writer {
    std::filesystem::path dir;
    ReportBundle* bundle;

    void write(const std::string& name, const std::string& content) const {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + path.string());
        out << content;
        if (!out) throw DataError("write failed for " + path.string());
        bundle->files.push_back(path);
    }
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};

std::string svg_text(double x, double y, const std::string& text, const char* anchor = "middle") {
    std::ostringstream o;
    o << "<text x=\"" << fixed(x, 1) << "\" y=\"" << fixed(y, 1) << "\" font-size=\"11\" text-anchor=\"" << anchor
      << "\">" << text << "</text>\n";
    return o.str();
}

struct Frame {
    double x0, x1, y0, y1;
    static constexpr double left = 60, right = 580, top = 30, bottom = 360;
    double px(double x) const { return left + (x - x0) / (x1 - x0) * (right - left); }
    double py(double y) const { return bottom - (y - y0) / (y1 - y0) * (bottom - top); }
};

void pad_range(double& lo, double& hi) {
    if (hi - lo < 1e-12) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = (hi - lo) * 0.05;
    lo -= pad;
    hi += pad;
}

std::string axes(const Frame& f, const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    std::ostringstream o;
    o << "<rect x=\"" << Frame::left << "\" y=\"" << Frame::top << "\" width=\"" << Frame::right - Frame::left
      << "\" height=\"" << Frame::bottom - Frame::top << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
        const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
        o << svg_text(f.px(x), Frame::bottom + 15, fixed(x, 2));
        o << svg_text(Frame::left - 5, f.py(y) + 4, fixed(y, 2), "end");
    }
    o << svg_text((Frame::left + Frame::right) / 2, 18, title);
    o << svg_text((Frame::left + Frame::right) / 2, Frame::bottom + 32, xlabel);
    o << "<text x=\"14\" y=\"" << fixed((Frame::top + Frame::bottom) / 2, 1)
      << "\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << fixed((Frame::top + Frame::bottom) / 2, 1) << ")\">" << ylabel << "</text>\n";
    return o.str();
}

std::string svg_open() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"400\" viewBox=\"0 0 760 400\">\n"
           "<rect width=\"760\" height=\"400\" fill=\"white\"/>\n";
}

std::string scatter_svg(const SuiteResults& results) {
    std::map<std::string, double> naive;
    for (const auto& r : results.records) {
        if (r.policy == "Naive" && usable(r)) naive[r.scenario] = r.percent_change;
    }
    struct Series {
        std::string policy;
        std::vector<double> x, y;
    };
    std::vector<Series> series;
    for (const auto& policy : roster_of(results.records, results.policies)) {
        if (policy == "Naive") continue;
        Series s{policy, {}, {}};
        for (const auto& r : results.records) {
            if (r.policy != policy || !usable(r)) continue;
            const auto it = naive.find(r.scenario);
            if (it == naive.end()) continue;
            s.x.push_back(it->second);
            s.y.push_back(r.percent_change);
        }
        series.push_back(std::move(s));
    }
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    bool any = false;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!any) {
                x0 = x1 = s.x[i];
                y0 = y1 = s.y[i];
                any = true;
            }
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    pad_range(x0, x1);
    pad_range(y0, y1);
    const Frame f{x0, x1, y0, y1};
    std::ostringstream o;
    o << svg_open() << axes(f, "Percent change vs Naive", "Naive percent change (%)", "Policy percent change (%)");
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            o << "<circle cx=\"" << fixed(f.px(s.x[i]), 2) << "\" cy=\"" << fixed(f.py(s.y[i]), 2)
              << "\" r=\"2.5\" fill=\"" << color << "\" fill-opacity=\"0.7\"/>\n";
        }
        std::string legend = s.policy;
        try {
            const LineFit fit = fit_line(s.x, s.y);
            o << "<line x1=\"" << fixed(f.px(x0), 2) << "\" y1=\"" << fixed(f.py(fit.slope * x0 + fit.intercept), 2)
              << "\" x2=\"" << fixed(f.px(x1), 2) << "\" y2=\"" << fixed(f.py(fit.slope * x1 + fit.intercept), 2)
              << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
            legend += " (slope " + fixed(fit.slope, 3) + ")";
        } catch (const InvalidArgument&) {
        }
        o << "<circle cx=\"596\" cy=\"" << 40 + 16 * k << "\" r=\"4\" fill=\"" << color << "\"/>\n";
        o << svg_text(604, 44 + 16.0 * k, legend, "start");
    }
    o << "</svg>\n";
    return o.str();
}

std::string histogram_svg(const SuiteResults& results) {
    std::vector<double> times;
    for (const auto& r : results.records) times.insert(times.end(), r.solve_seconds.begin(), r.solve_seconds.end());
    constexpr std::size_t bins = 20;
    double lo = 0.0;
    double hi = times.empty() ? 1.0 : *std::max_element(times.begin(), times.end());
    if (hi <= lo) hi = lo + 1.0;
    std::vector<std::size_t> counts(bins, 0);
    for (double t : times) {
        const auto b = std::min<std::size_t>(bins - 1, static_cast<std::size_t>((t - lo) / (hi - lo) * bins));
        ++counts[b];
    }
    const double top = std::max<double>(1.0, static_cast<double>(*std::max_element(counts.begin(), counts.end())));
    const Frame f{lo, hi, 0.0, top * 1.05};
    std::ostringstream o;
    o << svg_open() << axes(f, "Solve runtime distribution", "Seconds per solve", "Solves");
    for (std::size_t b = 0; b < bins; ++b) {
        const double xa = f.px(lo + (hi - lo) * b / bins);
        const double xb = f.px(lo + (hi - lo) * (b + 1) / bins);
        const double y = f.py(static_cast<double>(counts[b]));
        o << "<rect x=\"" << fixed(xa, 2) << "\" y=\"" << fixed(y, 2) << "\" width=\"" << fixed(xb - xa - 1, 2)
          << "\" height=\"" << fixed(Frame::bottom - y, 2) << "\" fill=\"#1f77b4\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace

ReportBundle emit_report(const SuiteResults& results, const std::filesystem::path& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw DataError("cannot create " + directory.string() + ": " + ec.message());
    ReportBundle bundle;
    const Writer w{directory, &bundle};

    std::string lines, timings, exclusions, failures;
    for (const auto& r : results.records) {
        lines += record_to_json(r) + '\n';
        timings += timing_to_json(r) + '\n';
    }
    for (const auto& e : results.excluded) exclusions += ojson{{"scenario", e.scenario}, {"mape", e.mape}}.dump() + '\n';
    for (const auto& f : results.failures) failures += ojson{{"scenario", f.scenario}, {"message", f.message}}.dump() + '\n';
    w.write("results.jsonl", lines);
    w.write("timings.jsonl", timings);
    w.write("exclusions.jsonl", exclusions);
    w.write("failures.jsonl", failures);

    std::string summary = "# Summary statistics\n";
    std::string warnings;
    for (Metric m : {Metric::percent_change, Metric::trades, Metric::fees, Metric::runtime}) {
        const SummaryTable t = summarize(results.records, m, results.policies);
        summary += "\n## " + to_string(m) + "\n\n" + render_summary(t);
        for (const auto& msg : t.warnings) warnings += msg + '\n';
    }
    if (!warnings.empty()) summary += "\n## Warnings\n\n" + warnings;
    w.write("summary.md", summary);

    std::string wlt = "# Win/loss/tie on percent_change (tolerance 0.005)\n\n";
    try {
        wlt += render_win_loss(win_loss_tie(results.records, Metric::percent_change, 0.005, results.policies));
    } catch (const InvalidArgument& e) {
        wlt += std::string("unavailable: ") + e.what() + '\n';
    }
    w.write("win_loss_tie.md", wlt);
    w.write("scatter_vs_naive.svg", scatter_svg(results));
    w.write("runtime_histogram.svg", histogram_svg(results));
    return bundle;
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

}  // namespace

SuiteResults load_results(const std::filesystem::path& directory) {
    SuiteResults results;
    for (const auto& line : read_lines(directory / "results.jsonl")) {
        results.records.push_back(record_from_json(line));
        const auto& p = results.records.back().policy;
        if (std::find(results.policies.begin(), results.policies.end(), p) == results.policies.end()) {
            results.policies.push_back(p);
        }
    }
    if (std::filesystem::exists(directory / "timings.jsonl")) {
        std::map<std::pair<std::string, std::string>, std::size_t> index;
        for (std::size_t i = 0; i < results.records.size(); ++i) {
            index[{results.records[i].scenario, results.records[i].policy}] = i;
        }
        for (const auto& line : read_lines(directory / "timings.jsonl")) {
            try {
                const ojson j = ojson::parse(line);
                const auto it = index.find({j.at("scenario").get<std::string>(), j.at("policy").get<std::string>()});
                if (it == index.end()) continue;
                auto& r = results.records[it->second];
                r.runtime = j.at("runtime").get<double>();
                r.solve_seconds = j.at("solve_seconds").get<std::vector<double>>();
            } catch (const nlohmann::json::exception& e) {
                throw DataError(std::string("bad timing record: ") + e.what());
            }
        }
    }
    if (std::filesystem::exists(directory / "exclusions.jsonl")) {
        for (const auto& line : read_lines(directory / "exclusions.jsonl")) {
            const ojson j = ojson::parse(line);
            results.excluded.push_back({j.at("scenario").get<std::string>(), j.at("mape").get<double>()});
        }
    }
    if (std::filesystem::exists(directory / "failures.jsonl")) {
        for (const auto& line : read_lines(directory / "failures.jsonl")) {
            const ojson j = ojson::parse(line);
            results.failures.push_back({j.at("scenario").get<std::string>(), j.at("message").get<std::string>()});
        }
    }
    return results;
}

}  // namespace changeover
