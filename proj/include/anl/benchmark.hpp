#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "anl/baselines.hpp"
#include "anl/env.hpp"
#include "anl/metrics.hpp"
#include "anl/rollout.hpp"

namespace anl {

// Runs one controller through one scenario and returns the full step log.
inline EpisodeLog run_episode(Controller& controller, const ScenarioSpec& scenario,
                              const SimConfig& sim_cfg, const SensorConfig& sensor_cfg,
                              const RewardWeights& weights, std::uint64_t seed) {
    Env env(scenario, sim_cfg, sensor_cfg, weights, seed);
    EpisodeLog log;
    while (!env.done() && env.step_index() < scenario.horizon_steps) {
        Action a = controller.act(env.observation(), env.robot());
        EnvStep step = env.step(a);
        log.steps.push_back(step.record);
        if (step.terminal != Terminal::None) break;
    }
    return log;
}

struct BenchRow {
    std::string method;
    MetricsReport report;
    std::vector<double> ep_vibration;
    std::vector<double> ep_drift_sim;
    std::vector<double> ep_elev_change;
    std::vector<int> ep_success;
};

struct BenchmarkTable {
    std::string scenario;
    int n_episodes = 0;
    std::uint64_t seed = 0;
    std::vector<BenchRow> rows;
};

using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

struct ControllerSpec {
    std::string name;
    ControllerFactory make;
};

// Every controller sees the identical scenario sequence derived from the
// benchmark seed. Episodes run on parallel workers; rows and episode slots
// are fixed up front so the merge order is deterministic.
inline BenchmarkTable run_benchmark(const std::vector<ControllerSpec>& controllers, Family family,
                                    const ScenarioRanges& ranges, const SimConfig& sim_cfg,
                                    const SensorConfig& sensor_cfg, const RewardWeights& weights,
                                    int n_episodes, std::uint64_t seed,
                                    std::vector<std::vector<EpisodeLog>>* logs_out = nullptr) {
    if (n_episodes <= 0) throw InvalidArgument("n_episodes must be positive");
    BenchmarkTable table;
    table.scenario = family_name(family);
    table.n_episodes = n_episodes;
    table.seed = seed;

    int n_ctrl = static_cast<int>(controllers.size());
    std::vector<std::vector<EpisodeLog>> logs(static_cast<std::size_t>(n_ctrl));
    for (auto& v : logs) v.resize(static_cast<std::size_t>(n_episodes));

    parallel_for(n_ctrl * n_episodes, [&](int k) {
        int c = k / n_episodes;
        int i = k % n_episodes;
        ScenarioSpec scenario = sample_scenario(family, mix64(seed, static_cast<std::uint64_t>(i)), ranges);
        std::unique_ptr<Controller> ctrl = controllers[static_cast<std::size_t>(c)].make();
        logs[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] =
            run_episode(*ctrl, scenario, sim_cfg, sensor_cfg, weights,
                        mix64(seed, static_cast<std::uint64_t>(i), 0x455049ULL));
    });

    for (int c = 0; c < n_ctrl; ++c) {
        BenchRow row;
        row.method = controllers[static_cast<std::size_t>(c)].name;
        row.report = aggregate_metrics(logs[static_cast<std::size_t>(c)]);
        for (const EpisodeLog& log : logs[static_cast<std::size_t>(c)]) {
            row.ep_vibration.push_back(log.empty() ? 0.0 : metric_vibration(log));
            row.ep_drift_sim.push_back(log.empty() ? 0.0 : metric_drift_sim(log));
            row.ep_elev_change.push_back(log.size() >= 2 ? metric_elevation_change(log) : 0.0);
            row.ep_success.push_back(log.outcome() == Terminal::Success ? 1 : 0);
        }
        table.rows.push_back(std::move(row));
    }
    if (logs_out) *logs_out = std::move(logs);
    return table;
}

// ---------------------------------------------------------------------------
// Table emission. CSV columns match the benchmark reporting convention with
// the per-step metrics scaled by 100.

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void emit_table_csv(const BenchmarkTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for write: " + path);
    out << "scenario,method,traj_len_m,success_rate,vibration_x100,elev_change_x100,drift_x100\n";
    for (const BenchRow& r : table.rows) {
        out << table.scenario << ',' << r.method << ',' << detail::fmt_g17(r.report.trajectory_length)
            << ',' << detail::fmt_g17(r.report.success) << ','
            << detail::fmt_g17(r.report.vibration * 100.0) << ','
            << detail::fmt_g17(r.report.elevation_change * 100.0) << ','
            << detail::fmt_g17(r.report.drift_sim * 100.0) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline CsvTable parse_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for read: " + path);
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) {
                cells.push_back(line.substr(pos));
                break;
            }
            cells.push_back(line.substr(pos, comma - pos));
            pos = comma + 1;
        }
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

inline void emit_table_json(const BenchmarkTable& table, const std::string& path) {
    nlohmann::json j;
    j["scenario"] = table.scenario;
    j["n_episodes"] = table.n_episodes;
    j["seed"] = table.seed;
    j["rows"] = nlohmann::json::array();
    for (const BenchRow& r : table.rows) {
        nlohmann::json row;
        row["method"] = r.method;
        row["traj_len_m"] = r.report.trajectory_length;
        row["success_rate"] = r.report.success;
        row["vibration"] = r.report.vibration;
        row["elevation_change"] = r.report.elevation_change;
        row["drift_sim"] = r.report.drift_sim;
        row["drift_odom"] = r.report.drift_odom;
        row["n_episodes"] = r.report.n_episodes;
        row["ep_vibration"] = r.ep_vibration;
        row["ep_drift_sim"] = r.ep_drift_sim;
        row["ep_elev_change"] = r.ep_elev_change;
        row["ep_success"] = r.ep_success;
        j["rows"].push_back(std::move(row));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for write: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Stability plot: per-step s_t = |wr| + |wp| as one SVG polyline per series.

inline void emit_stability_plot(const std::vector<std::pair<std::string, EpisodeLog>>& series,
                                const std::string& path) {
    if (series.empty()) throw InvalidArgument("stability plot needs at least one log");
    for (const auto& [name, log] : series)
        if (log.empty()) throw InvalidArgument("stability plot series '" + name + "' is empty");

    const double width = 860, height = 420;
    const double ml = 60, mr = 180, mt = 20, mb = 45;
    const double pw = width - ml - mr, ph = height - mt - mb;

    std::size_t max_steps = 1;
    double max_s = 1.4;  // observed vibration range tops out around 1.4
    for (const auto& [name, log] : series) {
        max_steps = std::max(max_steps, log.size());
        for (const StepRecord& r : log.steps) max_s = std::max(max_s, std::abs(r.wr) + std::abs(r.wp));
    }

    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    std::ofstream out(path);
    if (!out) throw IoError("cannot open for write: " + path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    // axes
    out << "  <line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 7; ++i) {
        double v = max_s * i / 7.0;
        double y = mt + ph - ph * i / 7.0;
        char lab[32];
        std::snprintf(lab, sizeof(lab), "%.2f", v);
        out << "  <text x=\"" << ml - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << lab << "</text>\n";
        out << "  <line x1=\"" << ml - 4 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\"" << y
            << "\" stroke=\"black\"/>\n";
    }
    out << "  <text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-size=\"12\">step</text>\n";
    out << "  <text x=\"16\" y=\"" << mt + ph / 2
        << "\" font-size=\"12\" transform=\"rotate(-90 16 " << mt + ph / 2
        << ")\" text-anchor=\"middle\">stability |wr|+|wp| (rad/s)</text>\n";

    int si = 0;
    for (const auto& [name, log] : series) {
        const char* color = kColors[si % 6];
        out << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.4\" points=\"";
        for (std::size_t i = 0; i < log.size(); ++i) {
            double sx = ml + pw * (max_steps > 1 ? static_cast<double>(i) / (max_steps - 1) : 0.0);
            double s = std::abs(log.steps[i].wr) + std::abs(log.steps[i].wp);
            double sy = mt + ph - ph * std::min(s / max_s, 1.0);
            out << (i ? " " : "") << static_cast<int>(sx * 100) / 100.0 << ","
                << static_cast<int>(sy * 100) / 100.0;
        }
        out << "\"/>\n";
        double ly = mt + 16 + 18 * si;
        out << "  <line x1=\"" << ml + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << ml + pw + 34
            << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "  <text x=\"" << ml + pw + 40 << "\" y=\"" << ly << "\" font-size=\"11\">" << name
            << "</text>\n";
        ++si;
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace anl
