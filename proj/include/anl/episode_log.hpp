#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anl/errors.hpp"
#include "anl/rewards.hpp"
#include "anl/robot.hpp"

namespace anl {

// One record per control step; the complete input to every offline metric.
struct StepRecord {
    int t = 0;
    double x = 0, y = 0, z = 0;
    double roll = 0, pitch = 0, yaw = 0;
    double odom_yaw = 0;
    double wr = 0, wp = 0, wy = 0;
    double v_cmd = 0, w_cmd = 0;
    double v_act = 0, w_act = 0;
    double drift_x = 0, drift_y = 0;
    double d_c = 0;
    double d_goal = 0;
    double reward_total = 0;
    RewardBreakdown reward_components;
    Terminal terminal = Terminal::None;
};

struct EpisodeLog {
    std::vector<StepRecord> steps;

    bool empty() const { return steps.empty(); }
    std::size_t size() const { return steps.size(); }
    Terminal outcome() const { return steps.empty() ? Terminal::None : steps.back().terminal; }
};

inline nlohmann::json step_to_json(const StepRecord& r) {
    return nlohmann::json{
        {"t", r.t},
        {"x", r.x},
        {"y", r.y},
        {"z", r.z},
        {"roll", r.roll},
        {"pitch", r.pitch},
        {"yaw", r.yaw},
        {"odom_yaw", r.odom_yaw},
        {"wr", r.wr},
        {"wp", r.wp},
        {"wy", r.wy},
        {"v_cmd", r.v_cmd},
        {"w_cmd", r.w_cmd},
        {"v_act", r.v_act},
        {"w_act", r.w_act},
        {"drift_x", r.drift_x},
        {"drift_y", r.drift_y},
        {"d_c", r.d_c},
        {"d_goal", r.d_goal},
        {"reward_total", r.reward_total},
        {"reward_components",
         {{"g", r.reward_components.g},
          {"d", r.reward_components.d},
          {"s", r.reward_components.s},
          {"c", r.reward_components.c},
          {"e", r.reward_components.e},
          {"t", r.reward_components.t}}},
        {"terminal", terminal_name(r.terminal)},
    };
}

inline StepRecord step_from_json(const nlohmann::json& j) {
    StepRecord r;
    r.t = j.at("t").get<int>();
    r.x = j.at("x").get<double>();
    r.y = j.at("y").get<double>();
    r.z = j.at("z").get<double>();
    r.roll = j.at("roll").get<double>();
    r.pitch = j.at("pitch").get<double>();
    r.yaw = j.at("yaw").get<double>();
    r.odom_yaw = j.at("odom_yaw").get<double>();
    r.wr = j.at("wr").get<double>();
    r.wp = j.at("wp").get<double>();
    r.wy = j.at("wy").get<double>();
    r.v_cmd = j.at("v_cmd").get<double>();
    r.w_cmd = j.at("w_cmd").get<double>();
    r.v_act = j.at("v_act").get<double>();
    r.w_act = j.at("w_act").get<double>();
    r.drift_x = j.at("drift_x").get<double>();
    r.drift_y = j.at("drift_y").get<double>();
    r.d_c = j.at("d_c").get<double>();
    r.d_goal = j.at("d_goal").get<double>();
    r.reward_total = j.at("reward_total").get<double>();
    const auto& c = j.at("reward_components");
    r.reward_components.g = c.at("g").get<double>();
    r.reward_components.d = c.at("d").get<double>();
    r.reward_components.s = c.at("s").get<double>();
    r.reward_components.c = c.at("c").get<double>();
    r.reward_components.e = c.at("e").get<double>();
    r.reward_components.t = c.at("t").get<double>();
    r.terminal = terminal_from_name(j.at("terminal").get<std::string>());
    return r;
}

inline void save_episode_log(const EpisodeLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for write: " + path);
    for (const StepRecord& r : log.steps) out << step_to_json(r).dump() << "\n";
    if (!out) throw IoError("write failed: " + path);
}

inline EpisodeLog load_episode_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for read: " + path);
    EpisodeLog log;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw IoError(path + ":" + std::to_string(lineno) + ": malformed JSON record");
        try {
            log.steps.push_back(step_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return log;
}

}  // namespace anl
