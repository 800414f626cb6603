#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "anl/curriculum.hpp"
#include "anl/policy_runner.hpp"

namespace anl {

struct EvalConfig {
    int episodes = 100;
    Family family = Family::Uneven;
    Ablation ablate = Ablation::None;
    ScenarioRanges ranges;  // defaults resolved per family at load time
    bool ranges_touched = false;
};

// The whole run configuration: every tunable default lives here, every key
// in the file must be known, and the raw text is echoed into out_dir for
// provenance.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "runs/out";
    SimConfig sim;
    SensorConfig sensors;
    RobotParams robot;
    RewardWeights rewards;
    bool rewards_c_th_set = false;
    PPOConfig ppo;
    int env_count = 8;
    bool degraded_patch = false;
    std::map<int, StageSpec> stages;
    EvalConfig eval;
    std::string raw_text;

    Trainer::Setup trainer_setup(std::atomic<bool>* interrupt = nullptr) const {
        Trainer::Setup s;
        s.ppo = ppo;
        s.sim = sim;
        s.sensors = sensors;
        s.rewards = rewards;
        s.robot = robot;
        s.env_count = env_count;
        s.out_dir = out_dir;
        s.seed = seed;
        s.stages = stages;
        s.interrupt = interrupt;
        return s;
    }

    void echo_into(const std::string& dir) const {
        std::filesystem::create_directories(dir);
        std::ofstream out(dir + "/config.echo");
        out << raw_text;
        nlohmann::json j;
        j["seed"] = seed;
        j["config_fnv64"] = fnv64_text(raw_text);
        std::ofstream meta(dir + "/run_meta.json");
        meta << j.dump(2) << "\n";
    }

    static std::uint64_t fnv64_text(const std::string& s) {
        std::uint64_t h = 14695981039346656037ULL;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        return h;
    }
};

namespace detail {

struct ConfigLine {
    std::string section;
    std::string key;
    std::string value;
    int lineno = 0;
};

inline std::vector<ConfigLine> tokenize_config(const std::string& text, const std::string& name) {
    std::vector<ConfigLine> lines;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    auto trim = [](std::string& s) {
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::string work = line;
        std::size_t hash = work.find('#');
        if (hash != std::string::npos) work = work.substr(0, hash);
        trim(work);
        if (work.empty()) continue;
        if (work.front() == '[') {
            if (work.back() != ']')
                throw ConfigError(name + ":" + std::to_string(lineno) + ": malformed section header");
            section = work.substr(1, work.size() - 2);
            continue;
        }
        std::size_t eq = work.find('=');
        if (eq == std::string::npos)
            throw ConfigError(name + ":" + std::to_string(lineno) + ": expected 'key = value'");
        ConfigLine cl;
        cl.section = section;
        cl.key = work.substr(0, eq);
        cl.value = work.substr(eq + 1);
        trim(cl.key);
        trim(cl.value);
        cl.lineno = lineno;
        if (cl.key.empty())
            throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
        lines.push_back(std::move(cl));
    }
    return lines;
}

struct ValueParser {
    const ConfigLine* cl;
    const std::string* file;

    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError(*file + ":" + std::to_string(cl->lineno) + ": " + why + " for key '" +
                          cl->key + "'");
    }

    double num() const {
        try {
            std::size_t used = 0;
            double v = std::stod(cl->value, &used);
            if (used != cl->value.size()) fail("trailing characters");
            return v;
        } catch (const std::exception&) {
            fail("expected a number");
        }
    }

    long integer() const {
        double v = num();
        long l = static_cast<long>(v);
        if (static_cast<double>(l) != v) fail("expected an integer");
        return l;
    }

    bool boolean() const {
        if (cl->value == "true" || cl->value == "1") return true;
        if (cl->value == "false" || cl->value == "0") return false;
        fail("expected true/false");
    }

    std::uint64_t u64() const {
        try {
            std::size_t used = 0;
            std::uint64_t v = std::stoull(cl->value, &used);
            if (used != cl->value.size()) fail("trailing characters");
            return v;
        } catch (const std::exception&) {
            fail("expected an unsigned integer");
        }
    }
};

inline void apply_stage_scenario_key(ScenarioRanges& r, const std::string& key, const ValueParser& v,
                                     bool& known) {
    known = true;
    if (key == "mu_min") r.mu_min = v.num();
    else if (key == "mu_max") r.mu_max = v.num();
    else if (key == "bump_min") r.bump_min = v.num();
    else if (key == "bump_max") r.bump_max = v.num();
    else if (key == "rest_min") r.rest_min = v.num();
    else if (key == "rest_max") r.rest_max = v.num();
    else if (key == "peak_min") r.peak_min = v.num();
    else if (key == "peak_max") r.peak_max = v.num();
    else if (key == "hill_height_min") r.hill_height_min = v.num();
    else if (key == "hill_height_max") r.hill_height_max = v.num();
    else if (key == "hill_radius_min") r.hill_radius_min = v.num();
    else if (key == "hill_radius_max") r.hill_radius_max = v.num();
    else if (key == "hills_min") r.hills_min = static_cast<int>(v.integer());
    else if (key == "hills_max") r.hills_max = static_cast<int>(v.integer());
    else if (key == "steep_hill_prob") r.steep_hill_prob = v.num();
    else if (key == "goal_dist_min") r.goal_dist_min = v.num();
    else if (key == "goal_dist_max") r.goal_dist_max = v.num();
    else if (key == "horizon") r.horizon_steps = static_cast<int>(v.integer());
    else if (key == "randomize_robot") r.randomize_robot = v.boolean();
    else if (key == "terrain_size") r.size_m = v.num();
    else if (key == "terrain_cell") r.cell_size = v.num();
    else known = false;
}

inline std::set<std::string> parse_module_list(const std::string& value, const ValueParser& v) {
    std::set<std::string> mods;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty()) continue;
        bool ok = false;
        for (const std::string& m : modules::all())
            if (m == item) ok = true;
        if (!ok) v.fail("unknown module '" + item + "'");
        mods.insert(item);
    }
    if (mods.empty()) v.fail("empty module list");
    return mods;
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text, const std::string& name) {
    RunConfig cfg;
    cfg.raw_text = text;
    auto lines = detail::tokenize_config(text, name);

    // stage sections may override family defaults, so collect them first
    std::map<int, std::vector<detail::ConfigLine>> stage_lines;
    std::vector<detail::ConfigLine> rest;
    for (auto& cl : lines) {
        if (cl.section.rfind("curriculum.stage", 0) == 0) {
            std::string ids = cl.section.substr(std::string("curriculum.stage").size());
            try {
                int id = std::stoi(ids);
                if (id < 1 || id > 5) throw std::out_of_range("stage");
                stage_lines[id].push_back(cl);
            } catch (const std::exception&) {
                throw ConfigError(name + ":" + std::to_string(cl.lineno) + ": unknown section '" +
                                  cl.section + "'");
            }
        } else {
            rest.push_back(cl);
        }
    }

    for (const auto& cl : rest) {
        detail::ValueParser v{&cl, &name};
        const std::string& s = cl.section;
        const std::string& k = cl.key;
        if (s.empty()) {
            if (k == "seed") cfg.seed = v.u64();
            else if (k == "out_dir") cfg.out_dir = cl.value;
            else v.fail("unknown key");
        } else if (s == "sim") {
            if (k == "dt") cfg.sim.dt = v.num();
            else if (k == "goal_tolerance") cfg.sim.goal_tolerance = v.num();
            else if (k == "flip_threshold") cfg.sim.flip_threshold = v.num();
            else if (k == "mu_ref") cfg.sim.mu_ref = v.num();
            else if (k == "c_lat") cfg.sim.c_lat = v.num();
            else if (k == "g_lat") cfg.sim.g_lat = v.num();
            else if (k == "bump_vel_gain") cfg.sim.bump_vel_gain = v.num();
            else if (k == "bump_omega_gain") cfg.sim.bump_omega_gain = v.num();
            else if (k == "n_beams") cfg.sensors.n_beams = static_cast<int>(v.integer());
            else if (k == "lidar_max_range") {
                cfg.sensors.max_range = v.num();
                cfg.sim.d_c_sentinel = v.num();
            } else if (k == "sensor_height") cfg.sensors.sensor_height = v.num();
            else if (k == "patch_resolution") cfg.sensors.patch_resolution = v.num();
            else if (k == "patch_clip") cfg.sensors.patch_clip = v.num();
            else if (k == "degraded_patch") cfg.degraded_patch = v.boolean();
            else v.fail("unknown key");
        } else if (s == "robot") {
            if (k == "wheel_joints") cfg.robot.wheel_joints = static_cast<int>(v.integer());
            else if (k == "mass") cfg.robot.mass = v.num();
            else if (k == "r_rob") cfg.robot.r_rob = v.num();
            else if (k == "wheel_base") cfg.robot.wheel_base = v.num();
            else if (k == "wheel_radius") cfg.robot.wheel_radius = v.num();
            else if (k == "v_max") cfg.robot.v_max = v.num();
            else if (k == "w_max") cfg.robot.w_max = v.num();
            else if (k == "pid_lin_kp") cfg.robot.pid_lin.kp = v.num();
            else if (k == "pid_lin_ki") cfg.robot.pid_lin.ki = v.num();
            else if (k == "pid_lin_kd") cfg.robot.pid_lin.kd = v.num();
            else if (k == "pid_ang_kp") cfg.robot.pid_ang.kp = v.num();
            else if (k == "pid_ang_ki") cfg.robot.pid_ang.ki = v.num();
            else if (k == "pid_ang_kd") cfg.robot.pid_ang.kd = v.num();
            else if (k == "odom_slip_bias") cfg.robot.odom_slip_bias = v.num();
            else v.fail("unknown key");
        } else if (s == "rewards") {
            if (k == "beta_g") cfg.rewards.beta_g = v.num();
            else if (k == "beta_d") cfg.rewards.beta_d = v.num();
            else if (k == "beta_s") cfg.rewards.beta_s = v.num();
            else if (k == "beta_c") cfg.rewards.beta_c = v.num();
            else if (k == "beta_e") cfg.rewards.beta_e = v.num();
            else if (k == "r_success") cfg.rewards.r_success = v.num();
            else if (k == "r_collision") cfg.rewards.r_collision = v.num();
            else if (k == "r_flips") cfg.rewards.r_flips = v.num();
            else if (k == "s_th") cfg.rewards.s_th = v.num();
            else if (k == "c_th") {
                cfg.rewards.c_th = v.num();
                cfg.rewards_c_th_set = true;
            } else v.fail("unknown key");
        } else if (s == "ppo") {
            if (k == "gamma") cfg.ppo.gamma = v.num();
            else if (k == "lambda_gae") cfg.ppo.lambda_gae = v.num();
            else if (k == "clip_eps") cfg.ppo.clip_eps = v.num();
            else if (k == "epochs_per_batch") cfg.ppo.epochs_per_batch = static_cast<int>(v.integer());
            else if (k == "minibatch_size") cfg.ppo.minibatch_size = static_cast<int>(v.integer());
            else if (k == "steps_per_batch") cfg.ppo.steps_per_batch = static_cast<int>(v.integer());
            else if (k == "learning_rate") cfg.ppo.learning_rate = v.num();
            else if (k == "value_coef") cfg.ppo.value_coef = v.num();
            else if (k == "entropy_coef") cfg.ppo.entropy_coef = v.num();
            else if (k == "max_grad_norm") cfg.ppo.max_grad_norm = v.num();
            else if (k == "init_log_std") cfg.ppo.init_log_std = v.num();
            else v.fail("unknown key");
        } else if (s == "curriculum") {
            if (k == "env_count") cfg.env_count = static_cast<int>(v.integer());
            else v.fail("unknown key");
        } else if (s == "eval") {
            if (k == "episodes") cfg.eval.episodes = static_cast<int>(v.integer());
            else if (k == "family") cfg.eval.family = family_from_name(cl.value);
            else if (k == "ablate") cfg.eval.ablate = ablation_from_name(cl.value);
            else {
                bool known = false;
                detail::apply_stage_scenario_key(cfg.eval.ranges, k, v, known);
                if (!known) v.fail("unknown key");
                cfg.eval.ranges_touched = true;
            }
        } else {
            throw ConfigError(name + ":" + std::to_string(cl.lineno) + ": unknown section '" + s + "'");
        }
    }

    for (auto& [id, cls] : stage_lines) {
        StageSpec spec = default_stage(id, cfg.robot);
        // family can be overridden, so apply it before the range keys
        for (const auto& cl : cls) {
            if (cl.key == "family") {
                detail::ValueParser v{&cl, &name};
                Family fam = family_from_name(cl.value);
                if (fam != spec.family) {
                    spec.family = fam;
                    spec.ranges = default_ranges(fam);
                }
            }
        }
        for (const auto& cl : cls) {
            detail::ValueParser v{&cl, &name};
            const std::string& k = cl.key;
            if (k == "family") continue;
            else if (k == "total_steps") spec.total_steps = v.integer();
            else if (k == "advance_success") spec.advance_success = v.num();
            else if (k == "advance_window") spec.advance_window = static_cast<int>(v.integer());
            else if (k == "train") spec.train = detail::parse_module_list(cl.value, v);
            else if (k == "degraded_patch") spec.degraded_patch = v.boolean();
            else {
                bool known = false;
                detail::apply_stage_scenario_key(spec.ranges, k, v, known);
                if (!known) v.fail("unknown key");
            }
        }
        spec.ranges.base_robot = cfg.robot;
        cfg.stages[id] = spec;
    }

    if (!cfg.rewards_c_th_set) cfg.rewards.c_th = 1.5 * cfg.robot.r_rob;
    cfg.robot.validate();
    cfg.ppo.validate();

    // eval ranges default to the eval family's presets when untouched
    ScenarioRanges base = default_ranges(cfg.eval.family);
    if (cfg.eval.ranges_touched) {
        // overrides were applied onto generic defaults; rebase the untouched
        // fields by re-applying onto the family defaults
        ScenarioRanges merged = base;
        // the simplest faithful merge: start from family defaults and apply
        // the raw eval lines again
        for (const auto& cl : detail::tokenize_config(text, name)) {
            if (cl.section != "eval") continue;
            if (cl.key == "episodes" || cl.key == "family" || cl.key == "ablate") continue;
            detail::ValueParser v{&cl, &name};
            bool known = false;
            detail::apply_stage_scenario_key(merged, cl.key, v, known);
        }
        cfg.eval.ranges = merged;
    } else {
        cfg.eval.ranges = base;
    }
    cfg.eval.ranges.base_robot = cfg.robot;
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path);
}

}  // namespace anl
