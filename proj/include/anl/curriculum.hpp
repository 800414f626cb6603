#pragma once

#include <atomic>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "anl/models.hpp"
#include "anl/ppo.hpp"
#include "anl/rollout.hpp"

namespace anl {

// One curriculum stage: scenario family, trainable-module mask, budget and
// advance rule. The stage order itself is fixed.
struct StageSpec {
    int id = 1;
    Family family = Family::Adaptive;
    std::set<std::string> train;  // five-model mask; the critic always trains
    long total_steps = 500000;
    double advance_success = 0.8;
    int advance_window = 100;
    ScenarioRanges ranges;
    bool degraded_patch = false;
};

inline StageSpec default_stage(int id, const RobotParams& robot) {
    StageSpec s;
    s.id = id;
    switch (id) {
        case 1:
            s.family = Family::Adaptive;
            s.train = {modules::kPolicy, modules::kAdaptive};
            s.total_steps = 500000;
            s.advance_success = 0.8;
            break;
        case 2:
            s.family = Family::Uneven;
            s.train = {modules::kStable, modules::kAdaptive};
            s.total_steps = 400000;
            s.advance_success = 0.7;
            break;
        case 3:
            s.family = Family::Obstacles;
            s.train = {modules::kLidar, modules::kPolicy};
            s.total_steps = 400000;
            s.advance_success = 0.7;
            break;
        case 4:
            s.family = Family::Hills;
            s.train = {modules::kElevation, modules::kPolicy};
            s.total_steps = 400000;
            s.advance_success = 0.8;
            break;
        case 5:
            s.family = Family::Rich;
            s.train = {modules::kLidar, modules::kElevation};
            s.total_steps = 300000;
            s.advance_success = 0.6;
            break;
        default:
            throw InvalidArgument("stage id must be 1..5");
    }
    s.ranges = default_ranges(s.family);
    s.ranges.base_robot = robot;
    return s;
}

enum class StageOutcome { Advanced, Stalled, Interrupted };

inline const char* stage_outcome_name(StageOutcome o) {
    switch (o) {
        case StageOutcome::Advanced: return "advanced";
        case StageOutcome::Stalled: return "stalled";
        case StageOutcome::Interrupted: return "interrupted";
    }
    return "stalled";
}

struct StageReport {
    int stage = 0;
    std::string family;
    StageOutcome outcome = StageOutcome::Stalled;
    long env_steps = 0;
    long episodes = 0;
    int batches = 0;
    double trailing_success = 0.0;
    double success_rate_all = 0.0;
    double mean_episode_reward = 0.0;
    RewardBreakdown mean_step_components;  // per-step means over the stage
    double vibration = 0.0;
    double drift_sim = 0.0;
    double elevation_change = 0.0;
    double drift_odom = 0.0;
    double traj_len = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["stage"] = stage;
        j["family"] = family;
        j["outcome"] = stage_outcome_name(outcome);
        j["env_steps"] = env_steps;
        j["episodes"] = episodes;
        j["batches"] = batches;
        j["trailing_success"] = trailing_success;
        j["success_rate_all"] = success_rate_all;
        j["mean_episode_reward"] = mean_episode_reward;
        j["mean_step_components"] = {{"g", mean_step_components.g}, {"d", mean_step_components.d},
                                     {"s", mean_step_components.s}, {"c", mean_step_components.c},
                                     {"e", mean_step_components.e}, {"t", mean_step_components.t}};
        j["metrics"] = {{"vibration", vibration},
                        {"drift_sim", drift_sim},
                        {"elevation_change", elevation_change},
                        {"drift_odom", drift_odom},
                        {"traj_len", traj_len}};
        return j;
    }
};

inline std::uint64_t fnv64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file: " + path);
    std::uint64_t h = 14695981039346656037ULL;
    char buf[8192];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    return h;
}

// Owns parameters and optimizer state across the staged run. Rollouts fan
// out to one worker per env; updates run on chunked minibatches. A resume
// bundle (params + moments + dynamic state) is written at every stage exit
// so an interrupted run can continue bit-exactly.
class Trainer {
public:
    struct Setup {
        PPOConfig ppo;
        SimConfig sim;
        SensorConfig sensors;
        RewardWeights rewards;
        RobotParams robot;
        int env_count = 8;
        std::string out_dir = "runs/out";
        std::uint64_t seed = 1;
        std::map<int, StageSpec> stages;  // overrides; defaults fill the rest
        std::atomic<bool>* interrupt = nullptr;
    };

    explicit Trainer(Setup setup)
        : setup_(std::move(setup)),
          params_(PolicyParams::init(mix64(setup_.seed, 0x504152ULL),
                                     static_cast<float>(setup_.ppo.init_log_std))),
          bounds_{static_cast<float>(setup_.robot.v_max), static_cast<float>(setup_.robot.w_max)} {
        setup_.ppo.validate();
        setup_.robot.validate();
        if (setup_.env_count <= 0) throw InvalidArgument("env_count must be positive");
        std::filesystem::create_directories(setup_.out_dir);
    }

    PolicyParams& params() { return params_; }
    const Setup& setup() const { return setup_; }

    void load_params(const std::string& checkpoint_path) { params_ = load_checkpoint(checkpoint_path); }

    StageSpec stage_spec(int id) const {
        auto it = setup_.stages.find(id);
        StageSpec s = it != setup_.stages.end() ? it->second : default_stage(id, setup_.robot);
        s.ranges.base_robot = setup_.robot;
        return s;
    }

    std::string checkpoint_path(int stage) const {
        return setup_.out_dir + "/stage" + std::to_string(stage) + ".ckpt";
    }
    std::string resume_dir(int stage) const {
        return setup_.out_dir + "/stage" + std::to_string(stage) + "_resume";
    }

    // Load a resume bundle produced by a previous run. The next run_stage of
    // the recorded stage continues from the recorded batch.
    void load_resume(const std::string& dir) {
        params_ = load_checkpoint(dir + "/params.ckpt");
        PolicyParams opt = load_checkpoint(dir + "/opt.ckpt");
        std::ifstream in(dir + "/state.json");
        if (!in) throw IoError("missing resume state: " + dir + "/state.json");
        resume_state_ = nlohmann::json::parse(in);
        opt_ = AdamState{};
        opt_.step = resume_state_.at("adam_step").get<std::int64_t>();
        for (const auto& [key, t] : opt.tensors) {
            if (key.rfind("m/", 0) == 0) opt_.m[key.substr(2)] = t;
            if (key.rfind("v/", 0) == 0) opt_.v[key.substr(2)] = t;
        }
        has_resume_ = true;
    }

    bool has_resume() const { return has_resume_; }
    int resume_stage() const { return has_resume_ ? resume_state_.at("stage").get<int>() : 0; }

    StageReport run_stage(int stage_id) {
        StageSpec spec = stage_spec(stage_id);
        std::set<std::string> train = spec.train;
        train.insert(modules::kValue);
        params_.set_trainable_modules(train);
        bool store_patch = spec.train.count(modules::kElevation) > 0;

        int n_envs = setup_.env_count;
        int steps_per_env = (setup_.ppo.steps_per_batch + n_envs - 1) / n_envs;

        auto factory = [this, spec](int env_idx, std::int64_t episode) {
            return sample_scenario(spec.family,
                                   mix64(mix64(setup_.seed, static_cast<std::uint64_t>(spec.id)),
                                         static_cast<std::uint64_t>(env_idx),
                                         static_cast<std::uint64_t>(episode)),
                                   spec.ranges);
        };

        std::vector<std::unique_ptr<EnvSlot>> slots;
        for (int e = 0; e < n_envs; ++e)
            slots.push_back(std::make_unique<EnvSlot>(
                e, factory, setup_.sim, setup_.sensors, setup_.rewards,
                mix64(setup_.seed, static_cast<std::uint64_t>(spec.id), 0x534c4fULL),
                spec.degraded_patch));

        std::deque<int> window;
        StageAccum accum;
        long env_steps = 0;
        int batch = 0;

        if (has_resume_ && resume_state_.at("stage").get<int>() == stage_id) {
            batch = resume_state_.at("batch_next").get<int>();
            env_steps = resume_state_.at("env_steps").get<long>();
            for (int v : resume_state_.at("window").get<std::vector<int>>()) window.push_back(v);
            accum.restore(resume_state_.at("accum"));
            const auto& slot_states = resume_state_.at("slots");
            for (int e = 0; e < n_envs; ++e)
                slots[static_cast<std::size_t>(e)]->restore_json(slot_states.at(static_cast<std::size_t>(e)));
            has_resume_ = false;
        } else {
            opt_ = AdamState{};  // fresh optimizer per stage
        }

        std::string csv_path = setup_.out_dir + "/stage" + std::to_string(stage_id) + "_train.csv";
        std::ofstream csv(csv_path, batch > 0 ? std::ios::app : std::ios::trunc);
        if (batch == 0) csv << "step,mean_reward,success_rate,clip_fraction,kl\n";

        StageOutcome outcome = StageOutcome::Stalled;
        RolloutBuffer buf;
        while (true) {
            if (env_steps >= spec.total_steps) {
                outcome = StageOutcome::Stalled;
                break;
            }
            std::vector<EpisodeStats> eps =
                collect_rollouts(slots, params_, bounds_, buf, steps_per_env, store_patch);
            for (const EpisodeStats& ep : eps) {
                window.push_back(ep.outcome == Terminal::Success ? 1 : 0);
                while (static_cast<int>(window.size()) > spec.advance_window) window.pop_front();
                accum.add(ep);
            }
            compute_gae(buf, setup_.ppo.gamma, setup_.ppo.lambda_gae);
            UpdateStats us = ppo_update(params_, buf, setup_.ppo, opt_, bounds_,
                                        mix64(setup_.seed, static_cast<std::uint64_t>(stage_id),
                                              static_cast<std::uint64_t>(batch)));
            env_steps += buf.rows();
            ++batch;

            double mean_reward = 0.0;
            for (float r : buf.reward) mean_reward += r;
            mean_reward /= std::max(1, buf.rows());
            double trailing = trailing_success(window);
            csv << env_steps << ',' << fmt17(mean_reward) << ',' << fmt17(trailing) << ','
                << fmt17(us.clip_fraction) << ',' << fmt17(us.approx_kl) << '\n';
            csv.flush();

            if (static_cast<int>(window.size()) >= spec.advance_window &&
                trailing >= spec.advance_success) {
                outcome = StageOutcome::Advanced;
                break;
            }
            if (setup_.interrupt && setup_.interrupt->load()) {
                outcome = StageOutcome::Interrupted;
                break;
            }
        }

        // artifacts: checkpoint, resume bundle, report, provenance
        save_checkpoint(params_, checkpoint_path(stage_id));
        save_resume(stage_id, batch, env_steps, window, accum, slots);

        StageReport report = accum.report(stage_id, spec, outcome, env_steps, batch, trailing_success(window));
        std::ofstream rep(setup_.out_dir + "/stage" + std::to_string(stage_id) + "_report.json");
        rep << report.to_json().dump(2) << "\n";

        nlohmann::json prov;
        prov["checkpoint"] = checkpoint_path(stage_id);
        prov["checkpoint_fnv64"] = fnv64_file(checkpoint_path(stage_id));
        prov["seed"] = setup_.seed;
        std::ofstream provf(setup_.out_dir + "/stage" + std::to_string(stage_id) + "_provenance.json");
        provf << prov.dump(2) << "\n";
        return report;
    }

    // Runs the fixed stage order, each stage consuming the previous
    // parameters. Returns the reports; stops early on stall or interrupt.
    std::vector<StageReport> run_curriculum(const std::vector<int>& stage_ids = {1, 2, 3, 4, 5}) {
        std::vector<StageReport> reports;
        for (int id : stage_ids) {
            StageReport r = run_stage(id);
            reports.push_back(r);
            if (r.outcome != StageOutcome::Advanced) break;
        }
        return reports;
    }

private:
    struct StageAccum {
        long episodes = 0;
        long successes = 0;
        long steps = 0;
        double reward_sum = 0.0;
        double vib = 0.0, drift = 0.0, elev = 0.0, odom = 0.0, traj = 0.0;
        RewardBreakdown comp;

        void add(const EpisodeStats& ep) {
            ++episodes;
            if (ep.outcome == Terminal::Success) ++successes;
            steps += ep.steps;
            reward_sum += ep.reward_sum;
            int n = std::max(ep.steps, 1);
            vib += ep.vib_sum / n;
            drift += ep.drift_sum / n;
            elev += ep.elev_sum / n;
            odom += ep.odom_drift_sum / n;
            traj += ep.traj_len;
            comp.g += ep.component_sums.g;
            comp.d += ep.component_sums.d;
            comp.s += ep.component_sums.s;
            comp.c += ep.component_sums.c;
            comp.e += ep.component_sums.e;
            comp.t += ep.component_sums.t;
        }

        nlohmann::json to_json() const {
            return nlohmann::json{episodes, successes, steps,  reward_sum, vib,    drift, elev,
                                  odom,     traj,      comp.g, comp.d,     comp.s, comp.c, comp.e,
                                  comp.t};
        }

        void restore(const nlohmann::json& j) {
            episodes = j.at(0);
            successes = j.at(1);
            steps = j.at(2);
            reward_sum = j.at(3);
            vib = j.at(4);
            drift = j.at(5);
            elev = j.at(6);
            odom = j.at(7);
            traj = j.at(8);
            comp.g = j.at(9);
            comp.d = j.at(10);
            comp.s = j.at(11);
            comp.c = j.at(12);
            comp.e = j.at(13);
            comp.t = j.at(14);
        }

        StageReport report(int stage, const StageSpec& spec, StageOutcome outcome, long env_steps,
                           int batches, double trailing) const {
            StageReport r;
            r.stage = stage;
            r.family = family_name(spec.family);
            r.outcome = outcome;
            r.env_steps = env_steps;
            r.episodes = episodes;
            r.batches = batches;
            r.trailing_success = trailing;
            r.success_rate_all = episodes ? static_cast<double>(successes) / episodes : 0.0;
            r.mean_episode_reward = episodes ? reward_sum / episodes : 0.0;
            long s = std::max(steps, 1L);
            r.mean_step_components = {comp.g / s, comp.d / s, comp.s / s, comp.c / s, comp.e / s,
                                      comp.t / s};
            if (episodes) {
                r.vibration = vib / episodes;
                r.drift_sim = drift / episodes;
                r.elevation_change = elev / episodes;
                r.drift_odom = odom / episodes;
                r.traj_len = traj / episodes;
            }
            return r;
        }
    };

    static double trailing_success(const std::deque<int>& window) {
        if (window.empty()) return 0.0;
        double acc = 0.0;
        for (int v : window) acc += v;
        return acc / static_cast<double>(window.size());
    }

    static std::string fmt17(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

    void save_resume(int stage_id, int batch_next, long env_steps, const std::deque<int>& window,
                     const StageAccum& accum, const std::vector<std::unique_ptr<EnvSlot>>& slots) {
        std::string dir = resume_dir(stage_id);
        std::filesystem::create_directories(dir);
        save_checkpoint(params_, dir + "/params.ckpt");
        PolicyParams opt_tensors;
        for (const auto& [k, t] : opt_.m) opt_tensors.tensors["m/" + k] = t;
        for (const auto& [k, t] : opt_.v) opt_tensors.tensors["v/" + k] = t;
        save_checkpoint(opt_tensors, dir + "/opt.ckpt");

        nlohmann::json j;
        j["stage"] = stage_id;
        j["batch_next"] = batch_next;
        j["env_steps"] = env_steps;
        j["adam_step"] = opt_.step;
        j["window"] = std::vector<int>(window.begin(), window.end());
        j["accum"] = accum.to_json();
        nlohmann::json slot_states = nlohmann::json::array();
        for (const auto& s : slots) slot_states.push_back(s->to_json());
        j["slots"] = slot_states;
        std::ofstream out(dir + "/state.json");
        out << j.dump() << "\n";
        if (!out) throw IoError("failed to write resume state");
    }

    Setup setup_;
    PolicyParams params_;
    AdamState opt_;
    ActionBounds bounds_;
    nlohmann::json resume_state_;
    bool has_resume_ = false;
};

}  // namespace anl
