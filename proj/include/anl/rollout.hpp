#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "anl/common.hpp"
#include "anl/env.hpp"
#include "anl/policy_runner.hpp"

namespace anl {

// Flat step-major storage: row index = t * n_envs + e. Raw observations are
// kept for the modules that will re-encode during updates; frozen-encoder
// features are cached here and treated as constants by the update.
struct RolloutBuffer {
    int n_envs = 0;
    int n_steps = 0;
    bool store_patch = false;

    std::vector<float> lidar;       // [N, 360] normalized
    std::vector<float> patch;       // [N, 6400] when store_patch
    std::vector<float> hist;        // [N, 48]
    std::vector<float> feat_lidar;  // [N, 64]
    std::vector<float> feat_elev;   // [N, 64]
    std::vector<float> feat_ada;    // [N, 32]
    std::vector<float> th;          // [N, 2]
    std::vector<float> a_p;         // [N, 2]
    std::vector<float> a;           // [N, 2]
    std::vector<float> logp;        // [N]
    std::vector<float> value;       // [N]
    std::vector<float> reward;      // [N]
    std::vector<std::uint8_t> done; // [N]
    std::vector<float> bootstrap;   // [n_envs]
    std::vector<float> advantages;  // [N]
    std::vector<float> returns;     // [N]

    int rows() const { return n_envs * n_steps; }
    int row(int t, int e) const { return t * n_envs + e; }

    void allocate(int envs, int steps, bool with_patch) {
        n_envs = envs;
        n_steps = steps;
        store_patch = with_patch;
        std::size_t n = static_cast<std::size_t>(rows());
        lidar.assign(n * Arch::lidar_beams, 0.0f);
        patch.assign(with_patch ? n * Arch::elev_n * Arch::elev_n : 0, 0.0f);
        hist.assign(n * kHistoryDim, 0.0f);
        feat_lidar.assign(n * Arch::lidar_out, 0.0f);
        feat_elev.assign(n * Arch::elev_out, 0.0f);
        feat_ada.assign(n * Arch::adaptive_out, 0.0f);
        th.assign(n * 2, 0.0f);
        a_p.assign(n * 2, 0.0f);
        a.assign(n * 2, 0.0f);
        logp.assign(n, 0.0f);
        value.assign(n, 0.0f);
        reward.assign(n, 0.0f);
        done.assign(n, 0);
        bootstrap.assign(static_cast<std::size_t>(envs), 0.0f);
        advantages.assign(n, 0.0f);
        returns.assign(n, 0.0f);
    }
};

// delta_t = r_t + gamma V_{t+1} (1 - done) - V_t;  A_t = delta_t +
// gamma lambda (1 - done) A_{t+1}; returns = A + V. Advantages are then
// normalized batch-wide unless the caller asks for the raw values.
inline void compute_gae(RolloutBuffer& buf, double gamma, double lambda, bool normalize = true) {
    for (int e = 0; e < buf.n_envs; ++e) {
        double acc = 0.0;
        for (int t = buf.n_steps - 1; t >= 0; --t) {
            int i = buf.row(t, e);
            double nonterminal = buf.done[static_cast<std::size_t>(i)] ? 0.0 : 1.0;
            double v_next = (t == buf.n_steps - 1) ? buf.bootstrap[static_cast<std::size_t>(e)]
                                                   : buf.value[static_cast<std::size_t>(buf.row(t + 1, e))];
            double delta = buf.reward[static_cast<std::size_t>(i)] +
                           gamma * v_next * nonterminal - buf.value[static_cast<std::size_t>(i)];
            acc = delta + gamma * lambda * nonterminal * acc;
            buf.advantages[static_cast<std::size_t>(i)] = static_cast<float>(acc);
            buf.returns[static_cast<std::size_t>(i)] =
                static_cast<float>(acc + buf.value[static_cast<std::size_t>(i)]);
        }
    }
    if (!normalize) return;
    double mean = 0.0;
    for (float v : buf.advantages) mean += v;
    mean /= std::max<std::size_t>(buf.advantages.size(), 1);
    double var = 0.0;
    for (float v : buf.advantages) var += (v - mean) * (v - mean);
    var /= std::max<std::size_t>(buf.advantages.size(), 1);
    double inv = 1.0 / (std::sqrt(var) + 1e-8);
    for (float& v : buf.advantages) v = static_cast<float>((v - mean) * inv);
}

// Per-episode summary accumulated during collection; enough for the stage
// reports without keeping full logs.
struct EpisodeStats {
    int env = 0;
    int steps = 0;
    Terminal outcome = Terminal::None;
    double reward_sum = 0.0;
    double traj_len = 0.0;
    double vib_sum = 0.0;
    double drift_sum = 0.0;
    double elev_sum = 0.0;
    double odom_drift_sum = 0.0;
    RewardBreakdown component_sums;
};

// One worker slot: environment plus its seeded action stream and episode
// bookkeeping. Scenarios are regenerated per episode via the factory.
class EnvSlot {
public:
    using ScenarioFactory = std::function<ScenarioSpec(int env_idx, std::int64_t episode_idx)>;

    EnvSlot(int idx, ScenarioFactory factory, const SimConfig& sim_cfg, const SensorConfig& sensor_cfg,
            const RewardWeights& weights, std::uint64_t seed, bool degraded_patch = false)
        : idx_(idx),
          factory_(std::move(factory)),
          sim_cfg_(sim_cfg),
          sensor_cfg_(sensor_cfg),
          weights_(weights),
          seed_(seed),
          action_rng_(mix64(seed, static_cast<std::uint64_t>(idx), 0x414354ULL)),
          degraded_patch_(degraded_patch) {
        new_episode();
    }

    Env& env() { return *env_; }
    Pcg32& action_rng() { return action_rng_; }
    int index() const { return idx_; }
    std::int64_t episode_index() const { return episode_; }
    EpisodeStats& current_stats() { return stats_; }
    double last_x = 0.0, last_y = 0.0;

    void new_episode() {
        ScenarioSpec spec = factory_(idx_, episode_);
        env_ = std::make_unique<Env>(std::move(spec), sim_cfg_, sensor_cfg_, weights_,
                                     mix64(seed_, static_cast<std::uint64_t>(idx_),
                                           static_cast<std::uint64_t>(episode_)),
                                     degraded_patch_);
        stats_ = EpisodeStats{};
        stats_.env = idx_;
        last_x = env_->state().x;
        last_y = env_->state().y;
        prev_odom_yaw_ = env_->state().odom_yaw;
        prev_yaw_ = env_->state().yaw;
        prev_z_ = env_->state().z;
    }

    void advance_episode() {
        ++episode_;
        new_episode();
    }

    void set_episode_index(std::int64_t e) { episode_ = e; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["episode"] = episode_;
        j["action_rng"] = {action_rng_.state(), action_rng_.inc()};
        j["env"] = env_->dynamic_state();
        j["trackers"] = {last_x, last_y, prev_odom_yaw_, prev_yaw_, prev_z_};
        j["stats"] = {stats_.steps,          stats_.reward_sum,      stats_.traj_len,
                      stats_.vib_sum,        stats_.drift_sum,       stats_.elev_sum,
                      stats_.odom_drift_sum, stats_.component_sums.g, stats_.component_sums.d,
                      stats_.component_sums.s, stats_.component_sums.c, stats_.component_sums.e,
                      stats_.component_sums.t};
        return j;
    }

    void restore_json(const nlohmann::json& j) {
        episode_ = j.at("episode").get<std::int64_t>();
        new_episode();
        action_rng_.restore(j.at("action_rng").at(0).get<std::uint64_t>(),
                            j.at("action_rng").at(1).get<std::uint64_t>());
        env_->restore_dynamic_state(j.at("env"));
        const auto& tr = j.at("trackers");
        last_x = tr.at(0);
        last_y = tr.at(1);
        prev_odom_yaw_ = tr.at(2);
        prev_yaw_ = tr.at(3);
        prev_z_ = tr.at(4);
        const auto& st = j.at("stats");
        stats_.env = idx_;
        stats_.steps = st.at(0);
        stats_.reward_sum = st.at(1);
        stats_.traj_len = st.at(2);
        stats_.vib_sum = st.at(3);
        stats_.drift_sum = st.at(4);
        stats_.elev_sum = st.at(5);
        stats_.odom_drift_sum = st.at(6);
        stats_.component_sums.g = st.at(7);
        stats_.component_sums.d = st.at(8);
        stats_.component_sums.s = st.at(9);
        stats_.component_sums.c = st.at(10);
        stats_.component_sums.e = st.at(11);
        stats_.component_sums.t = st.at(12);
    }

    void accumulate(const EnvStep& step) {
        const RobotState& st = env_->state();
        stats_.steps += 1;
        stats_.reward_sum += step.reward;
        stats_.traj_len += std::hypot(st.x - last_x, st.y - last_y);
        stats_.vib_sum += std::abs(st.wr) + std::abs(st.wp);
        stats_.drift_sum += std::hypot(step.drift.x, step.drift.y);
        stats_.elev_sum += std::abs(st.z - prev_z_);
        stats_.odom_drift_sum += std::abs(angle_diff(angle_diff(st.odom_yaw, prev_odom_yaw_),
                                                     angle_diff(st.yaw, prev_yaw_)));
        stats_.component_sums.g += step.breakdown.g;
        stats_.component_sums.d += step.breakdown.d;
        stats_.component_sums.s += step.breakdown.s;
        stats_.component_sums.c += step.breakdown.c;
        stats_.component_sums.e += step.breakdown.e;
        stats_.component_sums.t += step.breakdown.t;
        stats_.outcome = step.terminal;
        last_x = st.x;
        last_y = st.y;
        prev_odom_yaw_ = st.odom_yaw;
        prev_yaw_ = st.yaw;
        prev_z_ = st.z;
    }

private:
    int idx_;
    ScenarioFactory factory_;
    SimConfig sim_cfg_;
    SensorConfig sensor_cfg_;
    RewardWeights weights_;
    std::uint64_t seed_;
    Pcg32 action_rng_;
    bool degraded_patch_;
    std::unique_ptr<Env> env_;
    std::int64_t episode_ = 0;
    EpisodeStats stats_;
    double prev_odom_yaw_ = 0.0, prev_yaw_ = 0.0, prev_z_ = 0.0;
};

// Fills the buffer by stepping every env slot n_steps times. Slots are
// independent, so workers split by env; slot state (rng, episode counters)
// makes the result a pure function of the seeds.
inline std::vector<EpisodeStats> collect_rollouts(std::vector<std::unique_ptr<EnvSlot>>& slots,
                                                  const PolicyParams& params, ActionBounds bounds,
                                                  RolloutBuffer& buf, int n_steps, bool store_patch) {
    int n_envs = static_cast<int>(slots.size());
    buf.allocate(n_envs, n_steps, store_patch);
    std::vector<std::vector<EpisodeStats>> finished(static_cast<std::size_t>(n_envs));

    parallel_for(n_envs, [&](int e) {
        EnvSlot& slot = *slots[static_cast<std::size_t>(e)];
        PolicyRunner runner(params, bounds);
        for (int t = 0; t < n_steps; ++t) {
            int i = buf.row(t, e);
            const Observation& obs = slot.env().observation();
            ModelEval ev = runner.eval(obs);

            // record inputs and frozen-feature caches
            for (int k = 0; k < Arch::lidar_beams; ++k)
                buf.lidar[static_cast<std::size_t>(i) * Arch::lidar_beams + k] =
                    obs.lidar.ranges[static_cast<std::size_t>(k)] / static_cast<float>(obs.lidar.max_range);
            if (store_patch)
                std::memcpy(&buf.patch[static_cast<std::size_t>(i) * Arch::elev_n * Arch::elev_n],
                            obs.patch.values.data(), sizeof(float) * Arch::elev_n * Arch::elev_n);
            std::array<float, kHistoryDim> h = obs.history.flatten();
            std::memcpy(&buf.hist[static_cast<std::size_t>(i) * kHistoryDim], h.data(), sizeof(h));
            std::memcpy(&buf.feat_lidar[static_cast<std::size_t>(i) * Arch::lidar_out],
                        ev.lidar_feat.data(), sizeof(ev.lidar_feat));
            std::memcpy(&buf.feat_elev[static_cast<std::size_t>(i) * Arch::elev_out],
                        ev.elev_feat.data(), sizeof(ev.elev_feat));
            std::memcpy(&buf.feat_ada[static_cast<std::size_t>(i) * Arch::adaptive_out],
                        ev.adaptive_feat.data(), sizeof(ev.adaptive_feat));

            SampledAction sa = runner.sample(ev, slot.action_rng());
            buf.th[static_cast<std::size_t>(i) * 2] = ev.th[0];
            buf.th[static_cast<std::size_t>(i) * 2 + 1] = ev.th[1];
            buf.a_p[static_cast<std::size_t>(i) * 2] = sa.a_p[0];
            buf.a_p[static_cast<std::size_t>(i) * 2 + 1] = sa.a_p[1];
            buf.a[static_cast<std::size_t>(i) * 2] = sa.a[0];
            buf.a[static_cast<std::size_t>(i) * 2 + 1] = sa.a[1];
            buf.logp[static_cast<std::size_t>(i)] = sa.logp;
            buf.value[static_cast<std::size_t>(i)] = ev.value;

            EnvStep step = slot.env().step(Action{sa.a[0], sa.a[1]});
            slot.accumulate(step);
            buf.reward[static_cast<std::size_t>(i)] = static_cast<float>(step.reward);
            buf.done[static_cast<std::size_t>(i)] = step.terminal != Terminal::None ? 1 : 0;
            if (step.terminal != Terminal::None) {
                finished[static_cast<std::size_t>(e)].push_back(slot.current_stats());
                slot.advance_episode();
            }
        }
        ModelEval last = runner.eval(slot.env().observation());
        buf.bootstrap[static_cast<std::size_t>(e)] = last.value;
    });

    std::vector<EpisodeStats> all;
    for (auto& v : finished)
        for (auto& s : v) all.push_back(s);
    return all;
}

}  // namespace anl
