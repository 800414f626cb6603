#pragma once

#include <cmath>
#include <limits>

#include <json.hpp>

#include "anl/episode_log.hpp"
#include "anl/rewards.hpp"
#include "anl/sensors.hpp"
#include "anl/sim.hpp"

namespace anl {

struct EnvStep {
    Observation obs;  // observation after the step
    double reward = 0.0;
    RewardBreakdown breakdown;
    Terminal terminal = Terminal::None;
    Vec2 drift;
    double d_c = 0.0;
    StepRecord record;
};

// One episode worth of world: scenario + simulator + sensor synthesis +
// rewards. Owned by exactly one worker; all randomness flows from the seeds
// given at construction.
class Env {
public:
    Env(ScenarioSpec scenario, const SimConfig& sim_cfg, SensorConfig sensor_cfg,
        const RewardWeights& weights, std::uint64_t seed, bool degraded_patch = false)
        : scenario_(std::move(scenario)),
          sim_cfg_(sim_cfg),
          sensor_cfg_(sensor_cfg),
          weights_(RewardWeights::with_robot(weights, scenario_.robot)),
          sim_(scenario_, sim_cfg, seed),
          patch_rng_(mix64(seed, 0x5041ULL)),
          degraded_patch_(degraded_patch) {
        sensor_cfg_.base_offset = scenario_.robot.wheel_radius;
        terrain_max_height_ = scenario_.terrain.max_height();
        reset();
    }

    const ScenarioSpec& scenario() const { return scenario_; }
    const RobotParams& robot() const { return scenario_.robot; }
    const RewardWeights& weights() const { return weights_; }
    const SimConfig& sim_config() const { return sim_cfg_; }
    const SensorConfig& sensor_config() const { return sensor_cfg_; }
    const RobotState& state() const { return state_; }
    const Observation& observation() const { return obs_; }
    int step_index() const { return sim_.step_index(); }
    bool done() const { return done_; }

    Observation reset() {
        CollisionResult col = check_collision(scenario_.start_x, scenario_.start_y,
                                              scenario_.obstacles, scenario_.robot.r_rob,
                                              sim_cfg_.d_c_sentinel);
        if (col.collided) throw InvalidArgument("scenario start position is in collision");
        sim_.reset_counters();
        state_ = sim_.make_initial_state();
        done_ = false;
        history_.clear();
        std::array<double, 9> imu = imu_synth(state_, state_, sim_cfg_.dt);
        StateVector s0 = assemble_state(goal_obs(state_, scenario_.goal_x, scenario_.goal_y, scenario_.goal_z),
                                        imu, state_.v_body, state_.wy);
        history_.push(s0, 0.0, 0.0);
        obs_ = make_observation(s0);
        return obs_;
    }

    EnvStep step(const Action& action_in) {
        Action action = Action::clamped(action_in.v_cmd, action_in.w_cmd, scenario_.robot);
        RobotState before = state_;
        SimStep sim_out = sim_.step(before, action);
        state_ = sim_out.next;
        done_ = sim_out.terminal != Terminal::None;

        std::array<double, 9> imu = imu_synth(before, state_, sim_cfg_.dt);
        std::array<double, 3> goal = goal_obs(state_, scenario_.goal_x, scenario_.goal_y, scenario_.goal_z);
        StateVector sv = assemble_state(goal, imu, state_.v_body, state_.wy);
        history_.push(sv, action.v_cmd, action.w_cmd);

        EnvStep out;
        out.obs = make_observation(sv);
        out.terminal = sim_out.terminal;
        out.drift = sim_out.drift;
        out.d_c = sim_out.d_c;

        RewardInputs rin;
        rin.d_g_last = std::hypot(scenario_.goal_x - before.x, scenario_.goal_y - before.y);
        rin.d_g_now = goal[0];
        rin.p_a = predicted_pose(before, action, sim_cfg_.dt);
        rin.p_r = {state_.x, state_.y};
        rin.wr = state_.wr;
        rin.wp = state_.wp;
        rin.d_c = sim_out.d_c;
        Vec2 grad = gradient_at(scenario_.terrain, state_.x, state_.y);
        Vec2 u = state_.heading();
        double proj = grad.dot(u);
        rin.g_e = {proj * u.x, proj * u.y};
        rin.terminal = sim_out.terminal;
        out.reward = total_reward(rin, weights_, &out.breakdown);

        StepRecord rec;
        rec.t = sim_.step_index() - 1;
        rec.x = state_.x;
        rec.y = state_.y;
        rec.z = state_.z;
        rec.roll = state_.roll;
        rec.pitch = state_.pitch;
        rec.yaw = state_.yaw;
        rec.odom_yaw = state_.odom_yaw;
        rec.wr = state_.wr;
        rec.wp = state_.wp;
        rec.wy = state_.wy;
        rec.v_cmd = action.v_cmd;
        rec.w_cmd = action.w_cmd;
        rec.v_act = state_.v_act;
        rec.w_act = state_.w_act;
        rec.drift_x = sim_out.drift.x;
        rec.drift_y = sim_out.drift.y;
        rec.d_c = sim_out.d_c;
        rec.d_goal = goal[0];
        rec.reward_total = out.reward;
        rec.reward_components = out.breakdown;
        rec.terminal = sim_out.terminal;
        out.record = rec;
        return out;
    }

    // --- resume support -----------------------------------------------------

    nlohmann::json dynamic_state() const {
        nlohmann::json j;
        j["state"] = {state_.x, state_.y, state_.z, state_.roll, state_.pitch, state_.yaw,
                      state_.v_body, state_.v_lat, state_.wr, state_.wp, state_.wy,
                      state_.v_act, state_.w_act, state_.pid_int_v, state_.pid_int_w,
                      state_.pid_prev_err_v, state_.pid_prev_err_w, state_.odom_yaw};
        j["step_index"] = sim_.step_index();
        j["done"] = done_;
        j["sim_rng"] = {sim_.noise_stream().state(), sim_.noise_stream().inc()};
        j["patch_rng"] = {patch_rng_.state(), patch_rng_.inc()};
        nlohmann::json hist = nlohmann::json::array();
        for (int f = 0; f < kHistoryFrames; ++f) {
            nlohmann::json frame = nlohmann::json::array();
            for (double v : history_.states[static_cast<std::size_t>(f)].v) frame.push_back(v);
            frame.push_back(history_.actions[static_cast<std::size_t>(f)][0]);
            frame.push_back(history_.actions[static_cast<std::size_t>(f)][1]);
            hist.push_back(frame);
        }
        j["history"] = hist;
        return j;
    }

    void restore_dynamic_state(const nlohmann::json& j) {
        const auto& s = j.at("state");
        state_.x = s.at(0);
        state_.y = s.at(1);
        state_.z = s.at(2);
        state_.roll = s.at(3);
        state_.pitch = s.at(4);
        state_.yaw = s.at(5);
        state_.v_body = s.at(6);
        state_.v_lat = s.at(7);
        state_.wr = s.at(8);
        state_.wp = s.at(9);
        state_.wy = s.at(10);
        state_.v_act = s.at(11);
        state_.w_act = s.at(12);
        state_.pid_int_v = s.at(13);
        state_.pid_int_w = s.at(14);
        state_.pid_prev_err_v = s.at(15);
        state_.pid_prev_err_w = s.at(16);
        state_.odom_yaw = s.at(17);
        sim_.set_step_index(j.at("step_index").get<int>());
        done_ = j.at("done").get<bool>();
        sim_.noise_stream().restore(j.at("sim_rng").at(0).get<std::uint64_t>(),
                                    j.at("sim_rng").at(1).get<std::uint64_t>());
        patch_rng_.restore(j.at("patch_rng").at(0).get<std::uint64_t>(),
                           j.at("patch_rng").at(1).get<std::uint64_t>());
        const auto& hist = j.at("history");
        for (int f = 0; f < kHistoryFrames; ++f) {
            const auto& frame = hist.at(static_cast<std::size_t>(f));
            for (int i = 0; i < kStateDim; ++i)
                history_.states[static_cast<std::size_t>(f)].v[static_cast<std::size_t>(i)] = frame.at(static_cast<std::size_t>(i));
            history_.actions[static_cast<std::size_t>(f)][0] = frame.at(kStateDim);
            history_.actions[static_cast<std::size_t>(f)][1] = frame.at(kStateDim + 1);
        }
        StateVector cur = history_.states[kHistoryFrames - 1];
        obs_ = make_observation(cur);
    }

private:
    Observation make_observation(const StateVector& sv) {
        Observation obs;
        obs.lidar = lidar_scan_cached();
        obs.patch = elevation_patch(scenario_.terrain, state_, sensor_cfg_);
        if (degraded_patch_) degrade_patch(obs.patch);
        obs.state = sv;
        obs.history = history_;
        return obs;
    }

    LidarScan lidar_scan_cached() {
        // same as sensors::lidar_scan but reuses the cached terrain max height
        SensorConfig cfg = sensor_cfg_;
        if (terrain_max_height_ <= state_.z + cfg.sensor_height && scenario_.obstacles.empty()) {
            LidarScan scan;
            scan.max_range = cfg.max_range;
            scan.angle_span = cfg.angle_span;
            scan.ranges.assign(static_cast<std::size_t>(cfg.n_beams),
                               static_cast<float>(cfg.max_range));
            return scan;
        }
        return lidar_scan(state_, scenario_.obstacles, scenario_.terrain, cfg);
    }

    void degrade_patch(ElevationPatch& patch) {
        // emulate an incomplete mapping pipeline: drop 30% of cells, refill
        for (float& v : patch.values)
            if (patch_rng_.uniform() < 0.30) v = std::numeric_limits<float>::quiet_NaN();
        fill_sparse_grid(patch.values, patch.cells, patch.cells);
    }

    ScenarioSpec scenario_;
    SimConfig sim_cfg_;
    SensorConfig sensor_cfg_;
    RewardWeights weights_;
    Simulator sim_;
    Pcg32 patch_rng_;
    bool degraded_patch_ = false;
    float terrain_max_height_ = 0.0f;
    RobotState state_;
    HistoryBuffer history_;
    Observation obs_;
    bool done_ = false;
};

}  // namespace anl
