#pragma once

#include <array>
#include <cmath>

#include "anl/common.hpp"
#include "anl/obstacles.hpp"
#include "anl/robot.hpp"
#include "anl/rng.hpp"
#include "anl/scenario.hpp"
#include "anl/terrain.hpp"

namespace anl {

// Fixed-step kinematic simulation constants. The slip closed form and the
// bumpiness noise gains are calibrated so that mu = 0.2 drifts visibly in a
// ten-step arc and full-speed driving on 0.1 m bumpiness vibrates near the
// top of the observed 0..1.4 range.
struct SimConfig {
    double dt = 0.1;
    double goal_tolerance = 0.5;
    double flip_threshold = 1.0;  // rad, roll or pitch
    double mu_ref = 0.8;
    double c_lat = 0.3;
    double g_lat = 0.5;
    double bump_vel_gain = 0.5;    // slip-noise scale on realized velocities
    double bump_omega_gain = 8.0;  // attitude-jitter scale feeding wr/wp
    double d_c_sentinel = 10.0;    // reported clearance when no obstacles
};

struct PidState {
    double integral = 0.0;
    double prev_err = 0.0;
};

// One PID channel on velocity error. Output is an absolute velocity target
// clamped to the channel bound; the integral clamps so its term alone cannot
// exceed that bound (anti-windup).
inline double pid_track_channel(double cmd, double actual, const PidGains& g, double dt,
                                double chan_max, PidState& st) {
    double err = cmd - actual;
    double i_lim = chan_max / std::max(g.ki, 1e-6);
    st.integral = clamp(st.integral + err * dt, -i_lim, i_lim);
    double deriv = (err - st.prev_err) / dt;
    st.prev_err = err;
    double u = g.kp * err + g.ki * st.integral + g.kd * deriv;
    return clamp(actual + u, -chan_max, chan_max);
}

struct SlipResult {
    double v = 0.0;        // realized forward velocity
    double w = 0.0;        // realized yaw rate
    double lateral = 0.0;  // leftward slide velocity
};

// Realized body velocities on terrain with friction mu. slope_lateral is the
// downhill inclination along the body-left axis (positive when the ground
// falls away to the left). n1/n2 are standard normal draws.
inline SlipResult slip_model(double v_act, double w_act, double mu, double slope_lateral,
                             double bumpiness, double n1, double n2, const SimConfig& cfg,
                             double ang_exponent) {
    double ratio = mu / cfg.mu_ref;
    double k_v = std::min(1.0, ratio);
    double k_w = std::min(1.0, std::pow(ratio, ang_exponent));
    SlipResult r;
    double jitter = cfg.bump_vel_gain * bumpiness * std::abs(v_act);
    r.v = k_v * v_act + jitter * n1;
    r.w = k_w * w_act + jitter * n2;
    r.lateral = cfg.c_lat * (1.0 - k_w) * v_act * w_act + cfg.g_lat * std::sin(slope_lateral) * (1.0 - mu);
    return r;
}

struct ContactPose {
    double z = 0.0;
    double roll = 0.0;
    double pitch = 0.0;
};

// Least-squares plane through the four wheel contact heights. For the
// symmetric contact rectangle the normal equations reduce to the two slope
// averages below; exact on planar fields for any yaw.
inline ContactPose pose_from_contacts(const TerrainGrid& grid, double x, double y, double yaw,
                                      const RobotParams& p) {
    double hl = 0.5 * p.wheel_base;  // half length (body x)
    double hw = 0.5 * p.wheel_base;  // half track (body y)
    double c = std::cos(yaw), s = std::sin(yaw);
    auto sample = [&](double bx, double by) {
        double wx = x + c * bx - s * by;
        double wy = y + s * bx + c * by;
        return height_at(grid, wx, wy);
    };
    double fl = sample(hl, hw);
    double fr = sample(hl, -hw);
    double rl = sample(-hl, hw);
    double rr = sample(-hl, -hw);
    double slope_fwd = (fl + fr - rl - rr) / (4.0 * hl);
    double slope_left = (fl + rl - fr - rr) / (4.0 * hw);
    ContactPose out;
    out.z = 0.25 * (fl + fr + rl + rr) + p.wheel_radius;
    out.pitch = std::atan(slope_fwd);
    out.roll = std::atan(slope_left);
    return out;
}

// Ideal unicycle integration of the commanded action: no slip, no PID lag.
inline Vec2 predicted_pose(const RobotState& st, const Action& a, double dt) {
    if (std::abs(a.w_cmd) < 1e-9) {
        return {st.x + a.v_cmd * dt * std::cos(st.yaw), st.y + a.v_cmd * dt * std::sin(st.yaw)};
    }
    double yaw1 = st.yaw + a.w_cmd * dt;
    double r = a.v_cmd / a.w_cmd;
    return {st.x + r * (std::sin(yaw1) - std::sin(st.yaw)), st.y - r * (std::cos(yaw1) - std::cos(st.yaw))};
}

struct CollisionResult {
    bool collided = false;
    double d_c = 0.0;
};

inline CollisionResult check_collision(double x, double y, const ObstacleSet& obstacles,
                                       double r_rob, double sentinel) {
    CollisionResult r;
    r.d_c = obstacles.clearance(x, y, r_rob, sentinel);
    r.collided = r.d_c <= 0.0;
    return r;
}

inline Terminal detect_terminal(const RobotState& st, double d_c, double goal_x, double goal_y,
                                int step_index, int horizon, const SimConfig& cfg) {
    if (std::abs(st.roll) > cfg.flip_threshold || std::abs(st.pitch) > cfg.flip_threshold)
        return Terminal::Flip;
    if (d_c <= 0.0) return Terminal::Collision;
    if (std::hypot(goal_x - st.x, goal_y - st.y) < cfg.goal_tolerance) return Terminal::Success;
    if (step_index >= horizon) return Terminal::Timeout;
    return Terminal::None;
}

// IMU sample: (a_x, a_y, a_z, v_r, v_p, v_y, r, p, y). Accelerations are
// finite differences of body velocity plus the gravity projection; the body
// vertical rate is treated as zero (ground contact), so a_z is pure gravity.
inline std::array<double, 9> imu_synth(const RobotState& prev, const RobotState& cur, double dt) {
    if (dt <= 0.0) throw InvalidArgument("imu_synth needs dt > 0");
    std::array<double, 9> o{};
    double g = kGravity;
    double gx = -g * std::sin(cur.pitch);
    double gy = g * std::sin(cur.roll) * std::cos(cur.pitch);
    double gz = g * std::cos(cur.roll) * std::cos(cur.pitch);
    o[0] = (cur.v_body - prev.v_body) / dt + gx;
    o[1] = (cur.v_lat - prev.v_lat) / dt + gy;
    o[2] = gz;
    o[3] = angle_diff(cur.roll, prev.roll) / dt;
    o[4] = angle_diff(cur.pitch, prev.pitch) / dt;
    o[5] = angle_diff(cur.yaw, prev.yaw) / dt;
    o[6] = cur.roll;
    o[7] = cur.pitch;
    o[8] = cur.yaw;
    return o;
}

// ---------------------------------------------------------------------------

struct SimStep {
    RobotState next;
    Vec2 drift;       // predicted minus realized planar position
    double d_c = 0.0;
    Terminal terminal = Terminal::None;
};

// Owns the per-episode noise stream and step counter; everything else is a
// pure function of its inputs.
class Simulator {
public:
    Simulator(const ScenarioSpec& scenario, const SimConfig& cfg, std::uint64_t noise_seed)
        : scenario_(&scenario), cfg_(cfg), rng_(mix64(noise_seed, 0x53494dULL)) {}

    const SimConfig& config() const { return cfg_; }
    int step_index() const { return step_index_; }

    RobotState make_initial_state() const {
        const ScenarioSpec& sc = *scenario_;
        RobotState st;
        st.x = sc.start_x;
        st.y = sc.start_y;
        st.yaw = sc.start_yaw;
        ContactPose cp = pose_from_contacts(sc.terrain, st.x, st.y, st.yaw, sc.robot);
        st.z = cp.z;
        st.roll = cp.roll;
        st.pitch = cp.pitch;
        st.odom_yaw = st.yaw;
        return st;
    }

    SimStep step(const RobotState& st, const Action& action) {
        if (!std::isfinite(action.v_cmd) || !std::isfinite(action.w_cmd))
            throw InvalidArgument("non-finite action");
        const ScenarioSpec& sc = *scenario_;
        const RobotParams& rp = sc.robot;
        double dt = cfg_.dt;

        RobotState next = st;

        // PID tracking of commanded velocities, feedback on realized rates
        PidState pv{st.pid_int_v, st.pid_prev_err_v};
        PidState pw{st.pid_int_w, st.pid_prev_err_w};
        double target_v = pid_track_channel(action.v_cmd, st.v_body, rp.pid_lin, dt, rp.v_max, pv);
        double target_w = pid_track_channel(action.w_cmd, st.wy, rp.pid_ang, dt, rp.w_max, pw);
        next.pid_int_v = pv.integral;
        next.pid_prev_err_v = pv.prev_err;
        next.pid_int_w = pw.integral;
        next.pid_prev_err_w = pw.prev_err;

        // drivetrain authority limits how fast actuation can change
        double dv = clamp(target_v - st.v_act, -rp.max_lin_accel() * dt, rp.max_lin_accel() * dt);
        double dw = clamp(target_w - st.w_act, -rp.max_ang_accel() * dt, rp.max_ang_accel() * dt);
        next.v_act = st.v_act + dv;
        next.w_act = st.w_act + dw;

        // terrain properties under the robot
        double mu = friction_at(sc.terrain, st.x, st.y);
        double bump = bumpiness_at(sc.terrain, st.x, st.y);
        double rest = restitution_at(sc.terrain, st.x, st.y);

        // fixed number of draws per step keeps the stream aligned
        double n1 = rng_.normal();
        double n2 = rng_.normal();
        double n3 = rng_.normal();
        double n4 = rng_.normal();

        double downhill_left = -st.roll;  // ground falls to the left when roll < 0
        SlipResult slip = slip_model(next.v_act, next.w_act, mu, downhill_left, bump, n1, n2, cfg_,
                                     rp.angular_slip_exponent());

        // planar integration: exact arc for (v, w), lateral applied mid-heading
        double yaw0 = st.yaw;
        double yaw1 = yaw0 + slip.w * dt;
        if (std::abs(slip.w) < 1e-9) {
            next.x = st.x + slip.v * dt * std::cos(yaw0);
            next.y = st.y + slip.v * dt * std::sin(yaw0);
        } else {
            double r = slip.v / slip.w;
            next.x = st.x + r * (std::sin(yaw1) - std::sin(yaw0));
            next.y = st.y - r * (std::cos(yaw1) - std::cos(yaw0));
        }
        double mid = yaw0 + 0.5 * slip.w * dt;
        next.x += slip.lateral * dt * -std::sin(mid);
        next.y += slip.lateral * dt * std::cos(mid);

        // keep the contact footprint and gradient stencils inside the grid
        double lim = 1.0;
        next.x = clamp(next.x, lim, sc.terrain.extent_x() - lim);
        next.y = clamp(next.y, lim, sc.terrain.extent_y() - lim);

        next.yaw = wrap_angle(yaw1);
        next.odom_yaw = wrap_angle(st.odom_yaw + next.w_act * (1.0 + rp.odom_slip_bias) * dt);

        // contact attitude plus bumpiness jitter; the jitter std is chosen so
        // the induced wr/wp noise scales with bumpiness x speed
        ContactPose cp = pose_from_contacts(sc.terrain, next.x, next.y, next.yaw, rp);
        double planar_speed = std::hypot(slip.v, slip.lateral);
        double sigma_att = cfg_.bump_omega_gain * bump * (1.0 + 0.5 * rest) * planar_speed * dt /
                           std::sqrt(2.0);
        next.z = cp.z;
        next.roll = wrap_angle(cp.roll + sigma_att * n3);
        next.pitch = wrap_angle(cp.pitch + sigma_att * n4);

        next.wr = angle_diff(next.roll, st.roll) / dt;
        next.wp = angle_diff(next.pitch, st.pitch) / dt;
        next.wy = angle_diff(next.yaw, st.yaw) / dt;
        next.v_body = slip.v;
        next.v_lat = slip.lateral;

        SimStep out;
        out.next = next;
        Vec2 predicted = predicted_pose(st, action, dt);
        out.drift = {predicted.x - next.x, predicted.y - next.y};
        CollisionResult col = check_collision(next.x, next.y, sc.obstacles, rp.r_rob, cfg_.d_c_sentinel);
        out.d_c = col.d_c;
        ++step_index_;
        out.terminal = detect_terminal(next, col.d_c, sc.goal_x, sc.goal_y, step_index_,
                                       sc.horizon_steps, cfg_);
        out.next = next;
        return out;
    }

    void reset_counters() { step_index_ = 0; }
    void set_step_index(int i) { step_index_ = i; }

    Pcg32& noise_stream() { return rng_; }
    const Pcg32& noise_stream() const { return rng_; }

private:
    const ScenarioSpec* scenario_;
    SimConfig cfg_;
    Pcg32 rng_;
    int step_index_ = 0;
};

}  // namespace anl
