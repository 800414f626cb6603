#pragma once

#include <cmath>
#include <string>

#include "anl/common.hpp"
#include "anl/errors.hpp"

namespace anl {

struct PidGains {
    double kp = 0.8;
    double ki = 0.3;
    double kd = 0.02;
};

// Differential-drive platform description. A 4-joint (skid-steer) drivetrain
// turns a little more faithfully on low friction than a 2-joint one, which
// the slip model expresses through the angular slip exponent.
struct RobotParams {
    int wheel_joints = 2;  // 2 or 4
    double mass = 20.0;    // kg
    double r_rob = 0.4;    // bounding radius, m
    double wheel_base = 0.5;
    double wheel_radius = 0.12;
    PidGains pid_lin;
    PidGains pid_ang;
    double v_max = 1.5;    // m/s
    double w_max = 1.5;    // rad/s
    double odom_slip_bias = 0.0;

    void validate() const {
        if (wheel_joints != 2 && wheel_joints != 4) throw InvalidArgument("wheel_joints must be 2 or 4");
        if (r_rob <= 0.0 || v_max <= 0.0 || w_max <= 0.0 || wheel_base <= 0.0 || wheel_radius <= 0.0 ||
            mass <= 0.0)
            throw InvalidArgument("robot dimensions, mass and velocity bounds must be positive");
    }

    double angular_slip_exponent() const { return wheel_joints == 4 ? 1.2 : 1.5; }

    // crude drivetrain authority: heavier robots accelerate more slowly
    double max_lin_accel() const { return 40.0 / mass; }
    double max_ang_accel() const { return 80.0 / mass; }
};

struct RobotState {
    double x = 0.0, y = 0.0, z = 0.0;
    double roll = 0.0, pitch = 0.0, yaw = 0.0;
    double v_body = 0.0;    // forward, body frame
    double v_lat = 0.0;     // leftward, body frame
    double wr = 0.0, wp = 0.0, wy = 0.0;
    double v_act = 0.0, w_act = 0.0;   // PID-tracked actuation
    double pid_int_v = 0.0, pid_int_w = 0.0;
    double pid_prev_err_v = 0.0, pid_prev_err_w = 0.0;
    double odom_yaw = 0.0;  // dead-reckoned heading (integrates actuated w)

    Vec2 heading() const { return {std::cos(yaw), std::sin(yaw)}; }
    Vec2 left() const { return {-std::sin(yaw), std::cos(yaw)}; }
};

struct Action {
    double v_cmd = 0.0;
    double w_cmd = 0.0;

    static Action clamped(double v, double w, const RobotParams& p) {
        if (!std::isfinite(v) || !std::isfinite(w)) throw InvalidArgument("non-finite action");
        return {clamp(v, -p.v_max, p.v_max), clamp(w, -p.w_max, p.w_max)};
    }
};

enum class Terminal { None, Success, Collision, Flip, Timeout };

inline const char* terminal_name(Terminal t) {
    switch (t) {
        case Terminal::None: return "none";
        case Terminal::Success: return "success";
        case Terminal::Collision: return "collision";
        case Terminal::Flip: return "flip";
        case Terminal::Timeout: return "timeout";
    }
    return "none";
}

inline Terminal terminal_from_name(const std::string& s) {
    if (s == "none") return Terminal::None;
    if (s == "success") return Terminal::Success;
    if (s == "collision") return Terminal::Collision;
    if (s == "flip") return Terminal::Flip;
    if (s == "timeout") return Terminal::Timeout;
    throw InvalidArgument("unknown terminal name: " + s);
}

}  // namespace anl
