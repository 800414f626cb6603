#pragma once

#include <cmath>

#include "anl/common.hpp"
#include "anl/errors.hpp"
#include "anl/robot.hpp"

namespace anl {

// Reward coefficients and thresholds. Defaults live in the run config; the
// signs make the obstacle and elevation terms penalties.
struct RewardWeights {
    double beta_g = 2.0;
    double beta_d = 1.0;
    double beta_s = 1.0;
    double beta_c = -2.0;
    double beta_e = -1.0;
    double r_success = 20.0;
    double r_collision = -20.0;
    double r_flips = -25.0;
    double s_th = 0.5;
    double c_th = 0.6;  // 1.5 * r_rob by default

    static RewardWeights with_robot(const RewardWeights& base, const RobotParams& robot) {
        RewardWeights w = base;
        w.c_th = 1.5 * robot.r_rob;
        return w;
    }
};

struct RewardInputs {
    double d_g_last = 0.0;
    double d_g_now = 0.0;
    Vec2 p_a;            // pose predicted from the commanded action
    Vec2 p_r;            // realized pose
    double wr = 0.0;
    double wp = 0.0;
    double d_c = 0.0;
    Vec2 g_e;            // terrain gradient projected on the heading
    Terminal terminal = Terminal::None;
};

struct RewardBreakdown {
    double g = 0.0;
    double d = 0.0;
    double s = 0.0;
    double c = 0.0;
    double e = 0.0;
    double t = 0.0;
};

inline double reward_goal(double d_last, double d_now) { return d_last - d_now; }

inline double reward_drift(const Vec2& p_a, const Vec2& p_r) { return -(p_a - p_r).norm(); }

inline double reward_stability(double wr, double wp, double s_th) {
    double s = std::abs(wr) + std::abs(wp);
    return s <= s_th ? 0.0 : s_th - s;
}

// As printed: zero outside the threshold, exp(d_c - c_th) inside, so the
// (negatively weighted) penalty is largest exactly at d_c = c_th.
inline double reward_obstacle(double d_c, double c_th) {
    return d_c > c_th ? 0.0 : std::exp(d_c - c_th);
}

inline double reward_elevation(const Vec2& g_e) { return g_e.norm(); }

inline double reward_terminal(Terminal event, const RewardWeights& w) {
    switch (event) {
        case Terminal::Success: return w.r_success;
        case Terminal::Collision: return w.r_collision;
        case Terminal::Flip: return w.r_flips;
        case Terminal::Timeout: return 0.0;
        case Terminal::None: break;
    }
    throw InvalidArgument("reward_terminal called without a terminal event");
}

// Terminal steps return the termination reward alone; otherwise the weighted
// sum of the shaping components. The breakdown always records the unweighted
// component values.
inline double total_reward(const RewardInputs& in, const RewardWeights& w, RewardBreakdown* breakdown) {
    RewardBreakdown b;
    b.g = reward_goal(in.d_g_last, in.d_g_now);
    b.d = reward_drift(in.p_a, in.p_r);
    b.s = reward_stability(in.wr, in.wp, w.s_th);
    b.c = reward_obstacle(in.d_c, w.c_th);
    b.e = reward_elevation(in.g_e);
    double total;
    if (in.terminal != Terminal::None) {
        b.t = reward_terminal(in.terminal, w);
        total = b.t;
    } else {
        total = w.beta_g * b.g + w.beta_d * b.d + w.beta_s * b.s + w.beta_c * b.c + w.beta_e * b.e;
    }
    if (breakdown) *breakdown = b;
    return total;
}

}  // namespace anl
