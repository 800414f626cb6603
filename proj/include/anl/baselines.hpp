#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "anl/policy_runner.hpp"
#include "anl/robot.hpp"
#include "anl/sensors.hpp"

namespace anl {

// Action source for evaluation episodes. Stateful controllers get a fresh
// instance per episode.
class Controller {
public:
    virtual ~Controller() = default;
    virtual Action act(const Observation& obs, const RobotParams& robot) = 0;
    virtual std::string name() const = 0;
};

// Deterministic policy controller (mean action), optionally ablated.
class PolicyController : public Controller {
public:
    PolicyController(const PolicyParams& params, ActionBounds bounds, Ablation ablation)
        : runner_(params, bounds, ablation), ablation_(ablation) {}

    Action act(const Observation& obs, const RobotParams&) override {
        ModelEval ev = runner_.eval(obs);
        std::array<float, 2> a = runner_.act_mean(ev);
        return {a[0], a[1]};
    }

    std::string name() const override {
        switch (ablation_) {
            case Ablation::None: return "policy";
            case Ablation::Stable: return "policy_wo_stable";
            case Ablation::Adaptive: return "policy_wo_adaptive";
        }
        return "policy";
    }

private:
    PolicyRunner runner_;
    Ablation ablation_;
};

// Heading P-control toward the goal at a fixed 0.8 v_max cruise.
class StraightPController : public Controller {
public:
    Action act(const Observation& obs, const RobotParams& robot) override {
        double a_g = obs.state.v[1];
        double w = clamp(2.0 * a_g, -robot.w_max, robot.w_max);
        return {0.8 * robot.v_max, w};
    }
    std::string name() const override { return "straight_p"; }
};

// Steers along the flattest elevation-patch direction within +-60 degrees of
// the goal bearing; ties resolve toward the goal.
class GreedyElevationController : public Controller {
public:
    Action act(const Observation& obs, const RobotParams& robot) override {
        double a_g = obs.state.v[1];
        const ElevationPatch& patch = obs.patch;
        int n = patch.cells;
        double half = 0.5 * (n - 1);
        auto patch_at = [&](double fwd, double left) {
            int i = static_cast<int>(std::round(fwd / patch.resolution + half));
            int j = static_cast<int>(std::round(left / patch.resolution + half));
            i = std::clamp(i, 0, n - 1);
            j = std::clamp(j, 0, n - 1);
            return static_cast<double>(patch.values[static_cast<std::size_t>(i) * n + j]);
        };
        const int n_cand = 13;
        double best_bearing = a_g;
        double best_score = 1e18;
        for (int k = 0; k < n_cand; ++k) {
            double off = (static_cast<double>(k) / (n_cand - 1) - 0.5) * (2.0 * kPi / 3.0);
            double b = wrap_angle(a_g + off);
            double c = std::cos(b), s = std::sin(b);
            double slope = std::abs(patch_at(1.25 * c, 1.25 * s) - patch_at(0.75 * c, 0.75 * s));
            double score = slope + 0.02 * std::abs(off);  // prefer the goal bearing on ties
            if (score < best_score) {
                best_score = score;
                best_bearing = b;
            }
        }
        double w = clamp(2.0 * best_bearing, -robot.w_max, robot.w_max);
        return {0.6 * robot.v_max, w};
    }
    std::string name() const override { return "greedy_elev"; }
};

}  // namespace anl
