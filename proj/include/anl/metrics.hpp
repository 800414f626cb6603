#pragma once

#include <cmath>
#include <vector>

#include "anl/common.hpp"
#include "anl/episode_log.hpp"
#include "anl/errors.hpp"

namespace anl {

// Mean per-step |wr| + |wp| over the whole log.
inline double metric_vibration(const EpisodeLog& log) {
    if (log.empty()) throw InsufficientData("vibration needs at least one step");
    double acc = 0.0;
    for (const StepRecord& r : log.steps) acc += std::abs(r.wr) + std::abs(r.wp);
    return acc / static_cast<double>(log.size());
}

// Mean norm of the per-step (predicted - realized) position difference.
inline double metric_drift_sim(const EpisodeLog& log) {
    if (log.empty()) throw InsufficientData("drift needs at least one step");
    double acc = 0.0;
    for (const StepRecord& r : log.steps) acc += std::hypot(r.drift_x, r.drift_y);
    return acc / static_cast<double>(log.size());
}

// Mean absolute per-step elevation change.
inline double metric_elevation_change(const EpisodeLog& log) {
    if (log.size() < 2) throw InsufficientData("elevation change needs at least two steps");
    double acc = 0.0;
    for (std::size_t i = 1; i < log.size(); ++i)
        acc += std::abs(log.steps[i].z - log.steps[i - 1].z);
    return acc / static_cast<double>(log.size() - 1);
}

// Mean absolute difference between odometer and true heading increments,
// both wrapped to (-pi, pi].
inline double metric_drift_odom(const EpisodeLog& log) {
    if (log.size() < 2) throw InsufficientData("odometry drift needs at least two steps");
    double acc = 0.0;
    for (std::size_t i = 1; i < log.size(); ++i) {
        double d_odom = angle_diff(log.steps[i].odom_yaw, log.steps[i - 1].odom_yaw);
        double d_true = angle_diff(log.steps[i].yaw, log.steps[i - 1].yaw);
        acc += std::abs(d_odom - d_true);
    }
    return acc / static_cast<double>(log.size() - 1);
}

// Planar polyline length of the trajectory.
inline double metric_traj_length(const EpisodeLog& log) {
    double acc = 0.0;
    for (std::size_t i = 1; i < log.size(); ++i)
        acc += std::hypot(log.steps[i].x - log.steps[i - 1].x, log.steps[i].y - log.steps[i - 1].y);
    return acc;
}

inline double success_rate(const std::vector<EpisodeLog>& logs) {
    if (logs.empty()) return 0.0;
    int n = 0;
    for (const EpisodeLog& l : logs)
        if (l.outcome() == Terminal::Success) ++n;
    return static_cast<double>(n) / static_cast<double>(logs.size());
}

struct MetricsReport {
    double trajectory_length = 0.0;  // m, mean over episodes
    double success = 0.0;            // fraction
    double vibration = 0.0;          // rad/step
    double elevation_change = 0.0;   // m/step
    double drift_sim = 0.0;          // m/step
    double drift_odom = 0.0;         // rad/step
    int n_episodes = 0;
};

// Per-episode metrics averaged with equal weight; the difference-based
// metrics skip episodes too short to define them.
inline MetricsReport aggregate_metrics(const std::vector<EpisodeLog>& logs) {
    MetricsReport rep;
    rep.n_episodes = static_cast<int>(logs.size());
    rep.success = success_rate(logs);
    int n_any = 0, n_diff = 0;
    for (const EpisodeLog& l : logs) {
        if (l.empty()) continue;
        ++n_any;
        rep.trajectory_length += metric_traj_length(l);
        rep.vibration += metric_vibration(l);
        rep.drift_sim += metric_drift_sim(l);
        if (l.size() >= 2) {
            ++n_diff;
            rep.elevation_change += metric_elevation_change(l);
            rep.drift_odom += metric_drift_odom(l);
        }
    }
    if (n_any) {
        rep.trajectory_length /= n_any;
        rep.vibration /= n_any;
        rep.drift_sim /= n_any;
    }
    if (n_diff) {
        rep.elevation_change /= n_diff;
        rep.drift_odom /= n_diff;
    }
    return rep;
}

}  // namespace anl
