#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "anl/common.hpp"
#include "anl/errors.hpp"
#include "anl/obstacles.hpp"
#include "anl/robot.hpp"
#include "anl/sim.hpp"
#include "anl/terrain.hpp"

namespace anl {

struct SensorConfig {
    int n_beams = 360;
    double max_range = 10.0;
    double angle_span = kTwoPi;
    double sensor_height = 0.4;      // above the robot base
    int patch_cells = 80;
    double patch_resolution = 0.1;   // m per cell
    double patch_clip = 2.0;         // +-2 m normalization window
    double base_offset = 0.12;       // robot base sits this far above the contact plane
};

struct LidarScan {
    std::vector<float> ranges;
    double max_range = 10.0;
    double angle_span = kTwoPi;
};

// Planar single-channel scan in the body frame. Beam k points at
// angle_span * (k / n - 1/2) relative to the heading; obstacle hits are
// analytic, terrain hits are marched where the surface can reach the sensor
// height and refined by bisection.
inline LidarScan lidar_scan(const RobotState& st, const ObstacleSet& obstacles,
                            const TerrainGrid& grid, const SensorConfig& cfg) {
    if (cfg.n_beams < 8) throw InvalidArgument("lidar needs at least 8 beams");
    LidarScan scan;
    scan.max_range = cfg.max_range;
    scan.angle_span = cfg.angle_span;
    scan.ranges.resize(static_cast<std::size_t>(cfg.n_beams));

    double z_sensor = st.z + cfg.sensor_height;
    bool terrain_reachable = grid.max_height() > z_sensor;

    for (int k = 0; k < cfg.n_beams; ++k) {
        double body = cfg.angle_span * (static_cast<double>(k) / cfg.n_beams - 0.5);
        double a = st.yaw + body;
        double dx = std::cos(a), dy = std::sin(a);
        double range = ray_obstacles(obstacles, st.x, st.y, dx, dy);
        range = std::min(range, cfg.max_range);

        if (terrain_reachable) {
            double step = 0.5 * grid.cell_size;
            double t_lo = 0.0;
            for (double t = step; t < range; t += step) {
                double px = st.x + t * dx;
                double py = st.y + t * dy;
                if (!grid.in_bounds(px, py)) break;  // grid is convex; the ray will not re-enter
                if (height_at(grid, px, py) > z_sensor) {
                    double lo = t_lo, hi = t;
                    for (int it = 0; it < 20; ++it) {
                        double mid = 0.5 * (lo + hi);
                        if (height_at(grid, st.x + mid * dx, st.y + mid * dy) > z_sensor)
                            hi = mid;
                        else
                            lo = mid;
                    }
                    range = std::min(range, hi);
                    break;
                }
                t_lo = t;
            }
        }
        scan.ranges[static_cast<std::size_t>(k)] = static_cast<float>(std::max(range, 1e-3));
    }
    return scan;
}

// Ego-centric normalized elevation patch. values[i * n + j] covers body
// coordinates (forward, left) = ((i - (n-1)/2) * res, (j - (n-1)/2) * res);
// heights are relative to the ground under the robot, clipped to +-patch_clip
// and divided by it. Queries outside the grid clamp to the nearest edge.
struct ElevationPatch {
    std::vector<float> values;
    int cells = 80;
    double resolution = 0.1;
};

inline ElevationPatch elevation_patch(const TerrainGrid& grid, const RobotState& st,
                                      const SensorConfig& cfg) {
    ElevationPatch patch;
    patch.cells = cfg.patch_cells;
    patch.resolution = cfg.patch_resolution;
    int n = cfg.patch_cells;
    patch.values.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    double h0 = st.z - cfg.base_offset;  // ground level under the robot base
    double c = std::cos(st.yaw), s = std::sin(st.yaw);
    double half = 0.5 * (n - 1);
    double ex = grid.extent_x(), ey = grid.extent_y();
    for (int i = 0; i < n; ++i) {
        double bx = (i - half) * cfg.patch_resolution;
        for (int j = 0; j < n; ++j) {
            double by = (j - half) * cfg.patch_resolution;
            double wx = st.x + c * bx - s * by;
            double wy = st.y + s * bx + c * by;
            wx = clamp(wx, 0.0, ex);
            wy = clamp(wy, 0.0, ey);
            double h = detail::sample_plane(grid.heights, grid, wx, wy);
            double rel = clamp(h - h0, -cfg.patch_clip, cfg.patch_clip);
            patch.values[static_cast<std::size_t>(i) * n + j] = static_cast<float>(rel / cfg.patch_clip);
        }
    }
    return patch;
}

// Goal triple (distance, body-frame bearing, height difference).
inline std::array<double, 3> goal_obs(const RobotState& st, double gx, double gy, double gz) {
    double dx = gx - st.x;
    double dy = gy - st.y;
    double d = std::hypot(dx, dy);
    double bearing = std::atan2(dy, dx);
    double a = wrap_angle(bearing - st.yaw);
    return {d, a, gz - st.z};
}

// s_t = (o_g, o_i, o_v): 3 + 9 + 2 numbers in that order.
inline constexpr int kStateDim = 14;
inline constexpr int kActionDim = 2;
inline constexpr int kHistoryFrames = 3;
inline constexpr int kHistoryDim = kHistoryFrames * (kStateDim + kActionDim);

struct StateVector {
    std::array<double, kStateDim> v{};
};

inline StateVector assemble_state(const std::array<double, 3>& goal, const std::array<double, 9>& imu,
                                  double v_lin, double v_ang) {
    StateVector s;
    for (int i = 0; i < 3; ++i) s.v[static_cast<std::size_t>(i)] = goal[static_cast<std::size_t>(i)];
    for (int i = 0; i < 9; ++i) s.v[static_cast<std::size_t>(3 + i)] = imu[static_cast<std::size_t>(i)];
    s.v[12] = v_lin;
    s.v[13] = v_ang;
    return s;
}

// Last three (state, previous action) frames, newest last, zero-padded until
// three steps exist. Flattens to 3 * 16 = 48 numbers.
struct HistoryBuffer {
    std::array<StateVector, kHistoryFrames> states{};
    std::array<std::array<double, kActionDim>, kHistoryFrames> actions{};

    void clear() {
        for (auto& s : states) s = StateVector{};
        for (auto& a : actions) a = {0.0, 0.0};
    }

    void push(const StateVector& s, double prev_v_cmd, double prev_w_cmd) {
        for (int i = 0; i < kHistoryFrames - 1; ++i) {
            states[static_cast<std::size_t>(i)] = states[static_cast<std::size_t>(i + 1)];
            actions[static_cast<std::size_t>(i)] = actions[static_cast<std::size_t>(i + 1)];
        }
        states[kHistoryFrames - 1] = s;
        actions[kHistoryFrames - 1] = {prev_v_cmd, prev_w_cmd};
    }

    std::array<float, kHistoryDim> flatten() const {
        std::array<float, kHistoryDim> out{};
        int k = 0;
        for (int f = 0; f < kHistoryFrames; ++f) {
            for (int i = 0; i < kStateDim; ++i)
                out[static_cast<std::size_t>(k++)] =
                    static_cast<float>(states[static_cast<std::size_t>(f)].v[static_cast<std::size_t>(i)]);
            for (int i = 0; i < kActionDim; ++i)
                out[static_cast<std::size_t>(k++)] =
                    static_cast<float>(actions[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)]);
        }
        return out;
    }
};

struct Observation {
    LidarScan lidar;
    ElevationPatch patch;
    StateVector state;
    HistoryBuffer history;
};

}  // namespace anl
