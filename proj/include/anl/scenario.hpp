#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "anl/obstacles.hpp"
#include "anl/robot.hpp"
#include "anl/terrain.hpp"

namespace anl {

enum class Family { Adaptive, Uneven, Obstacles, Hills, Rich };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::Adaptive: return "adaptive";
        case Family::Uneven: return "uneven";
        case Family::Obstacles: return "obstacles";
        case Family::Hills: return "hills";
        case Family::Rich: return "rich";
    }
    return "adaptive";
}

inline Family family_from_name(const std::string& s) {
    if (s == "adaptive") return Family::Adaptive;
    if (s == "uneven") return Family::Uneven;
    if (s == "obstacles") return Family::Obstacles;
    if (s == "hills") return Family::Hills;
    if (s == "rich") return Family::Rich;
    throw InvalidArgument("unknown scenario family: " + s);
}

// Randomization knobs for scenario sampling. Families consume the fields
// that apply to them and ignore the rest; every field can be overridden
// from the run config.
struct ScenarioRanges {
    RobotParams base_robot;  // randomization starts from this platform
    double size_m = 40.0;
    double cell_size = 0.25;
    double mu_min = 0.05, mu_max = 1.2;
    double bump_min = 0.0, bump_max = 0.15;
    double rest_min = 0.0, rest_max = 0.5;
    double peak_min = 0.2, peak_max = 1.0;        // uneven
    double hill_height_min = 0.8, hill_height_max = 2.2;
    double hill_radius_min = 3.0, hill_radius_max = 6.0;
    int hills_min = 3, hills_max = 7;
    double steep_hill_prob = 0.1;                 // chance of one flip-risky hill
    double goal_dist_min = 4.0, goal_dist_max = 9.0;
    int horizon_steps = 300;
    bool randomize_robot = true;                  // adaptive / rich families
};

inline ScenarioRanges default_ranges(Family f) {
    ScenarioRanges r;
    switch (f) {
        case Family::Adaptive:
            break;
        case Family::Uneven:
            r.mu_min = 0.7;
            r.mu_max = 1.1;
            r.bump_min = 0.06;
            r.bump_max = 0.15;
            r.rest_min = 0.0;
            r.rest_max = 0.3;
            r.randomize_robot = false;
            break;
        case Family::Obstacles:
            r.mu_min = 0.7;
            r.mu_max = 1.1;
            r.bump_min = 0.0;
            r.bump_max = 0.05;
            r.randomize_robot = false;
            break;
        case Family::Hills:
            r.mu_min = 0.9;
            r.mu_max = 1.2;
            r.bump_min = 0.0;
            r.bump_max = 0.02;
            r.rest_max = 0.1;
            r.goal_dist_min = 6.0;
            r.goal_dist_max = 12.0;
            r.horizon_steps = 400;
            r.randomize_robot = false;
            break;
        case Family::Rich:
            r.horizon_steps = 400;
            break;
    }
    return r;
}

struct ScenarioSpec {
    std::uint64_t seed = 0;
    Family family = Family::Adaptive;
    TerrainGrid terrain;
    ObstacleSet obstacles;
    RobotParams robot;
    double start_x = 0.0, start_y = 0.0, start_yaw = 0.0;
    double goal_x = 0.0, goal_y = 0.0, goal_z = 0.0;
    int horizon_steps = 300;
};

namespace detail {

inline TerrainGrid sample_hill_terrain(Pcg32& rng, const ScenarioRanges& r) {
    int n = rng.uniform_int(r.hills_min, r.hills_max);
    std::vector<Hill> hills;
    hills.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Hill h;
        h.height = rng.uniform(r.hill_height_min, r.hill_height_max);
        h.radius = rng.uniform(r.hill_radius_min, r.hill_radius_max);
        double margin = std::min(h.radius, r.size_m / 3.0);
        h.cx = rng.uniform(margin, r.size_m - margin);
        h.cy = rng.uniform(margin, r.size_m - margin);
        hills.push_back(h);
    }
    // occasionally one short-radius hill steep enough to flip a robot that
    // climbs it head-on
    if (n > 0 && rng.uniform() < r.steep_hill_prob) {
        hills[0].radius = rng.uniform(1.8, 2.2);
        hills[0].height = clamp(2.2, 0.5, r.hill_height_max);
    }
    return gen_hills_from(hills, r.size_m, r.cell_size);
}

inline void randomize_robot_params(RobotParams& p, Pcg32& rng) {
    p.wheel_joints = rng.uniform() < 0.5 ? 2 : 4;
    p.mass = rng.uniform(10.0, 35.0);
    p.pid_lin.kp = rng.uniform(0.5, 1.2);
    p.pid_lin.ki = rng.uniform(0.1, 0.5);
    p.pid_lin.kd = rng.uniform(0.0, 0.05);
    p.pid_ang.kp = rng.uniform(0.5, 1.2);
    p.pid_ang.ki = rng.uniform(0.1, 0.5);
    p.pid_ang.kd = rng.uniform(0.0, 0.05);
    p.odom_slip_bias = rng.uniform(-0.05, 0.05);
}

// goal placement helper: picks start and goal with the requested separation,
// both clear of obstacles and away from the border. On hill terrain the
// endpoints sit on low ground and the direct route crosses elevated ground,
// so going straight is never trivially optimal.
inline void place_start_goal(ScenarioSpec& spec, Pcg32& rng, const ScenarioRanges& r) {
    bool hilly = spec.family == Family::Hills || spec.family == Family::Rich;
    double margin = 4.0;
    double ex = spec.terrain.extent_x();
    double ey = spec.terrain.extent_y();
    for (int attempt = 0; attempt < 512; ++attempt) {
        double sx = rng.uniform(margin, ex - margin);
        double sy = rng.uniform(margin, ey - margin);
        double bearing = rng.uniform(-kPi, kPi);
        double dist = rng.uniform(r.goal_dist_min, r.goal_dist_max);
        double gx = sx + dist * std::cos(bearing);
        double gy = sy + dist * std::sin(bearing);
        if (gx < margin || gx > ex - margin || gy < margin || gy > ey - margin) continue;
        double clear_start = spec.obstacles.clearance(sx, sy, spec.robot.r_rob, 1e9);
        double clear_goal = spec.obstacles.clearance(gx, gy, spec.robot.r_rob, 1e9);
        if (clear_start < 0.3 || clear_goal < 0.3) continue;
        if (std::hypot(gx - sx, gy - sy) < 2.0) continue;
        if (hilly) {
            if (height_at(spec.terrain, sx, sy) > 0.35) continue;
            if (height_at(spec.terrain, gx, gy) > 0.35) continue;
            if (attempt < 384) {  // prefer routes that would cross a hill
                double crest = 0.0;
                int samples = static_cast<int>(dist / 0.5) + 1;
                for (int i = 0; i <= samples; ++i) {
                    double t = static_cast<double>(i) / samples;
                    crest = std::max(crest, height_at(spec.terrain, sx + t * (gx - sx), sy + t * (gy - sy)));
                }
                if (crest < 0.5) continue;
            }
        }
        spec.start_x = sx;
        spec.start_y = sy;
        spec.start_yaw = rng.uniform(-kPi, kPi);
        spec.goal_x = gx;
        spec.goal_y = gy;
        spec.goal_z = height_at(spec.terrain, gx, gy);
        return;
    }
    throw InvalidArgument("could not place a collision-free start/goal pair");
}

}  // namespace detail

inline ScenarioSpec sample_scenario(Family family, std::uint64_t seed,
                                    const ScenarioRanges& ranges) {
    Pcg32 rng(mix64(seed, 0x5343454eULL, static_cast<std::uint64_t>(family)));
    ScenarioSpec spec;
    spec.seed = seed;
    spec.family = family;
    spec.robot = ranges.base_robot;
    spec.horizon_steps = ranges.horizon_steps;
    if (spec.horizon_steps <= 0) throw InvalidArgument("horizon_steps must be positive");

    switch (family) {
        case Family::Adaptive: {
            spec.terrain = TerrainGrid(
                static_cast<int>(std::round(ranges.size_m / ranges.cell_size)) + 1,
                static_cast<int>(std::round(ranges.size_m / ranges.cell_size)) + 1, ranges.cell_size);
            spec.terrain.fill_friction(static_cast<float>(rng.uniform(ranges.mu_min, ranges.mu_max)));
            spec.terrain.fill_bumpiness(static_cast<float>(rng.uniform(ranges.bump_min, ranges.bump_max)));
            spec.terrain.fill_restitution(static_cast<float>(rng.uniform(ranges.rest_min, ranges.rest_max)));
            if (ranges.randomize_robot) detail::randomize_robot_params(spec.robot, rng);
            break;
        }
        case Family::Uneven: {
            double peak = rng.uniform(ranges.peak_min, std::min(ranges.peak_max, 1.0));
            spec.terrain = gen_perlin_terrain(mix64(seed, 1), ranges.size_m, ranges.cell_size, peak, 3);
            spec.terrain.fill_friction(static_cast<float>(rng.uniform(ranges.mu_min, ranges.mu_max)));
            spec.terrain.fill_bumpiness(static_cast<float>(rng.uniform(ranges.bump_min, ranges.bump_max)));
            spec.terrain.fill_restitution(static_cast<float>(rng.uniform(ranges.rest_min, ranges.rest_max)));
            break;
        }
        case Family::Obstacles: {
            spec.terrain = TerrainGrid(
                static_cast<int>(std::round(ranges.size_m / ranges.cell_size)) + 1,
                static_cast<int>(std::round(ranges.size_m / ranges.cell_size)) + 1, ranges.cell_size);
            spec.terrain.fill_friction(static_cast<float>(rng.uniform(ranges.mu_min, ranges.mu_max)));
            spec.terrain.fill_bumpiness(static_cast<float>(rng.uniform(ranges.bump_min, ranges.bump_max)));
            double m = 6.0;
            Rect area{m, m, ranges.size_m - m, ranges.size_m - m};
            spec.obstacles = gen_obstacle_field(mix64(seed, 2), area, {2.0, 3.0});
            break;
        }
        case Family::Hills: {
            spec.terrain = detail::sample_hill_terrain(rng, ranges);
            spec.terrain.fill_friction(static_cast<float>(rng.uniform(ranges.mu_min, ranges.mu_max)));
            spec.terrain.fill_bumpiness(static_cast<float>(rng.uniform(ranges.bump_min, ranges.bump_max)));
            break;
        }
        case Family::Rich: {
            double peak = rng.uniform(0.0, std::min(ranges.peak_max, 0.6));
            spec.terrain = gen_perlin_terrain(mix64(seed, 3), ranges.size_m, ranges.cell_size, peak, 3);
            TerrainGrid hills = detail::sample_hill_terrain(rng, ranges);
            for (std::size_t i = 0; i < spec.terrain.heights.size(); ++i)
                spec.terrain.heights[i] += hills.heights[i];
            spec.terrain.fill_friction(static_cast<float>(rng.uniform(ranges.mu_min, ranges.mu_max)));
            spec.terrain.fill_bumpiness(static_cast<float>(rng.uniform(ranges.bump_min, ranges.bump_max)));
            spec.terrain.fill_restitution(static_cast<float>(rng.uniform(ranges.rest_min, ranges.rest_max)));
            double m = 6.0;
            Rect area{m, m, ranges.size_m - m, ranges.size_m - m};
            spec.obstacles = gen_obstacle_field(mix64(seed, 5), area, {2.0, 3.0});
            if (ranges.randomize_robot) detail::randomize_robot_params(spec.robot, rng);
            break;
        }
    }
    detail::place_start_goal(spec, rng, ranges);
    return spec;
}

inline ScenarioSpec sample_scenario(Family family, std::uint64_t seed) {
    return sample_scenario(family, seed, default_ranges(family));
}

}  // namespace anl
