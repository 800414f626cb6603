#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "anl/common.hpp"
#include "anl/errors.hpp"
#include "anl/rng.hpp"

namespace anl {

enum class ObstacleShape { Circle, Box, Wall };

// Circle: dims.x = radius. Box: dims = (half_x, half_y). Wall: a capsule of
// half-length dims.x and thickness radius dims.y, along the local x axis.
struct Obstacle {
    ObstacleShape shape = ObstacleShape::Circle;
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
    Vec2 dims{0.5, 0.5};

    // circumscribed radius; conservative stand-in for surface distance
    double bounding_radius() const {
        switch (shape) {
            case ObstacleShape::Circle: return dims.x;
            case ObstacleShape::Box: return std::hypot(dims.x, dims.y);
            case ObstacleShape::Wall: return dims.x + dims.y;
        }
        return dims.x;
    }

    // signed distance from point to obstacle surface (negative inside)
    double sdf(double px, double py) const {
        double dx = px - x;
        double dy = py - y;
        double c = std::cos(-yaw);
        double s = std::sin(-yaw);
        double lx = c * dx - s * dy;
        double ly = s * dx + c * dy;
        switch (shape) {
            case ObstacleShape::Circle:
                return std::hypot(lx, ly) - dims.x;
            case ObstacleShape::Box: {
                double qx = std::abs(lx) - dims.x;
                double qy = std::abs(ly) - dims.y;
                double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
                double inside = std::min(std::max(qx, qy), 0.0);
                return outside + inside;
            }
            case ObstacleShape::Wall: {
                double tx = clamp(lx, -dims.x, dims.x);
                return std::hypot(lx - tx, ly) - dims.y;
            }
        }
        return 0.0;
    }
};

struct ObstacleSet {
    std::vector<Obstacle> obstacles;

    bool empty() const { return obstacles.empty(); }

    // nearest surface distance from a disc of radius r_rob at (x, y)
    double clearance(double x, double y, double r_rob, double sentinel) const {
        double best = sentinel;
        for (const Obstacle& o : obstacles) best = std::min(best, o.sdf(x, y) - r_rob);
        return best;
    }
};

// ---------------------------------------------------------------------------
// Ray casting (2-D, analytic). Rays are (origin, unit dir); hits return the
// smallest positive t or +inf.

namespace detail {

inline double ray_circle(double ox, double oy, double dx, double dy, double cx, double cy, double r) {
    double fx = ox - cx;
    double fy = oy - cy;
    double b = fx * dx + fy * dy;
    double c = fx * fx + fy * fy - r * r;
    double disc = b * b - c;
    if (disc < 0.0) return std::numeric_limits<double>::infinity();
    double sq = std::sqrt(disc);
    double t0 = -b - sq;
    double t1 = -b + sq;
    if (t0 > 1e-9) return t0;
    if (t1 > 1e-9) return t1;
    return std::numeric_limits<double>::infinity();
}

// axis-aligned slab test in the box's local frame
inline double ray_aabb(double ox, double oy, double dx, double dy, double hx, double hy) {
    double tmin = -std::numeric_limits<double>::infinity();
    double tmax = std::numeric_limits<double>::infinity();
    const double o[2] = {ox, oy};
    const double d[2] = {dx, dy};
    const double h[2] = {hx, hy};
    for (int i = 0; i < 2; ++i) {
        if (std::abs(d[i]) < 1e-12) {
            if (std::abs(o[i]) > h[i]) return std::numeric_limits<double>::infinity();
        } else {
            double t1 = (-h[i] - o[i]) / d[i];
            double t2 = (h[i] - o[i]) / d[i];
            if (t1 > t2) std::swap(t1, t2);
            tmin = std::max(tmin, t1);
            tmax = std::min(tmax, t2);
        }
    }
    if (tmax < tmin) return std::numeric_limits<double>::infinity();
    if (tmin > 1e-9) return tmin;
    if (tmax > 1e-9) return tmax;
    return std::numeric_limits<double>::infinity();
}

}  // namespace detail

inline double ray_obstacle(const Obstacle& o, double ox, double oy, double dx, double dy) {
    double c = std::cos(-o.yaw);
    double s = std::sin(-o.yaw);
    double lox = c * (ox - o.x) - s * (oy - o.y);
    double loy = s * (ox - o.x) + c * (oy - o.y);
    double ldx = c * dx - s * dy;
    double ldy = s * dx + c * dy;
    switch (o.shape) {
        case ObstacleShape::Circle:
            return detail::ray_circle(lox, loy, ldx, ldy, 0.0, 0.0, o.dims.x);
        case ObstacleShape::Box:
            return detail::ray_aabb(lox, loy, ldx, ldy, o.dims.x, o.dims.y);
        case ObstacleShape::Wall: {
            // capsule = two end circles + the slab between them
            double best = detail::ray_circle(lox, loy, ldx, ldy, -o.dims.x, 0.0, o.dims.y);
            best = std::min(best, detail::ray_circle(lox, loy, ldx, ldy, o.dims.x, 0.0, o.dims.y));
            double slab = detail::ray_aabb(lox, loy, ldx, ldy, o.dims.x, o.dims.y);
            if (std::isfinite(slab)) best = std::min(best, slab);
            return best;
        }
    }
    return std::numeric_limits<double>::infinity();
}

inline double ray_obstacles(const ObstacleSet& set, double ox, double oy, double dx, double dy) {
    double best = std::numeric_limits<double>::infinity();
    for (const Obstacle& o : set.obstacles) best = std::min(best, ray_obstacle(o, ox, oy, dx, dy));
    return best;
}

// ---------------------------------------------------------------------------
// Dense static field: dart throwing with a spacing rule on bounding-circle
// surface gaps (exact for circles, conservative for boxes/walls). Every
// accepted obstacle after the first sits within [spacing_min, spacing_max]
// of its nearest neighbour, and no pair is closer than spacing_min.

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

inline ObstacleSet gen_obstacle_field(std::uint64_t seed, const Rect& area,
                                      std::pair<double, double> spacing) {
    if (spacing.first < 2.0 || spacing.second > 3.0 || spacing.second < spacing.first)
        throw InvalidArgument("spacing must be a subrange of [2, 3] m");
    Pcg32 rng(mix64(seed, 0x4f425354ULL));
    ObstacleSet set;

    auto propose = [&]() {
        Obstacle o;
        int kind = rng.uniform_int(0, 2);
        if (kind == 0) {
            o.shape = ObstacleShape::Circle;
            o.dims = {rng.uniform(0.25, 0.5), 0.0};
        } else if (kind == 1) {
            o.shape = ObstacleShape::Box;
            o.dims = {rng.uniform(0.2, 0.5), rng.uniform(0.2, 0.5)};
            o.yaw = rng.uniform(-kPi, kPi);
        } else {
            o.shape = ObstacleShape::Wall;
            o.dims = {rng.uniform(0.5, 1.2), rng.uniform(0.1, 0.2)};
            o.yaw = rng.uniform(-kPi, kPi);
        }
        double r = o.bounding_radius();
        if (area.width() < 2 * r || area.height() < 2 * r) {
            o.shape = ObstacleShape::Circle;  // shrink to fit small areas
            o.dims = {std::min(0.3, 0.25 * std::min(area.width(), area.height())), 0.0};
            r = o.dims.x;
        }
        o.x = rng.uniform(area.x0 + r, area.x1 - r);
        o.y = rng.uniform(area.y0 + r, area.y1 - r);
        return o;
    };

    if (area.width() < 0.8 || area.height() < 0.8)
        throw InvalidArgument("area too small to place an obstacle");

    int misses = 0;
    const int max_misses = 400;
    while (misses < max_misses) {
        Obstacle cand = propose();
        double rc = cand.bounding_radius();
        double nearest = std::numeric_limits<double>::infinity();
        bool ok = true;
        for (const Obstacle& o : set.obstacles) {
            double gap = std::hypot(cand.x - o.x, cand.y - o.y) - rc - o.bounding_radius();
            if (gap < spacing.first) {
                ok = false;
                break;
            }
            nearest = std::min(nearest, gap);
        }
        if (ok && !set.obstacles.empty() && nearest > spacing.second) ok = false;
        if (ok) {
            set.obstacles.push_back(cand);
            misses = 0;
        } else {
            ++misses;
        }
    }
    if (set.obstacles.empty()) throw InvalidArgument("area too small to place an obstacle");
    return set;
}

}  // namespace anl
