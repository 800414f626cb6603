#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace anl {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kGravity = 9.81;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// wrap angle to (-pi, pi]
inline double wrap_angle(double a) {
    a = std::fmod(a + kPi, kTwoPi);
    if (a < 0) a += kTwoPi;
    double w = a - kPi;
    // fmod puts exact +pi on the -pi side; keep the (-pi, pi] convention
    return (w <= -kPi) ? w + kTwoPi : w;
}

// wrapped difference a - b in (-pi, pi]
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

inline double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// Worker-count policy: ANL_THREADS env var wins, otherwise hardware.
inline int worker_count() {
    if (const char* env = std::getenv("ANL_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Static-chunked parallel loop. Work item i goes to chunk i / chunk_size, and
// callers that reduce must do so in chunk order; results are then independent
// of the worker count, which only changes how chunks are interleaved.
inline void parallel_for(int n, const std::function<void(int)>& body, int max_workers = 0) {
    if (n <= 0) return;
    int workers = max_workers > 0 ? std::min(max_workers, worker_count()) : worker_count();
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int i = w; i < n; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace anl
