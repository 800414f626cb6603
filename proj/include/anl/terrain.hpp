#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "anl/common.hpp"
#include "anl/errors.hpp"
#include "anl/rng.hpp"

namespace anl {

// Node-centred heightmap world. heights[iy * width + ix] is the surface
// height at world (ix * cell_size, iy * cell_size); queries between nodes are
// bilinear. friction / restitution / bumpiness share the same layout.
struct TerrainGrid {
    int width_cells = 0;   // nodes along x
    int height_cells = 0;  // nodes along y
    double cell_size = 0.25;
    std::vector<float> heights;
    std::vector<float> friction;
    std::vector<float> restitution;
    std::vector<float> bumpiness;

    TerrainGrid() = default;
    TerrainGrid(int w, int h, double cell) : width_cells(w), height_cells(h), cell_size(cell) {
        if (w < 2 || h < 2 || cell <= 0.0) throw InvalidArgument("terrain grid needs >=2x2 nodes and positive cell size");
        std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
        heights.assign(n, 0.0f);
        friction.assign(n, 0.8f);
        restitution.assign(n, 0.0f);
        bumpiness.assign(n, 0.0f);
    }

    std::size_t idx(int ix, int iy) const {
        return static_cast<std::size_t>(iy) * static_cast<std::size_t>(width_cells) + static_cast<std::size_t>(ix);
    }

    double extent_x() const { return (width_cells - 1) * cell_size; }
    double extent_y() const { return (height_cells - 1) * cell_size; }

    bool in_bounds(double x, double y) const {
        return x >= 0.0 && y >= 0.0 && x <= extent_x() && y <= extent_y();
    }

    float max_height() const {
        float m = -std::numeric_limits<float>::infinity();
        for (float h : heights) m = std::max(m, h);
        return m;
    }

    void fill_friction(float mu) { std::fill(friction.begin(), friction.end(), mu); }
    void fill_restitution(float r) { std::fill(restitution.begin(), restitution.end(), r); }
    void fill_bumpiness(float b) { std::fill(bumpiness.begin(), bumpiness.end(), b); }
};

namespace detail {

// Bilinear sample of one plane; caller guarantees (x, y) in bounds.
inline double sample_plane(const std::vector<float>& plane, const TerrainGrid& g, double x, double y) {
    double fx = x / g.cell_size;
    double fy = y / g.cell_size;
    int ix = static_cast<int>(std::floor(fx));
    int iy = static_cast<int>(std::floor(fy));
    ix = std::clamp(ix, 0, g.width_cells - 2);
    iy = std::clamp(iy, 0, g.height_cells - 2);
    double tx = fx - ix;
    double ty = fy - iy;
    double h00 = plane[g.idx(ix, iy)];
    double h10 = plane[g.idx(ix + 1, iy)];
    double h01 = plane[g.idx(ix, iy + 1)];
    double h11 = plane[g.idx(ix + 1, iy + 1)];
    return (1 - tx) * (1 - ty) * h00 + tx * (1 - ty) * h10 + (1 - tx) * ty * h01 + tx * ty * h11;
}

}  // namespace detail

inline double height_at(const TerrainGrid& g, double x, double y) {
    if (!g.in_bounds(x, y)) throw OutOfBounds("height_at query outside grid");
    return detail::sample_plane(g.heights, g, x, y);
}

// Central differences on the bilinear surface with a small stencil, so the
// result is the local facet gradient. Exact for planar fields.
inline Vec2 gradient_at(const TerrainGrid& g, double x, double y) {
    double margin = g.cell_size;
    if (x - margin < 0.0 || y - margin < 0.0 || x + margin > g.extent_x() || y + margin > g.extent_y())
        throw OutOfBounds("gradient_at query too close to grid border");
    double h = std::min(1e-4, 0.25 * g.cell_size);
    double dx = (height_at(g, x + h, y) - height_at(g, x - h, y)) / (2.0 * h);
    double dy = (height_at(g, x, y + h) - height_at(g, x, y - h)) / (2.0 * h);
    return {dx, dy};
}

inline double friction_at(const TerrainGrid& g, double x, double y) {
    if (!g.in_bounds(x, y)) throw OutOfBounds("friction_at query outside grid");
    return detail::sample_plane(g.friction, g, x, y);
}

inline double restitution_at(const TerrainGrid& g, double x, double y) {
    if (!g.in_bounds(x, y)) throw OutOfBounds("restitution_at query outside grid");
    return detail::sample_plane(g.restitution, g, x, y);
}

inline double bumpiness_at(const TerrainGrid& g, double x, double y) {
    if (!g.in_bounds(x, y)) throw OutOfBounds("bumpiness_at query outside grid");
    return detail::sample_plane(g.bumpiness, g, x, y);
}

// ---------------------------------------------------------------------------
// Gradient (Perlin) noise. Vanishes at lattice points of every octave by
// construction, which the generator tests rely on.

namespace detail {

inline Vec2 lattice_gradient(std::uint64_t seed, int ix, int iy) {
    std::uint64_t h = mix64(seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(ix)),
                            static_cast<std::uint64_t>(static_cast<std::int64_t>(iy)));
    double angle = (h >> 11) * (kTwoPi / 9007199254740992.0);  // 53-bit mantissa
    return {std::cos(angle), std::sin(angle)};
}

inline double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

inline double perlin_single(std::uint64_t seed, double x, double y) {
    int ix = static_cast<int>(std::floor(x));
    int iy = static_cast<int>(std::floor(y));
    double fx = x - ix;
    double fy = y - iy;
    Vec2 g00 = lattice_gradient(seed, ix, iy);
    Vec2 g10 = lattice_gradient(seed, ix + 1, iy);
    Vec2 g01 = lattice_gradient(seed, ix, iy + 1);
    Vec2 g11 = lattice_gradient(seed, ix + 1, iy + 1);
    double d00 = g00.x * fx + g00.y * fy;
    double d10 = g10.x * (fx - 1) + g10.y * fy;
    double d01 = g01.x * fx + g01.y * (fy - 1);
    double d11 = g11.x * (fx - 1) + g11.y * (fy - 1);
    double u = fade(fx);
    double v = fade(fy);
    double a = d00 + u * (d10 - d00);
    double b = d01 + u * (d11 - d01);
    return a + v * (b - a);
}

}  // namespace detail

// Raw multi-octave gradient noise before any rescaling. Base frequency is
// 1/8 m^-1 with persistence 0.5; zero at every base-octave lattice point
// (multiples of 8 m).
inline double perlin_noise(std::uint64_t seed, double x, double y, int octaves) {
    if (octaves < 1 || octaves > 6) throw InvalidArgument("octaves must be in [1, 6]");
    double freq = 1.0 / 8.0;
    double amp = 1.0;
    double sum = 0.0;
    for (int o = 0; o < octaves; ++o) {
        sum += amp * detail::perlin_single(mix64(seed, static_cast<std::uint64_t>(o)), x * freq, y * freq);
        freq *= 2.0;
        amp *= 0.5;
    }
    return sum;
}

// Perlin terrain normalized so heights span [0, peak_height] over the grid.
inline TerrainGrid gen_perlin_terrain(std::uint64_t seed, double size_m, double cell_size,
                                      double peak_height, int octaves) {
    if (size_m <= 0.0 || cell_size <= 0.0) throw InvalidArgument("size and cell_size must be positive");
    if (peak_height < 0.0 || peak_height > 1.0) throw InvalidArgument("peak_height must be in [0, 1]");
    if (octaves < 1 || octaves > 6) throw InvalidArgument("octaves must be in [1, 6]");

    int nodes = static_cast<int>(std::round(size_m / cell_size)) + 1;
    TerrainGrid g(nodes, nodes, cell_size);
    if (peak_height == 0.0) return g;

    std::vector<double> raw(g.heights.size());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int iy = 0; iy < nodes; ++iy) {
        for (int ix = 0; ix < nodes; ++ix) {
            double v = perlin_noise(seed, ix * cell_size, iy * cell_size, octaves);
            raw[g.idx(ix, iy)] = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    double span = hi - lo;
    if (span < 1e-12) return g;
    for (std::size_t i = 0; i < raw.size(); ++i)
        g.heights[i] = static_cast<float>((raw[i] - lo) / span * peak_height);
    return g;
}

// ---------------------------------------------------------------------------
// Hills: sum of radial cosine bumps on a flat base. A bump of height h and
// radius r is h/2 * (1 + cos(pi d / r)); its steepest slope is h*pi/(2r) at
// d = r/2, which the tests verify in closed form.

struct Hill {
    double cx = 0.0;
    double cy = 0.0;
    double height = 1.0;
    double radius = 3.0;
};

inline double hill_profile(const Hill& h, double x, double y) {
    double d = std::hypot(x - h.cx, y - h.cy);
    if (d >= h.radius) return 0.0;
    return 0.5 * h.height * (1.0 + std::cos(kPi * d / h.radius));
}

inline double hill_peak_slope(const Hill& h) { return h.height * kPi / (2.0 * h.radius); }

inline TerrainGrid gen_hills_from(const std::vector<Hill>& hills, double size_m, double cell_size) {
    int nodes = static_cast<int>(std::round(size_m / cell_size)) + 1;
    TerrainGrid g(nodes, nodes, cell_size);
    for (int iy = 0; iy < nodes; ++iy) {
        for (int ix = 0; ix < nodes; ++ix) {
            double x = ix * cell_size;
            double y = iy * cell_size;
            double h = 0.0;
            for (const Hill& hill : hills) h += hill_profile(hill, x, y);
            g.heights[g.idx(ix, iy)] = static_cast<float>(h);
        }
    }
    return g;
}

inline TerrainGrid gen_hills(std::uint64_t seed, int n_hills, std::pair<double, double> height_range,
                             std::pair<double, double> radius_range, double size_m = 40.0,
                             double cell_size = 0.25) {
    if (n_hills < 0) throw InvalidArgument("n_hills must be >= 0");
    if (n_hills > 0) {
        if (height_range.second < height_range.first || radius_range.second < radius_range.first)
            throw InvalidArgument("empty range");
        if (height_range.first < 0.5 || height_range.second > 4.0)
            throw InvalidArgument("hill heights must lie within [0.5, 4.0] m");
        if (radius_range.first <= 0.0) throw InvalidArgument("hill radius must be positive");
    }
    Pcg32 rng(mix64(seed, 0x48494c4cULL));
    std::vector<Hill> hills;
    hills.reserve(static_cast<std::size_t>(n_hills));
    for (int i = 0; i < n_hills; ++i) {
        Hill h;
        h.radius = rng.uniform(radius_range.first, radius_range.second);
        h.height = rng.uniform(height_range.first, height_range.second);
        double margin = h.radius;
        h.cx = rng.uniform(margin, size_m - margin);
        h.cy = rng.uniform(margin, size_m - margin);
        hills.push_back(h);
    }
    return gen_hills_from(hills, size_m, cell_size);
}

// ---------------------------------------------------------------------------
// Two-pass fill of grids with missing cells (NaN). Pass 1 runs along rows:
// interior gaps are linearly interpolated between the bracketing known cells
// and edge gaps are extrapolated from the nearest two knowns, so planar data
// is reconstructed exactly. Pass 2 repeats along columns for cells still
// missing (rows that had no knowns at all).

namespace detail {

inline void fill_line(std::vector<float>& v, const std::vector<std::size_t>& index) {
    int n = static_cast<int>(index.size());
    std::vector<int> known;
    for (int i = 0; i < n; ++i)
        if (!std::isnan(v[index[static_cast<std::size_t>(i)]])) known.push_back(i);
    if (known.empty()) return;
    auto value = [&](int i) -> float& { return v[index[static_cast<std::size_t>(i)]]; };
    if (known.size() == 1) {
        float c = value(known[0]);
        for (int i = 0; i < n; ++i)
            if (std::isnan(value(i))) value(i) = c;
        return;
    }
    for (int i = 0; i < n; ++i) {
        if (!std::isnan(value(i))) continue;
        // bracketing knowns, or the two nearest ones past the edge
        auto it = std::lower_bound(known.begin(), known.end(), i);
        int k0, k1;
        if (it == known.begin()) {
            k0 = known[0];
            k1 = known[1];
        } else if (it == known.end()) {
            k0 = known[known.size() - 2];
            k1 = known[known.size() - 1];
        } else {
            k1 = *it;
            k0 = *(it - 1);
        }
        double t = static_cast<double>(i - k0) / static_cast<double>(k1 - k0);
        value(i) = static_cast<float>((1.0 - t) * value(k0) + t * value(k1));
    }
}

}  // namespace detail

// `values` is rows x cols row-major with NaN marking missing cells.
inline void fill_sparse_grid(std::vector<float>& values, int rows, int cols) {
    if (rows <= 0 || cols <= 0 || values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw ShapeError("fill_sparse_grid shape mismatch");
    std::size_t known = 0;
    for (float v : values)
        if (!std::isnan(v)) ++known;
    if (known < 4) throw InsufficientData("fill_sparse needs at least 4 known cells");

    std::vector<std::size_t> line;
    for (int r = 0; r < rows; ++r) {
        line.clear();
        for (int c = 0; c < cols; ++c) line.push_back(static_cast<std::size_t>(r) * cols + c);
        detail::fill_line(values, line);
    }
    for (int c = 0; c < cols; ++c) {
        line.clear();
        for (int r = 0; r < rows; ++r) line.push_back(static_cast<std::size_t>(r) * cols + c);
        detail::fill_line(values, line);
    }
}

}  // namespace anl
