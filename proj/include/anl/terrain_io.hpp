#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "anl/scenario.hpp"
#include "anl/terrain.hpp"

namespace anl {

// Binary terrain container: magic "ANLT", version u16, width u32, height u32,
// cell_size f64, then four row-major little-endian f32 planes in the order
// heights, friction, restitution, bumpiness.

namespace detail {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError(std::string("truncated read: ") + what);
    return v;
}

inline void write_plane(std::ostream& out, const std::vector<float>& plane) {
    out.write(reinterpret_cast<const char*>(plane.data()),
              static_cast<std::streamsize>(plane.size() * sizeof(float)));
}

inline void read_plane(std::istream& in, std::vector<float>& plane, const char* what) {
    in.read(reinterpret_cast<char*>(plane.data()),
            static_cast<std::streamsize>(plane.size() * sizeof(float)));
    if (!in) throw IoError(std::string("truncated plane: ") + what);
}

}  // namespace detail

inline constexpr std::uint16_t kTerrainFormatVersion = 1;

inline void save_terrain(const TerrainGrid& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for write: " + path);
    out.write("ANLT", 4);
    detail::write_pod<std::uint16_t>(out, kTerrainFormatVersion);
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(g.width_cells));
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(g.height_cells));
    detail::write_pod<double>(out, g.cell_size);
    detail::write_plane(out, g.heights);
    detail::write_plane(out, g.friction);
    detail::write_plane(out, g.restitution);
    detail::write_plane(out, g.bumpiness);
    if (!out) throw IoError("write failed: " + path);
}

inline TerrainGrid load_terrain(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for read: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "ANLT", 4) != 0) throw IoError("not a terrain container: " + path);
    std::uint16_t version = detail::read_pod<std::uint16_t>(in, "version");
    if (version != kTerrainFormatVersion) throw IoError("unsupported terrain container version");
    std::uint32_t w = detail::read_pod<std::uint32_t>(in, "width");
    std::uint32_t h = detail::read_pod<std::uint32_t>(in, "height");
    double cell = detail::read_pod<double>(in, "cell_size");
    if (w < 2 || h < 2 || cell <= 0.0) throw IoError("invalid terrain header");
    TerrainGrid g(static_cast<int>(w), static_cast<int>(h), cell);
    detail::read_plane(in, g.heights, "heights");
    detail::read_plane(in, g.friction, "friction");
    detail::read_plane(in, g.restitution, "restitution");
    detail::read_plane(in, g.bumpiness, "bumpiness");
    return g;
}

// Arbitrary planes (e.g. elevation patches) reuse the same container with
// friction/restitution/bumpiness zeroed.
inline void save_plane_as_terrain(const std::vector<float>& plane, int w, int h, double cell,
                                  const std::string& path) {
    TerrainGrid g(w, h, cell);
    g.heights = plane;
    g.fill_friction(0.0f);
    save_terrain(g, path);
}

// ---------------------------------------------------------------------------
// Scenario files: human-readable key/value lines. Keys: family, seed, start,
// goal, horizon_steps, terrain_file. Obstacles and robot randomization are
// reconstructed from (family, seed), which generators map to deterministically.

inline void save_scenario(const ScenarioSpec& spec, const std::string& path,
                          const std::string& terrain_file) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for write: " + path);
    out.precision(17);
    out << "family = " << family_name(spec.family) << "\n";
    out << "seed = " << spec.seed << "\n";
    out << "start = " << spec.start_x << " " << spec.start_y << " " << spec.start_yaw << "\n";
    out << "goal = " << spec.goal_x << " " << spec.goal_y << " " << spec.goal_z << "\n";
    out << "horizon_steps = " << spec.horizon_steps << "\n";
    out << "terrain_file = " << terrain_file << "\n";
    if (!out) throw IoError("write failed: " + path);
}

inline ScenarioSpec load_scenario(const std::string& path, const ScenarioRanges* ranges = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for read: " + path);
    std::string family_str, terrain_file;
    std::uint64_t seed = 0;
    double sx = 0, sy = 0, syaw = 0, gx = 0, gy = 0, gz = 0;
    int horizon = 0;
    bool saw_family = false, saw_seed = false, saw_start = false, saw_goal = false,
         saw_horizon = false, saw_terrain = false;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t eq = line.find('=');
        if (line.empty() || line[0] == '#') continue;
        if (eq == std::string::npos)
            throw IoError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
        };
        trim(key);
        trim(value);
        std::istringstream vs(value);
        if (key == "family") {
            family_str = value;
            saw_family = true;
        } else if (key == "seed") {
            vs >> seed;
            saw_seed = true;
        } else if (key == "start") {
            vs >> sx >> sy >> syaw;
            saw_start = true;
        } else if (key == "goal") {
            vs >> gx >> gy >> gz;
            saw_goal = true;
        } else if (key == "horizon_steps") {
            vs >> horizon;
            saw_horizon = true;
        } else if (key == "terrain_file") {
            terrain_file = value;
            saw_terrain = true;
        } else {
            throw IoError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (vs.fail()) throw IoError(path + ":" + std::to_string(lineno) + ": bad value for '" + key + "'");
    }
    if (!(saw_family && saw_seed && saw_start && saw_goal && saw_horizon && saw_terrain))
        throw IoError(path + ": missing required scenario keys");

    Family family = family_from_name(family_str);
    ScenarioSpec spec = sample_scenario(family, seed, ranges ? *ranges : default_ranges(family));
    // file contents win over the regenerated fields
    std::string terrain_path = terrain_file;
    if (!terrain_path.empty() && terrain_path[0] != '/') {
        std::size_t slash = path.find_last_of('/');
        if (slash != std::string::npos) terrain_path = path.substr(0, slash + 1) + terrain_path;
    }
    spec.terrain = load_terrain(terrain_path);
    spec.start_x = sx;
    spec.start_y = sy;
    spec.start_yaw = syaw;
    spec.goal_x = gx;
    spec.goal_y = gy;
    spec.goal_z = gz;
    spec.horizon_steps = horizon;
    return spec;
}

}  // namespace anl
