#pragma once

#include <cmath>
#include <cstdint>

namespace anl {

// splitmix64; used to derive stream keys from (seed, stream ids).
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) { return mix64(a ^ mix64(b)); }
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix64(mix64(a, b), c);
}

// PCG32 (Melissa O'Neill's pcg32_oneseq). Self-contained so streams are
// reproducible across standard libraries and trivially serializable: the
// whole state is two u64 words.
class Pcg32 {
public:
    Pcg32() : Pcg32(0x853c49e6748fea9bULL) {}
    explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0xda3e39cb94b95bdbULL) {
        state_ = 0;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    std::uint64_t next_u64() {
        return (static_cast<std::uint64_t>(next_u32()) << 32) | next_u32();
    }

    // uniform in [0, 1)
    double uniform() { return next_u32() * (1.0 / 4294967296.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [lo, hi] inclusive
    int uniform_int(int lo, int hi) {
        if (hi <= lo) return lo;
        std::uint32_t span = static_cast<std::uint32_t>(hi - lo + 1);
        return lo + static_cast<int>(next_u32() % span);
    }

    // standard normal via Box-Muller; two fresh uniforms per draw so the
    // stream position is a pure function of the number of calls.
    double normal() {
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 1e-12);
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::uint64_t state() const { return state_; }
    std::uint64_t inc() const { return inc_; }
    void restore(std::uint64_t state, std::uint64_t inc) { state_ = state; inc_ = inc; }

private:
    std::uint64_t state_;
    std::uint64_t inc_;
};

}  // namespace anl
