#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "anl/nn/kernels.hpp"
#include "anl/nn/tape.hpp"
#include "anl/rng.hpp"
#include "anl/sensors.hpp"
#include "anl/tensor.hpp"

namespace anl {

// Fixed architecture of the five models plus the critic. Kernel/stride
// choices keep the total parameter count just under 500k.
struct Arch {
    static constexpr int lidar_beams = 360;
    static constexpr int lidar_c1 = 16, lidar_k1 = 7, lidar_s1 = 3;
    static constexpr int lidar_c2 = 16, lidar_k2 = 5, lidar_s2 = 2;
    static constexpr int lidar_l1 = (lidar_beams - lidar_k1) / lidar_s1 + 1;  // 118
    static constexpr int lidar_l2 = (lidar_l1 - lidar_k2) / lidar_s2 + 1;     // 57
    static constexpr int lidar_flat = lidar_c2 * lidar_l2;                    // 912
    static constexpr int lidar_fc1 = 128, lidar_out = 64;

    static constexpr int elev_n = 80;
    static constexpr int elev_c1 = 8, elev_k1 = 5, elev_s1 = 2;
    static constexpr int elev_c2 = 16, elev_k2 = 3, elev_s2 = 2;
    static constexpr int elev_c3 = 16, elev_k3 = 3, elev_s3 = 2;
    static constexpr int elev_n1 = (elev_n - elev_k1) / elev_s1 + 1;   // 38
    static constexpr int elev_n2 = (elev_n1 - elev_k2) / elev_s2 + 1;  // 18
    static constexpr int elev_n3 = (elev_n2 - elev_k3) / elev_s3 + 1;  // 8
    static constexpr int elev_flat = elev_c3 * elev_n3 * elev_n3;      // 1024
    static constexpr int elev_fc1 = 256, elev_fc2 = 128, elev_out = 64;

    static constexpr int adaptive_in = kHistoryDim;  // 48
    static constexpr int adaptive_fc1 = 64, adaptive_out = 32;

    static constexpr int feat_dim = lidar_out + elev_out + adaptive_out;  // 160
    static constexpr int head_fc1 = 128, head_fc2 = 64;
    static constexpr int action_dim = 2;

    static constexpr int stable_fc1 = 32;

    static constexpr float log_std_min = -5.0f;
    static constexpr float log_std_max = 1.0f;
};

namespace modules {
inline constexpr const char* kLidar = "lidar";
inline constexpr const char* kElevation = "elevation";
inline constexpr const char* kAdaptive = "adaptive";
inline constexpr const char* kPolicy = "policy";
inline constexpr const char* kValue = "value";
inline constexpr const char* kStable = "stable";
inline const std::vector<std::string>& all() {
    static const std::vector<std::string> v = {kLidar, kElevation, kAdaptive, kPolicy, kValue, kStable};
    return v;
}
}  // namespace modules

struct ActionBounds {
    float v_max = 1.5f;
    float w_max = 1.5f;
};

// All learnable parameters, keyed "module/tensor", plus the per-module
// trainable mask. std::map keeps iteration (and thus every serialization and
// reduction) in a fixed order.
struct PolicyParams {
    std::map<std::string, Tensor> tensors;
    std::map<std::string, bool> trainable;

    static std::string module_of(const std::string& key) {
        return key.substr(0, key.find('/'));
    }

    bool is_trainable(const std::string& key) const {
        auto it = trainable.find(module_of(key));
        return it != trainable.end() && it->second;
    }

    void set_trainable_modules(const std::set<std::string>& mods) {
        for (const std::string& m : modules::all()) trainable[m] = mods.count(m) > 0;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& [k, t] : tensors) n += t.numel();
        return n;
    }

    static PolicyParams init(std::uint64_t seed, float init_log_std = -0.5f) {
        PolicyParams p;
        auto he = [&](const std::string& key, std::vector<int> shape, int fan_in, float gain) {
            Tensor t(std::move(shape));
            Pcg32 rng(mix64(seed, name_hash(key)));
            float std = gain * std::sqrt(2.0f / static_cast<float>(fan_in));
            for (float& v : t.data) v = static_cast<float>(rng.normal()) * std;
            p.tensors[key] = std::move(t);
        };
        auto zeros = [&](const std::string& key, std::vector<int> shape) {
            p.tensors[key] = Tensor(std::move(shape));
        };

        he("lidar/conv1.w", {Arch::lidar_c1, 1, Arch::lidar_k1}, Arch::lidar_k1, 1.0f);
        zeros("lidar/conv1.b", {Arch::lidar_c1});
        he("lidar/conv2.w", {Arch::lidar_c2, Arch::lidar_c1, Arch::lidar_k2},
           Arch::lidar_c1 * Arch::lidar_k2, 1.0f);
        zeros("lidar/conv2.b", {Arch::lidar_c2});
        he("lidar/fc1.w", {Arch::lidar_fc1, Arch::lidar_flat}, Arch::lidar_flat, 1.0f);
        zeros("lidar/fc1.b", {Arch::lidar_fc1});
        he("lidar/fc2.w", {Arch::lidar_out, Arch::lidar_fc1}, Arch::lidar_fc1, 1.0f);
        zeros("lidar/fc2.b", {Arch::lidar_out});

        he("elevation/conv1.w", {Arch::elev_c1, 1, Arch::elev_k1, Arch::elev_k1},
           Arch::elev_k1 * Arch::elev_k1, 1.0f);
        zeros("elevation/conv1.b", {Arch::elev_c1});
        he("elevation/conv2.w", {Arch::elev_c2, Arch::elev_c1, Arch::elev_k2, Arch::elev_k2},
           Arch::elev_c1 * Arch::elev_k2 * Arch::elev_k2, 1.0f);
        zeros("elevation/conv2.b", {Arch::elev_c2});
        he("elevation/conv3.w", {Arch::elev_c3, Arch::elev_c2, Arch::elev_k3, Arch::elev_k3},
           Arch::elev_c2 * Arch::elev_k3 * Arch::elev_k3, 1.0f);
        zeros("elevation/conv3.b", {Arch::elev_c3});
        he("elevation/fc1.w", {Arch::elev_fc1, Arch::elev_flat}, Arch::elev_flat, 1.0f);
        zeros("elevation/fc1.b", {Arch::elev_fc1});
        he("elevation/fc2.w", {Arch::elev_fc2, Arch::elev_fc1}, Arch::elev_fc1, 1.0f);
        zeros("elevation/fc2.b", {Arch::elev_fc2});
        he("elevation/fc3.w", {Arch::elev_out, Arch::elev_fc2}, Arch::elev_fc2, 1.0f);
        zeros("elevation/fc3.b", {Arch::elev_out});

        he("adaptive/fc1.w", {Arch::adaptive_fc1, Arch::adaptive_in}, Arch::adaptive_in, 1.0f);
        zeros("adaptive/fc1.b", {Arch::adaptive_fc1});
        he("adaptive/fc2.w", {Arch::adaptive_out, Arch::adaptive_fc1}, Arch::adaptive_fc1, 1.0f);
        zeros("adaptive/fc2.b", {Arch::adaptive_out});

        he("policy/fc1.w", {Arch::head_fc1, Arch::feat_dim}, Arch::feat_dim, 1.0f);
        zeros("policy/fc1.b", {Arch::head_fc1});
        he("policy/fc2.w", {Arch::head_fc2, Arch::head_fc1}, Arch::head_fc1, 1.0f);
        zeros("policy/fc2.b", {Arch::head_fc2});
        he("policy/mean.w", {Arch::action_dim, Arch::head_fc2}, Arch::head_fc2, 0.01f);
        zeros("policy/mean.b", {Arch::action_dim});
        {
            Tensor ls({Arch::action_dim});
            ls.data.assign(Arch::action_dim, init_log_std);
            p.tensors["policy/log_std"] = std::move(ls);
        }

        he("value/fc1.w", {Arch::head_fc1, Arch::feat_dim}, Arch::feat_dim, 1.0f);
        zeros("value/fc1.b", {Arch::head_fc1});
        he("value/fc2.w", {Arch::head_fc2, Arch::head_fc1}, Arch::head_fc1, 1.0f);
        zeros("value/fc2.b", {Arch::head_fc2});
        he("value/out.w", {1, Arch::head_fc2}, Arch::head_fc2, 1.0f);
        zeros("value/out.b", {1});

        he("stable/fc1.w", {Arch::stable_fc1, Arch::adaptive_out}, Arch::adaptive_out, 1.0f);
        zeros("stable/fc1.b", {Arch::stable_fc1});
        he("stable/out.w", {Arch::action_dim, Arch::stable_fc1}, Arch::stable_fc1, 0.01f);
        zeros("stable/out.b", {Arch::action_dim});

        for (const std::string& m : modules::all()) p.trainable[m] = true;
        return p;
    }

    static std::uint64_t name_hash(const std::string& s) {
        std::uint64_t h = 14695981039346656037ULL;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        return h;
    }
};

// ---------------------------------------------------------------------------
// Inference forwards, templated on the scalar so tests can run a
// double-precision shadow of the exact same architecture.

template <typename T>
struct TypedParams {
    std::map<std::string, std::vector<T>> data;

    static TypedParams from(const PolicyParams& p) {
        TypedParams out;
        for (const auto& [k, t] : p.tensors) {
            std::vector<T> v(t.data.size());
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(t.data[i]);
            out.data[k] = std::move(v);
        }
        return out;
    }

    const T* at(const std::string& key) const {
        auto it = data.find(key);
        if (it == data.end()) throw CorruptCheckpoint("missing tensor: " + key);
        return it->second.data();
    }
};

template <typename T>
void lidar_encode_t(const TypedParams<T>& P, const T* scan01, T* out) {
    std::vector<T> a(static_cast<std::size_t>(Arch::lidar_c1) * Arch::lidar_l1);
    nn::conv1d_forward(scan01, P.at("lidar/conv1.w"), P.at("lidar/conv1.b"), a.data(), 1, 1,
                       Arch::lidar_beams, Arch::lidar_c1, Arch::lidar_k1, Arch::lidar_s1);
    for (T& v : a) v = nn::relu(v);
    std::vector<T> b(static_cast<std::size_t>(Arch::lidar_c2) * Arch::lidar_l2);
    nn::conv1d_forward(a.data(), P.at("lidar/conv2.w"), P.at("lidar/conv2.b"), b.data(), 1,
                       Arch::lidar_c1, Arch::lidar_l1, Arch::lidar_c2, Arch::lidar_k2, Arch::lidar_s2);
    for (T& v : b) v = nn::relu(v);
    std::vector<T> c(Arch::lidar_fc1);
    nn::dense_forward(b.data(), P.at("lidar/fc1.w"), P.at("lidar/fc1.b"), c.data(), 1,
                      Arch::lidar_flat, Arch::lidar_fc1);
    for (T& v : c) v = nn::relu(v);
    nn::dense_forward(c.data(), P.at("lidar/fc2.w"), P.at("lidar/fc2.b"), out, 1, Arch::lidar_fc1,
                      Arch::lidar_out);
    for (int i = 0; i < Arch::lidar_out; ++i) out[i] = nn::relu(out[i]);
}

template <typename T>
void elevation_encode_t(const TypedParams<T>& P, const T* patch, T* out) {
    std::vector<T> a(static_cast<std::size_t>(Arch::elev_c1) * Arch::elev_n1 * Arch::elev_n1);
    nn::conv2d_forward(patch, P.at("elevation/conv1.w"), P.at("elevation/conv1.b"), a.data(), 1, 1,
                       Arch::elev_n, Arch::elev_n, Arch::elev_c1, Arch::elev_k1, Arch::elev_k1,
                       Arch::elev_s1);
    for (T& v : a) v = nn::relu(v);
    std::vector<T> b(static_cast<std::size_t>(Arch::elev_c2) * Arch::elev_n2 * Arch::elev_n2);
    nn::conv2d_forward(a.data(), P.at("elevation/conv2.w"), P.at("elevation/conv2.b"), b.data(), 1,
                       Arch::elev_c1, Arch::elev_n1, Arch::elev_n1, Arch::elev_c2, Arch::elev_k2,
                       Arch::elev_k2, Arch::elev_s2);
    for (T& v : b) v = nn::relu(v);
    std::vector<T> c(static_cast<std::size_t>(Arch::elev_c3) * Arch::elev_n3 * Arch::elev_n3);
    nn::conv2d_forward(b.data(), P.at("elevation/conv3.w"), P.at("elevation/conv3.b"), c.data(), 1,
                       Arch::elev_c2, Arch::elev_n2, Arch::elev_n2, Arch::elev_c3, Arch::elev_k3,
                       Arch::elev_k3, Arch::elev_s3);
    for (T& v : c) v = nn::relu(v);
    std::vector<T> d(Arch::elev_fc1);
    nn::dense_forward(c.data(), P.at("elevation/fc1.w"), P.at("elevation/fc1.b"), d.data(), 1,
                      Arch::elev_flat, Arch::elev_fc1);
    for (T& v : d) v = nn::relu(v);
    std::vector<T> e(Arch::elev_fc2);
    nn::dense_forward(d.data(), P.at("elevation/fc2.w"), P.at("elevation/fc2.b"), e.data(), 1,
                      Arch::elev_fc1, Arch::elev_fc2);
    for (T& v : e) v = nn::relu(v);
    nn::dense_forward(e.data(), P.at("elevation/fc3.w"), P.at("elevation/fc3.b"), out, 1,
                      Arch::elev_fc2, Arch::elev_out);
    for (int i = 0; i < Arch::elev_out; ++i) out[i] = nn::relu(out[i]);
}

template <typename T>
void adaptive_encode_t(const TypedParams<T>& P, const T* hist, T* out) {
    std::vector<T> a(Arch::adaptive_fc1);
    nn::dense_forward(hist, P.at("adaptive/fc1.w"), P.at("adaptive/fc1.b"), a.data(), 1,
                      Arch::adaptive_in, Arch::adaptive_fc1);
    for (T& v : a) v = nn::relu(v);
    nn::dense_forward(a.data(), P.at("adaptive/fc2.w"), P.at("adaptive/fc2.b"), out, 1,
                      Arch::adaptive_fc1, Arch::adaptive_out);
    for (int i = 0; i < Arch::adaptive_out; ++i) out[i] = nn::relu(out[i]);
}

template <typename T>
void policy_head_t(const TypedParams<T>& P, const T* feats, T* mean_raw) {
    std::vector<T> a(Arch::head_fc1);
    nn::dense_forward(feats, P.at("policy/fc1.w"), P.at("policy/fc1.b"), a.data(), 1, Arch::feat_dim,
                      Arch::head_fc1);
    for (T& v : a) v = nn::relu(v);
    std::vector<T> b(Arch::head_fc2);
    nn::dense_forward(a.data(), P.at("policy/fc2.w"), P.at("policy/fc2.b"), b.data(), 1,
                      Arch::head_fc1, Arch::head_fc2);
    for (T& v : b) v = nn::relu(v);
    nn::dense_forward(b.data(), P.at("policy/mean.w"), P.at("policy/mean.b"), mean_raw, 1,
                      Arch::head_fc2, Arch::action_dim);
}

template <typename T>
T value_head_t(const TypedParams<T>& P, const T* feats) {
    std::vector<T> a(Arch::head_fc1);
    nn::dense_forward(feats, P.at("value/fc1.w"), P.at("value/fc1.b"), a.data(), 1, Arch::feat_dim,
                      Arch::head_fc1);
    for (T& v : a) v = nn::relu(v);
    std::vector<T> b(Arch::head_fc2);
    nn::dense_forward(a.data(), P.at("value/fc2.w"), P.at("value/fc2.b"), b.data(), 1,
                      Arch::head_fc1, Arch::head_fc2);
    for (T& v : b) v = nn::relu(v);
    T out;
    nn::dense_forward(b.data(), P.at("value/out.w"), P.at("value/out.b"), &out, 1, Arch::head_fc2, 1);
    return out;
}

template <typename T>
void stable_head_t(const TypedParams<T>& P, const T* adaptive_feat, const ActionBounds& bounds, T* th) {
    std::vector<T> a(Arch::stable_fc1);
    nn::dense_forward(adaptive_feat, P.at("stable/fc1.w"), P.at("stable/fc1.b"), a.data(), 1,
                      Arch::adaptive_out, Arch::stable_fc1);
    for (T& v : a) v = nn::relu(v);
    T z[Arch::action_dim];
    nn::dense_forward(a.data(), P.at("stable/out.w"), P.at("stable/out.b"), z, 1, Arch::stable_fc1,
                      Arch::action_dim);
    T bound[2] = {static_cast<T>(bounds.v_max), static_cast<T>(bounds.w_max)};
    for (int i = 0; i < Arch::action_dim; ++i) th[i] = bound[i] * std::tanh(nn::softplus(z[i]));
}

// sign-preserving magnitude clip; ties belong to the threshold branch
template <typename T>
T clip_mag_scalar(T x, T th) {
    T s = x < T(0) ? T(-1) : T(1);
    T m = std::abs(x);
    return m < th ? x : s * th;
}

inline std::array<float, 2> clip_action(const std::array<float, 2>& a_p, const std::array<float, 2>& th) {
    return {clip_mag_scalar(a_p[0], th[0]), clip_mag_scalar(a_p[1], th[1])};
}

template <typename T>
T gauss_logp_scalar(const T* a, const T* mu, const T* log_std, int dim) {
    const T klog2pi = static_cast<T>(1.8378770664093455f);
    T acc = T(-0.5) * klog2pi * static_cast<T>(dim);
    for (int i = 0; i < dim; ++i) {
        T sigma = std::exp(log_std[i]);
        T z = (a[i] - mu[i]) / sigma;
        acc += T(-0.5) * z * z - log_std[i];
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Tape graph builders (batched float training path).

using ParamNodes = std::map<std::string, int>;

// Stage `stage_modules` into the tape; only `grad_modules` get gradients.
inline ParamNodes stage_params(nn::Tape& tape, const PolicyParams& p,
                               const std::set<std::string>& stage_modules,
                               const std::set<std::string>& grad_modules) {
    ParamNodes nodes;
    for (const auto& [key, t] : p.tensors) {
        std::string mod = PolicyParams::module_of(key);
        if (stage_modules.count(mod) == 0) continue;
        nodes[key] = tape.leaf(t, grad_modules.count(mod) > 0);
    }
    return nodes;
}

inline ParamNodes stage_params(nn::Tape& tape, const PolicyParams& p,
                               const std::set<std::string>& grad_modules) {
    std::set<std::string> all(modules::all().begin(), modules::all().end());
    return stage_params(tape, p, all, grad_modules);
}

inline int graph_lidar(nn::Tape& t, const ParamNodes& pn, int x /*[B,360]*/) {
    int B = t.val(x).shape[0];
    int h = t.reshape(x, {B, 1, Arch::lidar_beams});
    h = t.conv1d(h, pn.at("lidar/conv1.w"), pn.at("lidar/conv1.b"), 1, Arch::lidar_beams,
                 Arch::lidar_c1, Arch::lidar_k1, Arch::lidar_s1);
    h = t.relu_op(h);
    h = t.conv1d(h, pn.at("lidar/conv2.w"), pn.at("lidar/conv2.b"), Arch::lidar_c1, Arch::lidar_l1,
                 Arch::lidar_c2, Arch::lidar_k2, Arch::lidar_s2);
    h = t.relu_op(h);
    h = t.reshape(h, {B, Arch::lidar_flat});
    h = t.relu_op(t.dense(h, pn.at("lidar/fc1.w"), pn.at("lidar/fc1.b"), Arch::lidar_flat, Arch::lidar_fc1));
    h = t.relu_op(t.dense(h, pn.at("lidar/fc2.w"), pn.at("lidar/fc2.b"), Arch::lidar_fc1, Arch::lidar_out));
    return h;
}

inline int graph_elevation(nn::Tape& t, const ParamNodes& pn, int x /*[B,6400]*/) {
    int B = t.val(x).shape[0];
    int h = t.reshape(x, {B, 1, Arch::elev_n, Arch::elev_n});
    h = t.conv2d(h, pn.at("elevation/conv1.w"), pn.at("elevation/conv1.b"), 1, Arch::elev_n,
                 Arch::elev_n, Arch::elev_c1, Arch::elev_k1, Arch::elev_k1, Arch::elev_s1);
    h = t.relu_op(h);
    h = t.conv2d(h, pn.at("elevation/conv2.w"), pn.at("elevation/conv2.b"), Arch::elev_c1,
                 Arch::elev_n1, Arch::elev_n1, Arch::elev_c2, Arch::elev_k2, Arch::elev_k2, Arch::elev_s2);
    h = t.relu_op(h);
    h = t.conv2d(h, pn.at("elevation/conv3.w"), pn.at("elevation/conv3.b"), Arch::elev_c2,
                 Arch::elev_n2, Arch::elev_n2, Arch::elev_c3, Arch::elev_k3, Arch::elev_k3, Arch::elev_s3);
    h = t.relu_op(h);
    h = t.reshape(h, {B, Arch::elev_flat});
    h = t.relu_op(t.dense(h, pn.at("elevation/fc1.w"), pn.at("elevation/fc1.b"), Arch::elev_flat, Arch::elev_fc1));
    h = t.relu_op(t.dense(h, pn.at("elevation/fc2.w"), pn.at("elevation/fc2.b"), Arch::elev_fc1, Arch::elev_fc2));
    h = t.relu_op(t.dense(h, pn.at("elevation/fc3.w"), pn.at("elevation/fc3.b"), Arch::elev_fc2, Arch::elev_out));
    return h;
}

inline int graph_adaptive(nn::Tape& t, const ParamNodes& pn, int x /*[B,48]*/) {
    int h = t.relu_op(t.dense(x, pn.at("adaptive/fc1.w"), pn.at("adaptive/fc1.b"), Arch::adaptive_in,
                              Arch::adaptive_fc1));
    h = t.relu_op(t.dense(h, pn.at("adaptive/fc2.w"), pn.at("adaptive/fc2.b"), Arch::adaptive_fc1,
                          Arch::adaptive_out));
    return h;
}

inline int graph_policy_mean_raw(nn::Tape& t, const ParamNodes& pn, int feats /*[B,160]*/) {
    int h = t.relu_op(t.dense(feats, pn.at("policy/fc1.w"), pn.at("policy/fc1.b"), Arch::feat_dim,
                              Arch::head_fc1));
    h = t.relu_op(t.dense(h, pn.at("policy/fc2.w"), pn.at("policy/fc2.b"), Arch::head_fc1, Arch::head_fc2));
    return t.dense(h, pn.at("policy/mean.w"), pn.at("policy/mean.b"), Arch::head_fc2, Arch::action_dim);
}

inline int graph_value(nn::Tape& t, const ParamNodes& pn, int feats) {
    int h = t.relu_op(t.dense(feats, pn.at("value/fc1.w"), pn.at("value/fc1.b"), Arch::feat_dim,
                              Arch::head_fc1));
    h = t.relu_op(t.dense(h, pn.at("value/fc2.w"), pn.at("value/fc2.b"), Arch::head_fc1, Arch::head_fc2));
    return t.dense(h, pn.at("value/out.w"), pn.at("value/out.b"), Arch::head_fc2, 1);
}

inline int graph_stable(nn::Tape& t, const ParamNodes& pn, int adaptive_feat, const ActionBounds& bounds) {
    int h = t.relu_op(t.dense(adaptive_feat, pn.at("stable/fc1.w"), pn.at("stable/fc1.b"),
                              Arch::adaptive_out, Arch::stable_fc1));
    h = t.dense(h, pn.at("stable/out.w"), pn.at("stable/out.b"), Arch::stable_fc1, Arch::action_dim);
    h = t.tanh_op(t.softplus_op(h));
    return t.col_scale(h, {bounds.v_max, bounds.w_max});
}

// squash raw policy means onto the action bounds
inline int graph_squash(nn::Tape& t, int mean_raw, const ActionBounds& bounds) {
    return t.col_scale(t.tanh_op(mean_raw), {bounds.v_max, bounds.w_max});
}

// ---------------------------------------------------------------------------
// Checkpoint container: magic "ANLC", version u16, count u32, manifest of
// (module, tensor, shape, offset), then raw little-endian f32 planes.

inline constexpr std::uint16_t kCheckpointVersion = 1;

namespace detail {

inline void write_str(std::ostream& out, const std::string& s) {
    std::uint16_t n = static_cast<std::uint16_t>(s.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(s.data(), n);
}

inline std::string read_str(std::istream& in) {
    std::uint16_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!in) throw CorruptCheckpoint("truncated manifest string");
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw CorruptCheckpoint("truncated manifest string");
    return s;
}

}  // namespace detail

inline void save_checkpoint(const PolicyParams& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for write: " + path);
    out.write("ANLC", 4);
    out.write(reinterpret_cast<const char*>(&kCheckpointVersion), sizeof(kCheckpointVersion));
    std::uint32_t count = static_cast<std::uint32_t>(p.tensors.size());
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    std::uint64_t offset = 0;
    for (const auto& [key, t] : p.tensors) {
        std::string module = PolicyParams::module_of(key);
        std::string name = key.substr(module.size() + 1);
        detail::write_str(out, module);
        detail::write_str(out, name);
        std::uint8_t ndim = static_cast<std::uint8_t>(t.shape.size());
        out.write(reinterpret_cast<const char*>(&ndim), sizeof(ndim));
        for (int d : t.shape) {
            std::uint32_t dd = static_cast<std::uint32_t>(d);
            out.write(reinterpret_cast<const char*>(&dd), sizeof(dd));
        }
        out.write(reinterpret_cast<const char*>(&offset), sizeof(offset));
        offset += t.numel() * sizeof(float);
    }
    for (const auto& [key, t] : p.tensors)
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!out) throw IoError("checkpoint write failed: " + path);
}

inline PolicyParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for read: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "ANLC", 4) != 0) throw CorruptCheckpoint("bad checkpoint magic");
    std::uint16_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kCheckpointVersion) throw CorruptCheckpoint("unsupported checkpoint version");
    std::uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in) throw CorruptCheckpoint("truncated checkpoint header");

    struct Entry {
        std::string key;
        std::vector<int> shape;
        std::uint64_t offset;
    };
    std::vector<Entry> entries;
    std::uint64_t expect_offset = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        Entry e;
        std::string module = detail::read_str(in);
        std::string name = detail::read_str(in);
        e.key = module + "/" + name;
        std::uint8_t ndim = 0;
        in.read(reinterpret_cast<char*>(&ndim), sizeof(ndim));
        for (int d = 0; d < ndim; ++d) {
            std::uint32_t dd = 0;
            in.read(reinterpret_cast<char*>(&dd), sizeof(dd));
            e.shape.push_back(static_cast<int>(dd));
        }
        in.read(reinterpret_cast<char*>(&e.offset), sizeof(e.offset));
        if (!in) throw CorruptCheckpoint("truncated manifest");
        if (e.offset != expect_offset) throw CorruptCheckpoint("manifest offset mismatch: " + e.key);
        expect_offset += Tensor::numel_of(e.shape) * sizeof(float);
        entries.push_back(std::move(e));
    }
    PolicyParams p;
    for (const Entry& e : entries) {
        Tensor t(e.shape);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!in) throw CorruptCheckpoint("truncated tensor data: " + e.key);
        p.tensors[e.key] = std::move(t);
    }
    char extra;
    if (in.read(&extra, 1)) throw CorruptCheckpoint("trailing bytes after tensor data");
    for (const std::string& m : modules::all()) p.trainable[m] = true;
    return p;
}

// ---------------------------------------------------------------------------
// First-order adaptive-moment optimizer with per-module masking. Frozen
// modules are skipped entirely, moments included, so their parameters stay
// bit-identical across updates.

struct AdamConfig {
    float lr = 3e-4f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

struct AdamState {
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
    std::int64_t step = 0;
};

inline void apply_masked_update(PolicyParams& params, const std::map<std::string, Tensor>& grads,
                                AdamState& opt, const AdamConfig& cfg) {
    opt.step += 1;
    float b1t = 1.0f - std::pow(cfg.beta1, static_cast<float>(opt.step));
    float b2t = 1.0f - std::pow(cfg.beta2, static_cast<float>(opt.step));
    for (auto& [key, t] : params.tensors) {
        if (!params.is_trainable(key)) continue;
        auto git = grads.find(key);
        if (git == grads.end()) continue;
        const Tensor& g = git->second;
        if (!g.same_shape(t)) throw ShapeError("gradient shape mismatch: " + key);
        Tensor& m = opt.m.try_emplace(key, Tensor(t.shape)).first->second;
        Tensor& v = opt.v.try_emplace(key, Tensor(t.shape)).first->second;
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            float gi = g.data[i];
            m.data[i] = cfg.beta1 * m.data[i] + (1.0f - cfg.beta1) * gi;
            v.data[i] = cfg.beta2 * v.data[i] + (1.0f - cfg.beta2) * gi * gi;
            float mh = m.data[i] / b1t;
            float vh = v.data[i] / b2t;
            t.data[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
        }
    }
    // keep the exploration scale inside its working window
    auto ls = params.tensors.find("policy/log_std");
    if (ls != params.tensors.end() && params.is_trainable("policy/log_std"))
        for (float& v : ls->second.data)
            v = std::min(std::max(v, Arch::log_std_min), Arch::log_std_max);
}

}  // namespace anl
