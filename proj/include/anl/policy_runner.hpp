#pragma once

#include <array>
#include <cstring>
#include <vector>

#include "anl/models.hpp"
#include "anl/rng.hpp"
#include "anl/sensors.hpp"

namespace anl {

enum class Ablation { None, Stable, Adaptive };

inline const char* ablation_name(Ablation a) {
    switch (a) {
        case Ablation::None: return "none";
        case Ablation::Stable: return "stable";
        case Ablation::Adaptive: return "adaptive";
    }
    return "none";
}

inline Ablation ablation_from_name(const std::string& s) {
    if (s == "none") return Ablation::None;
    if (s == "stable") return Ablation::Stable;
    if (s == "adaptive") return Ablation::Adaptive;
    throw InvalidArgument("unknown ablation mode: " + s);
}

struct ModelEval {
    std::array<float, Arch::lidar_out> lidar_feat{};
    std::array<float, Arch::elev_out> elev_feat{};
    std::array<float, Arch::adaptive_out> adaptive_feat{};
    std::array<float, 2> mean_raw{};
    std::array<float, 2> mu{};       // squashed mean
    std::array<float, 2> th{};
    std::array<float, 2> log_std{};  // clamped
    float value = 0.0f;
};

struct SampledAction {
    std::array<float, 2> a_p{};  // pre-clip sample
    std::array<float, 2> a{};    // executed
    float logp = 0.0f;           // log N(a; clip(mu, th), sigma)
};

// Inference-side forward pass over one observation. Identical scans or
// patches reuse the previous encoder output (exact input equality), which
// makes flat featureless worlds nearly free without changing any result.
class PolicyRunner {
public:
    PolicyRunner(const PolicyParams& params, ActionBounds bounds, Ablation ablation = Ablation::None)
        : typed_(TypedParams<float>::from(params)), bounds_(bounds), ablation_(ablation) {
        const auto& ls = params.tensors.at("policy/log_std");
        for (int i = 0; i < 2; ++i)
            log_std_[static_cast<std::size_t>(i)] =
                std::min(std::max(ls.data[static_cast<std::size_t>(i)], Arch::log_std_min), Arch::log_std_max);
    }

    Ablation ablation() const { return ablation_; }
    const ActionBounds& bounds() const { return bounds_; }

    ModelEval eval(const Observation& obs) {
        ModelEval out;
        std::array<float, Arch::lidar_beams> scan01{};
        if (static_cast<int>(obs.lidar.ranges.size()) != Arch::lidar_beams)
            throw ShapeError("lidar scan length mismatch");
        for (int i = 0; i < Arch::lidar_beams; ++i)
            scan01[static_cast<std::size_t>(i)] =
                obs.lidar.ranges[static_cast<std::size_t>(i)] / static_cast<float>(obs.lidar.max_range);
        encode_cached(lidar_cache_, scan01.data(), scan01.size(), out.lidar_feat.data(),
                      [&](const float* in, float* feat) { lidar_encode_t(typed_, in, feat); });

        if (static_cast<int>(obs.patch.values.size()) != Arch::elev_n * Arch::elev_n)
            throw ShapeError("elevation patch shape mismatch");
        encode_cached(elev_cache_, obs.patch.values.data(), obs.patch.values.size(),
                      out.elev_feat.data(),
                      [&](const float* in, float* feat) { elevation_encode_t(typed_, in, feat); });

        std::array<float, kHistoryDim> hist = obs.history.flatten();
        if (ablation_ == Ablation::Adaptive) {
            out.adaptive_feat.fill(0.0f);
        } else {
            adaptive_encode_t(typed_, hist.data(), out.adaptive_feat.data());
        }

        std::array<float, Arch::feat_dim> feats{};
        std::memcpy(feats.data(), out.lidar_feat.data(), sizeof(out.lidar_feat));
        std::memcpy(feats.data() + Arch::lidar_out, out.elev_feat.data(), sizeof(out.elev_feat));
        std::memcpy(feats.data() + Arch::lidar_out + Arch::elev_out, out.adaptive_feat.data(),
                    sizeof(out.adaptive_feat));

        policy_head_t(typed_, feats.data(), out.mean_raw.data());
        out.mu[0] = bounds_.v_max * std::tanh(out.mean_raw[0]);
        out.mu[1] = bounds_.w_max * std::tanh(out.mean_raw[1]);
        stable_head_t(typed_, out.adaptive_feat.data(), bounds_, out.th.data());
        out.value = value_head_t(typed_, feats.data());
        out.log_std = log_std_;
        for (float v : {out.mu[0], out.mu[1], out.th[0], out.th[1], out.value})
            if (!std::isfinite(v)) throw AbortUpdate("non-finite model output");
        return out;
    }

    // Stochastic action for rollouts: gaussian around the squashed mean, then
    // magnitude-clipped by the stable threshold (unless ablated). The stored
    // log density is taken at the executed action around the clipped mean,
    // which is the pathway that lets the threshold learn from the objective.
    SampledAction sample(const ModelEval& ev, Pcg32& rng) const {
        SampledAction s;
        double n0 = rng.normal();
        double n1 = rng.normal();
        s.a_p[0] = ev.mu[0] + std::exp(ev.log_std[0]) * static_cast<float>(n0);
        s.a_p[1] = ev.mu[1] + std::exp(ev.log_std[1]) * static_cast<float>(n1);
        if (ablation_ == Ablation::Stable) {
            s.a = s.a_p;
        } else {
            s.a = clip_action(s.a_p, ev.th);
        }
        s.logp = action_logp(ev, s.a);
        return s;
    }

    // Deterministic action for evaluation.
    std::array<float, 2> act_mean(const ModelEval& ev) const {
        if (ablation_ == Ablation::Stable) return ev.mu;
        return clip_action(ev.mu, ev.th);
    }

    // log N(a; clip(mu, th), sigma); matches the training graph bit for bit.
    float action_logp(const ModelEval& ev, const std::array<float, 2>& a) const {
        std::array<float, 2> mu_c = clip_action(ev.mu, ev.th);
        if (ablation_ == Ablation::Stable) mu_c = ev.mu;
        return gauss_logp_scalar(a.data(), mu_c.data(), ev.log_std.data(), 2);
    }

private:
    struct Cache {
        std::vector<float> input;
        std::vector<float> feat;
        bool valid = false;
    };

    template <typename Fn>
    void encode_cached(Cache& cache, const float* in, std::size_t n, float* out, Fn&& fn) {
        std::size_t feat_n = (&cache == &lidar_cache_) ? Arch::lidar_out : Arch::elev_out;
        if (cache.valid && cache.input.size() == n &&
            std::memcmp(cache.input.data(), in, n * sizeof(float)) == 0) {
            std::memcpy(out, cache.feat.data(), feat_n * sizeof(float));
            return;
        }
        fn(in, out);
        cache.input.assign(in, in + n);
        cache.feat.assign(out, out + feat_n);
        cache.valid = true;
    }

    TypedParams<float> typed_;
    ActionBounds bounds_;
    Ablation ablation_;
    std::array<float, 2> log_std_{};
    Cache lidar_cache_;
    Cache elev_cache_;
};

}  // namespace anl
