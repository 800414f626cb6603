#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "anl/models.hpp"
#include "anl/nn/tape.hpp"
#include "anl/rollout.hpp"

namespace anl {

struct PPOConfig {
    double gamma = 0.99;
    double lambda_gae = 0.95;
    double clip_eps = 0.2;
    int epochs_per_batch = 4;
    int minibatch_size = 256;
    int steps_per_batch = 4096;
    double learning_rate = 3e-4;
    double value_coef = 0.5;
    double entropy_coef = 0.01;
    double max_grad_norm = 0.5;
    double init_log_std = -0.5;

    void validate() const {
        if (gamma <= 0.0 || gamma >= 1.0) throw InvalidArgument("gamma must be in (0, 1)");
        if (lambda_gae < 0.0 || lambda_gae > 1.0) throw InvalidArgument("lambda_gae must be in [0, 1]");
        if (clip_eps <= 0.0 || clip_eps > 0.5) throw InvalidArgument("clip_eps must be in (0, 0.5]");
        if (epochs_per_batch <= 0 || minibatch_size <= 0 || steps_per_batch <= 0)
            throw InvalidArgument("epochs, minibatch and batch sizes must be positive");
        if (learning_rate <= 0.0 || value_coef < 0.0 || entropy_coef < 0.0 || max_grad_norm <= 0.0)
            throw InvalidArgument("learning_rate, coefficients and max_grad_norm must be positive");
    }
};

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
    double grad_norm = 0.0;
    int minibatches = 0;
};

namespace detail {

struct ChunkResult {
    std::map<std::string, Tensor> grads;
    double surr_sum = 0.0;
    double vloss_sum = 0.0;
    double kl_sum = 0.0;
    int clipped = 0;
};

// Gathers rows `idx[from..to)` of a [N, dim] array into a tensor [C, dim].
inline Tensor gather_rows(const std::vector<float>& src, const std::vector<int>& idx, int from,
                          int to, int dim) {
    Tensor t({to - from, dim});
    for (int r = from; r < to; ++r)
        std::memcpy(&t.data[static_cast<std::size_t>(r - from) * dim],
                    &src[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)]) * dim],
                    sizeof(float) * static_cast<std::size_t>(dim));
    return t;
}

inline Tensor gather_scalar(const std::vector<float>& src, const std::vector<int>& idx, int from, int to) {
    Tensor t({to - from});
    for (int r = from; r < to; ++r)
        t.data[static_cast<std::size_t>(r - from)] = src[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])];
    return t;
}

// Builds the clipped-surrogate loss over one chunk of the minibatch and
// backpropagates it. Frozen encoders enter as cached constants; everything
// else is rebuilt so gradients can flow, including through frozen modules
// into trainable ancestors.
inline ChunkResult ppo_chunk(const PolicyParams& params, const RolloutBuffer& buf,
                             const std::vector<int>& idx, int from, int to, const PPOConfig& cfg,
                             const ActionBounds& bounds, float inv_mb) {
    std::set<std::string> grad_modules;
    for (const auto& [m, on] : params.trainable)
        if (on) grad_modules.insert(m);

    bool lidar_train = grad_modules.count(modules::kLidar) > 0;
    bool elev_train = grad_modules.count(modules::kElevation) > 0;
    bool ada_train = grad_modules.count(modules::kAdaptive) > 0;

    int C = to - from;
    nn::Tape t;
    std::set<std::string> staged = {modules::kPolicy, modules::kValue};
    if (grad_modules.count(modules::kStable) > 0 || ada_train) staged.insert(modules::kStable);
    if (ada_train) staged.insert(modules::kAdaptive);
    if (lidar_train) staged.insert(modules::kLidar);
    if (elev_train) staged.insert(modules::kElevation);
    ParamNodes pn = stage_params(t, params, staged, grad_modules);

    int lidar_feat = lidar_train
                         ? graph_lidar(t, pn, t.constant(gather_rows(buf.lidar, idx, from, to, Arch::lidar_beams)))
                         : t.constant(gather_rows(buf.feat_lidar, idx, from, to, Arch::lidar_out));
    int elev_feat;
    if (elev_train) {
        if (!buf.store_patch) throw AbortUpdate("elevation trainable but patches were not stored");
        elev_feat = graph_elevation(
            t, pn, t.constant(gather_rows(buf.patch, idx, from, to, Arch::elev_n * Arch::elev_n)));
    } else {
        elev_feat = t.constant(gather_rows(buf.feat_elev, idx, from, to, Arch::elev_out));
    }
    int ada_feat = ada_train
                       ? graph_adaptive(t, pn, t.constant(gather_rows(buf.hist, idx, from, to, kHistoryDim)))
                       : t.constant(gather_rows(buf.feat_ada, idx, from, to, Arch::adaptive_out));

    int feats = t.concat_cols({lidar_feat, elev_feat, ada_feat});
    int mean_raw = graph_policy_mean_raw(t, pn, feats);
    int mu = graph_squash(t, mean_raw, bounds);
    // threshold: recompute through the stable graph whenever its input can
    // change or it trains; otherwise the collected values are exact
    int th;
    if (grad_modules.count(modules::kStable) > 0 || ada_train) {
        th = graph_stable(t, pn, ada_feat, bounds);
    } else {
        th = t.constant(gather_rows(buf.th, idx, from, to, 2));
    }
    int mu_c = t.clip_mag(mu, th);
    int ls = t.clamp_op(pn.at("policy/log_std"), Arch::log_std_min, Arch::log_std_max);
    int a_const = t.constant(gather_rows(buf.a, idx, from, to, 2));
    int logp_new = t.gauss_logp(a_const, mu_c, ls);

    int logp_old = t.constant(gather_scalar(buf.logp, idx, from, to));
    int adv = t.constant(gather_scalar(buf.advantages, idx, from, to));
    int ratio = t.exp_op(t.sub(logp_new, logp_old));
    int surr1 = t.mul(ratio, adv);
    int surr2 = t.mul(t.clamp_op(ratio, static_cast<float>(1.0 - cfg.clip_eps),
                                 static_cast<float>(1.0 + cfg.clip_eps)),
                      adv);
    int surr = t.min2(surr1, surr2);
    int policy_term = t.scale(t.sum(surr), -inv_mb);

    int v = t.reshape(graph_value(t, pn, feats), {C});
    int vdiff = t.sub(v, t.constant(gather_scalar(buf.returns, idx, from, to)));
    int value_term = t.scale(t.sum(t.mul(vdiff, vdiff)), static_cast<float>(cfg.value_coef) * inv_mb);

    // entropy of the diagonal gaussian: sum(log_std) + D/2 (1 + log 2 pi);
    // only the log_std part carries gradient
    int ent_term = t.scale(t.sum(ls), -static_cast<float>(cfg.entropy_coef) * inv_mb * C);

    int loss = t.add(t.add(policy_term, value_term), ent_term);
    float loss_val = t.val(loss).data[0];
    if (!std::isfinite(loss_val)) {
        std::ostringstream os;
        os << "non-finite PPO loss (chunk " << from << ".." << to << "): policy="
           << t.val(policy_term).data[0] << " value=" << t.val(value_term).data[0];
        throw AbortUpdate(os.str());
    }

    ChunkResult res;
    for (int r = 0; r < C; ++r) {
        float rv = t.val(ratio).data[static_cast<std::size_t>(r)];
        float lp_new = t.val(logp_new).data[static_cast<std::size_t>(r)];
        float lp_old = t.val(logp_old).data[static_cast<std::size_t>(r)];
        res.kl_sum += lp_old - lp_new;
        if (rv < 1.0 - cfg.clip_eps || rv > 1.0 + cfg.clip_eps) ++res.clipped;
        res.surr_sum += t.val(surr).data[static_cast<std::size_t>(r)];
        float vd = t.val(vdiff).data[static_cast<std::size_t>(r)];
        res.vloss_sum += static_cast<double>(vd) * vd;
    }

    t.backward(loss);
    for (const auto& [key, node] : pn) {
        if (!params.is_trainable(key)) continue;
        Tensor& g = t.grad(node);
        if (g.data.empty()) g = Tensor(params.tensors.at(key).shape);
        res.grads[key] = std::move(g);
    }
    return res;
}

}  // namespace detail

// One PPO update over the collected batch: epochs x shuffled minibatches,
// one optimizer step per minibatch, gradient-norm clipping, frozen modules
// untouched. Chunks of fixed size are reduced in order, so the result does
// not depend on the worker count.
inline UpdateStats ppo_update(PolicyParams& params, const RolloutBuffer& buf, const PPOConfig& cfg,
                              AdamState& opt, ActionBounds bounds, std::uint64_t seed) {
    cfg.validate();
    int N = buf.rows();
    if (N == 0) throw InvalidArgument("empty rollout buffer");
    const int chunk_size = 64;

    AdamConfig adam;
    adam.lr = static_cast<float>(cfg.learning_rate);

    UpdateStats stats;
    double ent_const = 0.0;
    {
        const Tensor& ls = params.tensors.at("policy/log_std");
        for (float v : ls.data)
            ent_const += std::min(std::max(v, Arch::log_std_min), Arch::log_std_max);
        stats.entropy = ent_const + 0.5 * 2 * (1.0 + std::log(2.0 * kPi));
    }

    std::vector<int> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), 0);
    Pcg32 shuffle_rng(mix64(seed, 0x50504fULL));

    double surr_total = 0.0, vloss_total = 0.0, kl_total = 0.0, grad_norm_total = 0.0;
    long clipped_total = 0, samples_total = 0;

    for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
        for (int i = N - 1; i > 0; --i) std::swap(order[static_cast<std::size_t>(i)],
                                                  order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, i))]);
        for (int start = 0; start + cfg.minibatch_size <= N; start += cfg.minibatch_size) {
            int mb = cfg.minibatch_size;
            float inv_mb = 1.0f / static_cast<float>(mb);
            std::vector<std::pair<int, int>> chunks;
            for (int c = 0; c < mb; c += chunk_size)
                chunks.emplace_back(start + c, start + std::min(c + chunk_size, mb));
            std::vector<detail::ChunkResult> results(chunks.size());
            std::exception_ptr err;
            parallel_for(static_cast<int>(chunks.size()), [&](int ci) {
                try {
                    results[static_cast<std::size_t>(ci)] =
                        detail::ppo_chunk(params, buf, order, chunks[static_cast<std::size_t>(ci)].first,
                                          chunks[static_cast<std::size_t>(ci)].second, cfg, bounds, inv_mb);
                } catch (...) {
                    err = std::current_exception();
                }
            });
            if (err) std::rethrow_exception(err);

            std::map<std::string, Tensor> grads;
            for (auto& res : results) {
                for (auto& [key, g] : res.grads) {
                    auto it = grads.find(key);
                    if (it == grads.end()) {
                        grads[key] = std::move(g);
                    } else {
                        for (std::size_t k = 0; k < g.data.size(); ++k) it->second.data[k] += g.data[k];
                    }
                }
                surr_total += res.surr_sum;
                vloss_total += res.vloss_sum;
                kl_total += res.kl_sum;
                clipped_total += res.clipped;
            }
            samples_total += mb;

            double norm_sq = 0.0;
            for (const auto& [key, g] : grads)
                for (float v : g.data) norm_sq += static_cast<double>(v) * v;
            double norm = std::sqrt(norm_sq);
            grad_norm_total += norm;
            if (norm > cfg.max_grad_norm) {
                float scale = static_cast<float>(cfg.max_grad_norm / (norm + 1e-12));
                for (auto& [key, g] : grads)
                    for (float& v : g.data) v *= scale;
            }
            apply_masked_update(params, grads, opt, adam);
            ++stats.minibatches;
        }
    }

    if (samples_total > 0) {
        stats.policy_loss = -surr_total / static_cast<double>(samples_total);
        stats.value_loss = vloss_total / static_cast<double>(samples_total);
        stats.approx_kl = kl_total / static_cast<double>(samples_total);
        stats.clip_fraction = static_cast<double>(clipped_total) / static_cast<double>(samples_total);
        stats.grad_norm = stats.minibatches ? grad_norm_total / stats.minibatches : 0.0;
    }
    return stats;
}

}  // namespace anl
