#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "anl/nn/kernels.hpp"
#include "anl/tensor.hpp"

namespace anl::nn {

// Reverse-mode tape over batched float tensors. Build the graph with the op
// functions, call backward(loss) once, then read gradients of the leaves.
// A consumed tape must not be extended or replayed.
class Tape {
public:
    struct Node {
        Tensor val;
        Tensor grad;  // allocated on demand during backward
        bool needs_grad = false;
        std::function<void(Tape&, int)> backprop;  // distributes node grad to parents
    };

    int constant(Tensor v) { return add_node(std::move(v), false, nullptr); }

    int leaf(Tensor v, bool needs_grad) { return add_node(std::move(v), needs_grad, nullptr); }

    const Tensor& val(int id) const { return nodes_[static_cast<std::size_t>(id)].val; }
    Tensor& grad(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
    bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

    void backward(int loss_id) {
        if (consumed_) throw AbortUpdate("tape already consumed by backward");
        consumed_ = true;
        Node& loss = nodes_[static_cast<std::size_t>(loss_id)];
        if (loss.val.numel() != 1) throw ShapeError("backward expects a scalar loss");
        ensure_grad(loss_id);
        loss.grad.data[0] = 1.0f;
        for (int id = loss_id; id >= 0; --id) {
            Node& n = nodes_[static_cast<std::size_t>(id)];
            if (!n.needs_grad || n.grad.data.empty() || !n.backprop) continue;
            n.backprop(*this, id);
        }
    }

    void ensure_grad(int id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.grad.data.empty()) n.grad = Tensor(n.val.shape);
    }

    float* grad_ptr(int id) {
        ensure_grad(id);
        return nodes_[static_cast<std::size_t>(id)].grad.ptr();
    }

    // --- ops ---------------------------------------------------------------

    int dense(int x, int w, int b, int in, int out) {
        const Tensor& xv = val(x);
        int B = xv.shape[0];
        Tensor y({B, out});
        dense_forward(xv.ptr(), val(w).ptr(), b >= 0 ? val(b).ptr() : nullptr, y.ptr(), B, in, out);
        bool ng = needs_grad(x) || needs_grad(w) || (b >= 0 && needs_grad(b));
        return add_node(std::move(y), ng, [x, w, b, in, out, B](Tape& t, int self) {
            const float* dy = t.grad(self).ptr();
            float* dx = t.needs_grad(x) ? t.grad_ptr(x) : nullptr;
            float* dw = t.needs_grad(w) ? t.grad_ptr(w) : nullptr;
            float* db = (b >= 0 && t.needs_grad(b)) ? t.grad_ptr(b) : nullptr;
            dense_backward(t.val(x).ptr(), t.val(w).ptr(), dy, dx, dw, db, B, in, out);
        });
    }

    int conv1d(int x, int w, int b, int cin, int len, int cout, int k, int stride) {
        const Tensor& xv = val(x);
        int B = xv.shape[0];
        int lo = conv_out_len(len, k, stride);
        Tensor y({B, cout, lo});
        conv1d_forward(xv.ptr(), val(w).ptr(), b >= 0 ? val(b).ptr() : nullptr, y.ptr(), B, cin, len,
                       cout, k, stride);
        bool ng = needs_grad(x) || needs_grad(w) || (b >= 0 && needs_grad(b));
        return add_node(std::move(y), ng, [x, w, b, cin, len, cout, k, stride, B](Tape& t, int self) {
            const float* dy = t.grad(self).ptr();
            float* dx = t.needs_grad(x) ? t.grad_ptr(x) : nullptr;
            float* dw = t.needs_grad(w) ? t.grad_ptr(w) : nullptr;
            float* db = (b >= 0 && t.needs_grad(b)) ? t.grad_ptr(b) : nullptr;
            conv1d_backward(t.val(x).ptr(), t.val(w).ptr(), dy, dx, dw, db, B, cin, len, cout, k, stride);
        });
    }

    int conv2d(int x, int w, int b, int cin, int h, int wdt, int cout, int kh, int kw, int stride) {
        const Tensor& xv = val(x);
        int B = xv.shape[0];
        int ho = conv_out_len(h, kh, stride);
        int wo = conv_out_len(wdt, kw, stride);
        Tensor y({B, cout, ho, wo});
        conv2d_forward(xv.ptr(), val(w).ptr(), b >= 0 ? val(b).ptr() : nullptr, y.ptr(), B, cin, h,
                       wdt, cout, kh, kw, stride);
        bool ng = needs_grad(x) || needs_grad(w) || (b >= 0 && needs_grad(b));
        return add_node(std::move(y), ng,
                        [x, w, b, cin, h, wdt, cout, kh, kw, stride, B](Tape& t, int self) {
                            const float* dy = t.grad(self).ptr();
                            float* dx = t.needs_grad(x) ? t.grad_ptr(x) : nullptr;
                            float* dw = t.needs_grad(w) ? t.grad_ptr(w) : nullptr;
                            float* db = (b >= 0 && t.needs_grad(b)) ? t.grad_ptr(b) : nullptr;
                            conv2d_backward(t.val(x).ptr(), t.val(w).ptr(), dy, dx, dw, db, B, cin,
                                            h, wdt, cout, kh, kw, stride);
                        });
    }

    int reshape(int x, std::vector<int> shape) {
        Tensor y(std::move(shape));
        if (y.numel() != val(x).numel()) throw ShapeError("reshape numel mismatch");
        y.data = val(x).data;
        return add_node(std::move(y), needs_grad(x), [x](Tape& t, int self) {
            if (!t.needs_grad(x)) return;
            const auto& dy = t.grad(self).data;
            float* dx = t.grad_ptr(x);
            for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
        });
    }

    int relu_op(int x) {
        Tensor y = val(x);
        for (float& v : y.data) v = relu(v);
        return add_node(std::move(y), needs_grad(x), [x](Tape& t, int self) {
            if (!t.needs_grad(x)) return;
            const auto& dy = t.grad(self).data;
            const auto& xv = t.val(x).data;
            float* dx = t.grad_ptr(x);
            for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += xv[i] > 0.0f ? dy[i] : 0.0f;
        });
    }

    int tanh_op(int x) {
        Tensor y = val(x);
        for (float& v : y.data) v = std::tanh(v);
        return add_node(std::move(y), needs_grad(x), [x](Tape& t, int self) {
            if (!t.needs_grad(x)) return;
            const auto& dy = t.grad(self).data;
            const auto& yv = t.val(self).data;
            float* dx = t.grad_ptr(x);
            for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (1.0f - yv[i] * yv[i]);
        });
    }

    int softplus_op(int x) {
        Tensor y = val(x);
        for (float& v : y.data) v = softplus(v);
        return add_node(std::move(y), needs_grad(x), [x](Tape& t, int self) {
            if (!t.needs_grad(x)) return;
            const auto& dy = t.grad(self).data;
            const auto& xv = t.val(x).data;
            float* dx = t.grad_ptr(x);
            for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * sigmoid(xv[i]);
        });
    }

    int exp_op(int x) {
        Tensor y = val(x);
        for (float& v : y.data) v = std::exp(v);
        return add_node(std::move(y), needs_grad(x), [x](Tape& t, int self) {
            if (!t.needs_grad(x)) return;
            const auto& dy = t.grad(self).data;
            const auto& yv = t.val(self).data;
            float* dx = t.grad_ptr(x);
            for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * yv[i];
        });
    }

    // clamp with pass-through gradient strictly inside the interval
    int clamp_op(int x, float lo, float hi) {
        Tensor y = val(x);
        for (float& v : y.data) v = std::min(std::max(v, lo), hi);
        return add_node(std::move(y), needs_grad(x), [x, lo, hi](Tape& t, int self) {
            if (!t.needs_grad(x)) return;
            const auto& dy = t.grad(self).data;
            const auto& xv = t.val(x).data;
            float* dx = t.grad_ptr(x);
            for (std::size_t i = 0; i < dy.size(); ++i)
                if (xv[i] > lo && xv[i] < hi) dx[i] += dy[i];
        });
    }

    int add(int a, int b) {
        const Tensor& av = val(a);
        if (!av.same_shape(val(b))) throw ShapeError("add shape mismatch");
        Tensor y = av;
        const auto& bv = val(b).data;
        for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += bv[i];
        return add_node(std::move(y), needs_grad(a) || needs_grad(b), [a, b](Tape& t, int self) {
            const auto& dy = t.grad(self).data;
            if (t.needs_grad(a)) {
                float* da = t.grad_ptr(a);
                for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
            }
            if (t.needs_grad(b)) {
                float* db = t.grad_ptr(b);
                for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i];
            }
        });
    }

    int sub(int a, int b) {
        const Tensor& av = val(a);
        if (!av.same_shape(val(b))) throw ShapeError("sub shape mismatch");
        Tensor y = av;
        const auto& bv = val(b).data;
        for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] -= bv[i];
        return add_node(std::move(y), needs_grad(a) || needs_grad(b), [a, b](Tape& t, int self) {
            const auto& dy = t.grad(self).data;
            if (t.needs_grad(a)) {
                float* da = t.grad_ptr(a);
                for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
            }
            if (t.needs_grad(b)) {
                float* db = t.grad_ptr(b);
                for (std::size_t i = 0; i < dy.size(); ++i) db[i] -= dy[i];
            }
        });
    }

    int mul(int a, int b) {
        const Tensor& av = val(a);
        if (!av.same_shape(val(b))) throw ShapeError("mul shape mismatch");
        Tensor y = av;
        const auto& bv = val(b).data;
        for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] *= bv[i];
        return add_node(std::move(y), needs_grad(a) || needs_grad(b), [a, b](Tape& t, int self) {
            const auto& dy = t.grad(self).data;
            const auto& avd = t.val(a).data;
            const auto& bvd = t.val(b).data;
            if (t.needs_grad(a)) {
                float* da = t.grad_ptr(a);
                for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * bvd[i];
            }
            if (t.needs_grad(b)) {
                float* db = t.grad_ptr(b);
                for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * avd[i];
            }
        });
    }

    int scale(int x, float c) {
        Tensor y = val(x);
        for (float& v : y.data) v *= c;
        return add_node(std::move(y), needs_grad(x), [x, c](Tape& t, int self) {
            if (!t.needs_grad(x)) return;
            const auto& dy = t.grad(self).data;
            float* dx = t.grad_ptr(x);
            for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * c;
        });
    }

    // multiply columns of [B, C] by fixed per-column constants
    int col_scale(int x, std::vector<float> cols) {
        const Tensor& xv = val(x);
        int B = xv.shape[0];
        int C = xv.shape[1];
        if (static_cast<int>(cols.size()) != C) throw ShapeError("col_scale width mismatch");
        Tensor y = xv;
        for (int b = 0; b < B; ++b)
            for (int c = 0; c < C; ++c) y.data[static_cast<std::size_t>(b) * C + c] *= cols[static_cast<std::size_t>(c)];
        return add_node(std::move(y), needs_grad(x), [x, cols, B, C](Tape& t, int self) {
            if (!t.needs_grad(x)) return;
            const auto& dy = t.grad(self).data;
            float* dx = t.grad_ptr(x);
            for (int b = 0; b < B; ++b)
                for (int c = 0; c < C; ++c)
                    dx[static_cast<std::size_t>(b) * C + c] +=
                        dy[static_cast<std::size_t>(b) * C + c] * cols[static_cast<std::size_t>(c)];
        });
    }

    int concat_cols(const std::vector<int>& xs) {
        int B = val(xs[0]).shape[0];
        int total = 0;
        for (int id : xs) {
            if (val(id).shape[0] != B) throw ShapeError("concat_cols batch mismatch");
            total += val(id).shape[1];
        }
        Tensor y({B, total});
        int off = 0;
        bool ng = false;
        for (int id : xs) {
            int c = val(id).shape[1];
            for (int b = 0; b < B; ++b)
                for (int i = 0; i < c; ++i)
                    y.data[static_cast<std::size_t>(b) * total + off + i] =
                        val(id).data[static_cast<std::size_t>(b) * c + i];
            off += c;
            ng = ng || needs_grad(id);
        }
        std::vector<int> parts = xs;
        return add_node(std::move(y), ng, [parts, B, total](Tape& t, int self) {
            const auto& dy = t.grad(self).data;
            int off = 0;
            for (int id : parts) {
                int c = t.val(id).shape[1];
                if (t.needs_grad(id)) {
                    float* dx = t.grad_ptr(id);
                    for (int b = 0; b < B; ++b)
                        for (int i = 0; i < c; ++i)
                            dx[static_cast<std::size_t>(b) * c + i] +=
                                dy[static_cast<std::size_t>(b) * total + off + i];
                }
                off += c;
            }
        });
    }

    // sign-preserving magnitude clip y_i = sign(x_i) * min(|x_i|, t_i).
    // Piecewise gradient; ties route to the threshold branch.
    int clip_mag(int x, int th) {
        const Tensor& xv = val(x);
        if (!xv.same_shape(val(th))) throw ShapeError("clip_mag shape mismatch");
        Tensor y = xv;
        const auto& tv = val(th).data;
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            float s = y.data[i] < 0.0f ? -1.0f : 1.0f;
            y.data[i] = s * std::min(std::abs(y.data[i]), tv[i]);
        }
        return add_node(std::move(y), needs_grad(x) || needs_grad(th), [x, th](Tape& t, int self) {
            const auto& dy = t.grad(self).data;
            const auto& xv2 = t.val(x).data;
            const auto& tv2 = t.val(th).data;
            float* dx = t.needs_grad(x) ? t.grad_ptr(x) : nullptr;
            float* dth = t.needs_grad(th) ? t.grad_ptr(th) : nullptr;
            for (std::size_t i = 0; i < dy.size(); ++i) {
                if (std::abs(xv2[i]) < tv2[i]) {
                    if (dx) dx[i] += dy[i];
                } else if (dth) {
                    dth[i] += dy[i] * (xv2[i] < 0.0f ? -1.0f : 1.0f);
                }
            }
        });
    }

    // elementwise min with first-argument preference on ties
    int min2(int a, int b) {
        const Tensor& av = val(a);
        if (!av.same_shape(val(b))) throw ShapeError("min2 shape mismatch");
        Tensor y = av;
        const auto& bv = val(b).data;
        for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] = std::min(y.data[i], bv[i]);
        return add_node(std::move(y), needs_grad(a) || needs_grad(b), [a, b](Tape& t, int self) {
            const auto& dy = t.grad(self).data;
            const auto& avd = t.val(a).data;
            const auto& bvd = t.val(b).data;
            float* da = t.needs_grad(a) ? t.grad_ptr(a) : nullptr;
            float* db = t.needs_grad(b) ? t.grad_ptr(b) : nullptr;
            for (std::size_t i = 0; i < dy.size(); ++i) {
                if (avd[i] <= bvd[i]) {
                    if (da) da[i] += dy[i];
                } else if (db) {
                    db[i] += dy[i];
                }
            }
        });
    }

    // diagonal Gaussian log density, fused: a, mu are [B, D]; log_std is [D]
    // broadcast; output [B]. logp_b = sum_i(-0.5 z^2 - ls_i) - D/2 log(2 pi).
    int gauss_logp(int a, int mu, int log_std) {
        const Tensor& av = val(a);
        const Tensor& mv = val(mu);
        const Tensor& lv = val(log_std);
        if (!av.same_shape(mv)) throw ShapeError("gauss_logp a/mu mismatch");
        int B = av.shape[0];
        int D = av.shape[1];
        if (static_cast<int>(lv.numel()) != D) throw ShapeError("gauss_logp log_std dim mismatch");
        Tensor y({B});
        const float klog2pi = 1.8378770664093455f;  // log(2 pi)
        for (int b = 0; b < B; ++b) {
            float acc = -0.5f * klog2pi * D;
            for (int i = 0; i < D; ++i) {
                float ls = lv.data[static_cast<std::size_t>(i)];
                float sigma = std::exp(ls);
                float z = (av.data[static_cast<std::size_t>(b) * D + i] -
                           mv.data[static_cast<std::size_t>(b) * D + i]) / sigma;
                acc += -0.5f * z * z - ls;
            }
            y.data[static_cast<std::size_t>(b)] = acc;
        }
        bool ng = needs_grad(mu) || needs_grad(log_std);
        return add_node(std::move(y), ng, [a, mu, log_std, B, D](Tape& t, int self) {
            const auto& dy = t.grad(self).data;
            const auto& avd = t.val(a).data;
            const auto& mvd = t.val(mu).data;
            const auto& lvd = t.val(log_std).data;
            float* dmu = t.needs_grad(mu) ? t.grad_ptr(mu) : nullptr;
            float* dls = t.needs_grad(log_std) ? t.grad_ptr(log_std) : nullptr;
            for (int b = 0; b < B; ++b) {
                float g = dy[static_cast<std::size_t>(b)];
                for (int i = 0; i < D; ++i) {
                    float ls = lvd[static_cast<std::size_t>(i)];
                    float sigma = std::exp(ls);
                    float z = (avd[static_cast<std::size_t>(b) * D + i] -
                               mvd[static_cast<std::size_t>(b) * D + i]) / sigma;
                    if (dmu) dmu[static_cast<std::size_t>(b) * D + i] += g * z / sigma;
                    if (dls) dls[static_cast<std::size_t>(i)] += g * (z * z - 1.0f);
                }
            }
        });
    }

    // sum of all elements -> scalar
    int sum(int x) {
        float acc = 0.0f;
        for (float v : val(x).data) acc += v;
        Tensor y({1});
        y.data[0] = acc;
        return add_node(std::move(y), needs_grad(x), [x](Tape& t, int self) {
            if (!t.needs_grad(x)) return;
            float g = t.grad(self).data[0];
            float* dx = t.grad_ptr(x);
            for (std::size_t i = 0; i < t.val(x).numel(); ++i) dx[i] += g;
        });
    }

    std::size_t size() const { return nodes_.size(); }

private:
    int add_node(Tensor v, bool needs_grad, std::function<void(Tape&, int)> backprop) {
        if (consumed_) throw AbortUpdate("tape already consumed by backward");
        Node n;
        n.val = std::move(v);
        n.needs_grad = needs_grad;
        n.backprop = std::move(backprop);
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

}  // namespace anl::nn
