#pragma once

#include <cmath>
#include <cstddef>

namespace anl::nn {

// Plain sequential-accumulation kernels, templated on the scalar type so the
// training path (float) and the double-precision shadow used by the
// finite-difference checks share one definition. Accumulation order is fixed
// and batch-size independent, which keeps single-sample and batched passes
// bit-identical.

template <typename T>
void dense_forward(const T* x, const T* w, const T* bias, T* y, int B, int in, int out) {
    for (int b = 0; b < B; ++b) {
        const T* xb = x + static_cast<std::size_t>(b) * in;
        T* yb = y + static_cast<std::size_t>(b) * out;
        for (int o = 0; o < out; ++o) {
            const T* wo = w + static_cast<std::size_t>(o) * in;
            T acc = bias ? bias[o] : T(0);
            for (int i = 0; i < in; ++i) acc += xb[i] * wo[i];
            yb[o] = acc;
        }
    }
}

template <typename T>
void dense_backward(const T* x, const T* w, const T* dy, T* dx, T* dw, T* db, int B, int in, int out) {
    for (int b = 0; b < B; ++b) {
        const T* xb = x + static_cast<std::size_t>(b) * in;
        const T* dyb = dy + static_cast<std::size_t>(b) * out;
        for (int o = 0; o < out; ++o) {
            T g = dyb[o];
            if (db) db[o] += g;
            const T* wo = w + static_cast<std::size_t>(o) * in;
            T* dwo = dw ? dw + static_cast<std::size_t>(o) * in : nullptr;
            T* dxb = dx ? dx + static_cast<std::size_t>(b) * in : nullptr;
            for (int i = 0; i < in; ++i) {
                if (dwo) dwo[i] += g * xb[i];
                if (dxb) dxb[i] += g * wo[i];
            }
        }
    }
}

inline int conv_out_len(int len, int kernel, int stride) { return (len - kernel) / stride + 1; }

// x: [B, Cin, L], w: [Cout, Cin, K], y: [B, Cout, Lo]
template <typename T>
void conv1d_forward(const T* x, const T* w, const T* bias, T* y, int B, int cin, int len, int cout,
                    int k, int stride) {
    int lo = conv_out_len(len, k, stride);
    for (int b = 0; b < B; ++b) {
        const T* xb = x + static_cast<std::size_t>(b) * cin * len;
        T* yb = y + static_cast<std::size_t>(b) * cout * lo;
        for (int co = 0; co < cout; ++co) {
            const T* wc = w + static_cast<std::size_t>(co) * cin * k;
            for (int p = 0; p < lo; ++p) {
                T acc = bias ? bias[co] : T(0);
                int x0 = p * stride;
                for (int ci = 0; ci < cin; ++ci) {
                    const T* xc = xb + static_cast<std::size_t>(ci) * len + x0;
                    const T* wk = wc + static_cast<std::size_t>(ci) * k;
                    for (int j = 0; j < k; ++j) acc += xc[j] * wk[j];
                }
                yb[static_cast<std::size_t>(co) * lo + p] = acc;
            }
        }
    }
}

template <typename T>
void conv1d_backward(const T* x, const T* w, const T* dy, T* dx, T* dw, T* db, int B, int cin,
                     int len, int cout, int k, int stride) {
    int lo = conv_out_len(len, k, stride);
    for (int b = 0; b < B; ++b) {
        const T* xb = x + static_cast<std::size_t>(b) * cin * len;
        const T* dyb = dy + static_cast<std::size_t>(b) * cout * lo;
        T* dxb = dx ? dx + static_cast<std::size_t>(b) * cin * len : nullptr;
        for (int co = 0; co < cout; ++co) {
            const T* wc = w + static_cast<std::size_t>(co) * cin * k;
            T* dwc = dw ? dw + static_cast<std::size_t>(co) * cin * k : nullptr;
            for (int p = 0; p < lo; ++p) {
                T g = dyb[static_cast<std::size_t>(co) * lo + p];
                if (db) db[co] += g;
                int x0 = p * stride;
                for (int ci = 0; ci < cin; ++ci) {
                    const T* xc = xb + static_cast<std::size_t>(ci) * len + x0;
                    T* dxc = dxb ? dxb + static_cast<std::size_t>(ci) * len + x0 : nullptr;
                    T* dwk = dwc ? dwc + static_cast<std::size_t>(ci) * k : nullptr;
                    const T* wk = wc + static_cast<std::size_t>(ci) * k;
                    for (int j = 0; j < k; ++j) {
                        if (dwk) dwk[j] += g * xc[j];
                        if (dxc) dxc[j] += g * wk[j];
                    }
                }
            }
        }
    }
}

// x: [B, Cin, H, W], w: [Cout, Cin, KH, KW], y: [B, Cout, Ho, Wo]
template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, int B, int cin, int h, int wdt,
                    int cout, int kh, int kw, int stride) {
    int ho = conv_out_len(h, kh, stride);
    int wo = conv_out_len(wdt, kw, stride);
    for (int b = 0; b < B; ++b) {
        const T* xb = x + static_cast<std::size_t>(b) * cin * h * wdt;
        T* yb = y + static_cast<std::size_t>(b) * cout * ho * wo;
        for (int co = 0; co < cout; ++co) {
            const T* wc = w + static_cast<std::size_t>(co) * cin * kh * kw;
            for (int py = 0; py < ho; ++py) {
                for (int px = 0; px < wo; ++px) {
                    T acc = bias ? bias[co] : T(0);
                    int y0 = py * stride;
                    int x0 = px * stride;
                    for (int ci = 0; ci < cin; ++ci) {
                        const T* xc = xb + (static_cast<std::size_t>(ci) * h + y0) * wdt + x0;
                        const T* wk = wc + static_cast<std::size_t>(ci) * kh * kw;
                        for (int j = 0; j < kh; ++j) {
                            const T* xr = xc + static_cast<std::size_t>(j) * wdt;
                            const T* wr = wk + static_cast<std::size_t>(j) * kw;
                            for (int i = 0; i < kw; ++i) acc += xr[i] * wr[i];
                        }
                    }
                    yb[(static_cast<std::size_t>(co) * ho + py) * wo + px] = acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward(const T* x, const T* w, const T* dy, T* dx, T* dw, T* db, int B, int cin,
                     int h, int wdt, int cout, int kh, int kw, int stride) {
    int ho = conv_out_len(h, kh, stride);
    int wo = conv_out_len(wdt, kw, stride);
    for (int b = 0; b < B; ++b) {
        const T* xb = x + static_cast<std::size_t>(b) * cin * h * wdt;
        const T* dyb = dy + static_cast<std::size_t>(b) * cout * ho * wo;
        T* dxb = dx ? dx + static_cast<std::size_t>(b) * cin * h * wdt : nullptr;
        for (int co = 0; co < cout; ++co) {
            const T* wc = w + static_cast<std::size_t>(co) * cin * kh * kw;
            T* dwc = dw ? dw + static_cast<std::size_t>(co) * cin * kh * kw : nullptr;
            for (int py = 0; py < ho; ++py) {
                for (int px = 0; px < wo; ++px) {
                    T g = dyb[(static_cast<std::size_t>(co) * ho + py) * wo + px];
                    if (db) db[co] += g;
                    int y0 = py * stride;
                    int x0 = px * stride;
                    for (int ci = 0; ci < cin; ++ci) {
                        const T* xc = xb + (static_cast<std::size_t>(ci) * h + y0) * wdt + x0;
                        T* dxc = dxb ? dxb + (static_cast<std::size_t>(ci) * h + y0) * wdt + x0 : nullptr;
                        const T* wk = wc + static_cast<std::size_t>(ci) * kh * kw;
                        T* dwk = dwc ? dwc + static_cast<std::size_t>(ci) * kh * kw : nullptr;
                        for (int j = 0; j < kh; ++j) {
                            const T* xr = xc + static_cast<std::size_t>(j) * wdt;
                            const T* wr = wk + static_cast<std::size_t>(j) * kw;
                            T* dxr = dxc ? dxc + static_cast<std::size_t>(j) * wdt : nullptr;
                            T* dwr = dwk ? dwk + static_cast<std::size_t>(j) * kw : nullptr;
                            for (int i = 0; i < kw; ++i) {
                                if (dwr) dwr[i] += g * xr[i];
                                if (dxr) dxr[i] += g * wr[i];
                            }
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
T relu(T v) {
    return v > T(0) ? v : T(0);
}

template <typename T>
T softplus(T v) {
    // numerically stable log(1 + e^v)
    if (v > T(20)) return v;
    if (v < T(-20)) return std::exp(v);
    return std::log(T(1) + std::exp(v));
}

template <typename T>
T sigmoid(T v) {
    return T(1) / (T(1) + std::exp(-v));
}

}  // namespace anl::nn
