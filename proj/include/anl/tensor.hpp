#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "anl/errors.hpp"

namespace anl {

// Dense row-major float32 array; the numeric currency of the model stack.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> shape_) : shape(std::move(shape_)) {
        data.assign(numel_of(shape), 0.0f);
    }
    Tensor(std::vector<int> shape_, std::vector<float> data_)
        : shape(std::move(shape_)), data(std::move(data_)) {
        if (data.size() != numel_of(shape)) throw ShapeError("tensor data/shape mismatch");
    }

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d < 0) throw ShapeError("negative dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return data.size(); }
    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (float v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static std::string shape_str(const std::vector<int>& s) {
        std::string r = "[";
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) r += ",";
            r += std::to_string(s[i]);
        }
        return r + "]";
    }
};

}  // namespace anl
