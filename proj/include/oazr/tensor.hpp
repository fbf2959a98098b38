#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace oazr {

// Dense row-major tensor of doubles. Rank is free but almost everything in
// the pipeline is 2-D (vectors are 1xC).
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> shp, std::vector<double> d) : shape(std::move(shp)), data(std::move(d)) {
        if (static_cast<size_t>(numel_of(shape)) != data.size())
            throw std::invalid_argument("tensor: data length does not match shape");
    }

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d < 0) throw std::invalid_argument("tensor: negative dimension");
            n *= d;
        }
        return n;
    }

    static Tensor zeros(std::vector<int> shp) {
        int64_t n = numel_of(shp);
        return Tensor(std::move(shp), std::vector<double>(static_cast<size_t>(n), 0.0));
    }
    static Tensor full(std::vector<int> shp, double v) {
        int64_t n = numel_of(shp);
        return Tensor(std::move(shp), std::vector<double>(static_cast<size_t>(n), v));
    }
    static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }
    static Tensor row(std::vector<double> v) {
        int n = static_cast<int>(v.size());
        return Tensor({1, n}, std::move(v));
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }

    // 2-D accessors; a rank-1 tensor counts as one row.
    int rows() const {
        if (rank() == 1) return 1;
        if (rank() == 2) return shape[0];
        throw std::invalid_argument("tensor: rows() needs rank <= 2");
    }
    int cols() const {
        if (rank() == 1) return shape[0];
        if (rank() == 2) return shape[1];
        throw std::invalid_argument("tensor: cols() needs rank <= 2");
    }
    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

    double item() const {
        if (numel() != 1) throw std::invalid_argument("tensor: item() on non-scalar");
        return data[0];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
};

inline double l2_norm(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data) s += v * v;
    return std::sqrt(s);
}

inline double dot_value(const Tensor& a, const Tensor& b) {
    if (a.numel() != b.numel()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) s += a.data[i] * b.data[i];
    return s;
}

}  // namespace oazr
