#pragma once

#include <numeric>
#include <vector>

#include "common.hpp"

namespace osr {

// Dense row-major n-d array. Float for training/inference, double for
// gradient checks — all ops are templated on the scalar.
template <class T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> v;

    TensorT() = default;
    explicit TensorT(std::vector<int> s) : shape(std::move(s)), v(count(shape), T(0)) {}
    TensorT(std::vector<int> s, std::vector<T> data) : shape(std::move(s)), v(std::move(data)) {
        require(v.size() == size_t(count(shape)), errc::invalid_argument,
                "tensor data does not match shape");
    }

    static int64_t count(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            require(d >= 1, errc::invalid_argument, "tensor dims must be >= 1");
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return int64_t(v.size()); }
    int dim(int i) const { return shape[size_t(i)]; }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    // [C,H,W] accessors (the dominant layout in this codebase)
    T& at(int c, int y, int x) { return v[size_t((c * shape[1] + y) * shape[2] + x)]; }
    T at(int c, int y, int x) const { return v[size_t((c * shape[1] + y) * shape[2] + x)]; }
    // [N,M] accessors
    T& at(int r, int c) { return v[size_t(r * shape[1] + c)]; }
    T at(int r, int c) const { return v[size_t(r * shape[1] + c)]; }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    template <class U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.v.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = U(v[i]);
        return out;
    }

    static TensorT randn(std::vector<int> s, Rng& rng, double std_dev = 1.0) {
        TensorT t(std::move(s));
        for (auto& x : t.v) x = T(rng.normal() * std_dev);
        return t;
    }

    static TensorT full(std::vector<int> s, T value) {
        TensorT t(std::move(s));
        for (auto& x : t.v) x = value;
        return t;
    }
};

using Tensor = TensorT<float>;

template <class T>
inline std::string shape_str(const TensorT<T>& t) {
    std::string s = "[";
    for (size_t i = 0; i < t.shape.size(); ++i)
        s += (i ? "," : "") + std::to_string(t.shape[i]);
    return s + "]";
}

}  // namespace osr
