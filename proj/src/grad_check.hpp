#pragma once

#include <functional>

#include "tensor.hpp"

// Finite-difference gradient checker. Ops are wrapped as OpNode closures so a
// single checker covers raw kernels, autograd compositions, and whole models.
// Runs in double: central differences with h = 1e-5 leave ~1e-10 absolute
// error there, far under the 1e-4 relative tolerance.

namespace osr {

struct OpNode {
    // forward: inputs -> output tensor
    std::function<TensorT<double>(const std::vector<TensorT<double>>&)> forward;
    // backward: (inputs, upstream grad of output shape) -> one gradient per input
    std::function<std::vector<TensorT<double>>(const std::vector<TensorT<double>>&,
                                               const TensorT<double>&)>
        backward;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    double tol = 0.0;
    int checked = 0;
    bool pass() const { return max_rel_err < tol; }
};

// Central differences, h = 1e-5 per element, on a seeded random subset of at
// least 32 elements per input (all of them for small tensors). Relative error
// uses a small denominator floor so near-zero gradients compare absolutely.
inline GradCheckReport grad_check(const OpNode& node, std::vector<TensorT<double>> inputs,
                                  double tol, uint64_t seed = 7) {
    const double h = 1e-5;
    GradCheckReport report;
    report.tol = tol;

    TensorT<double> out = node.forward(inputs);
    // random but fixed upstream gradient exercises all output elements
    Rng gen(seed);
    TensorT<double> upstream(out.shape);
    for (auto& v : upstream.v) v = gen.normal();

    std::vector<TensorT<double>> analytic = node.backward(inputs, upstream);
    require(analytic.size() == inputs.size(), errc::internal,
            "grad_check: backward returned wrong arity");

    for (size_t which = 0; which < inputs.size(); ++which) {
        const int64_t n = inputs[which].numel();
        const int64_t subset = std::min<int64_t>(n, std::max<int64_t>(32, 0));
        Rng pick = gen.split(which + 1);
        for (int64_t s = 0; s < subset; ++s) {
            int64_t i = subset == n ? s : int64_t(pick.uniform_int(0, n - 1));
            double saved = inputs[which].v[size_t(i)];

            inputs[which].v[size_t(i)] = saved + h;
            TensorT<double> up = node.forward(inputs);
            inputs[which].v[size_t(i)] = saved - h;
            TensorT<double> down = node.forward(inputs);
            inputs[which].v[size_t(i)] = saved;

            double numeric = 0.0;
            for (size_t j = 0; j < up.v.size(); ++j)
                numeric += upstream.v[j] * (up.v[j] - down.v[j]) / (2.0 * h);

            double a = analytic[which].v[size_t(i)];
            double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3});
            report.max_rel_err = std::max(report.max_rel_err, rel);
            ++report.checked;
        }
    }
    return report;
}

}  // namespace osr
