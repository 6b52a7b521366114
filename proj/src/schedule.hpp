#pragma once

#include <vector>

#include "tensor.hpp"

namespace osr {

// Per-timestep DDPM tables; kept in double so the cumulative-product and
// coefficient identities hold to 1e-12.
struct DiffusionSchedule {
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha;      // 1 - beta_t
    std::vector<double> alpha_bar;  // prod alpha[0..t]
};

enum class SigmaMode { posterior, beta };

// linear beta interpolation over T steps
DiffusionSchedule make_schedule(int T, double beta_start, double beta_end);

// evenly spaced descending timesteps of length T_infer, always ending at 0
std::vector<int> subsample_steps(int T_train, int T_infer);

// Schedule over the subsampled ladder: alpha_bar' drawn at the selected
// timesteps so the single-step posterior formula composes into a consistent
// strided sampler. steps must be the (descending) subsample_steps output.
DiffusionSchedule retime_schedule(const DiffusionSchedule& sched, const std::vector<int>& steps);

// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps
template <class T>
TensorT<T> add_noise(const TensorT<T>& z0, int t, const TensorT<T>& eps,
                     const DiffusionSchedule& sched) {
    require(t >= 0 && t < sched.T, errc::invalid_argument, "add_noise: t out of range");
    require(z0.same_shape(eps), errc::invalid_argument, "add_noise: eps shape mismatch");
    const double ab = sched.alpha_bar[size_t(t)];
    const T c0 = T(std::sqrt(ab));
    const T c1 = T(std::sqrt(1.0 - ab));
    TensorT<T> zt = z0;
    for (size_t i = 0; i < zt.v.size(); ++i) zt.v[i] = c0 * z0.v[i] + c1 * eps.v[i];
    return zt;
}

// one DDPM ancestral step:
//   mean = 1/sqrt(alpha_t) (z_t - beta_t / sqrt(1-abar_t) eps_pred)
//   sigma_t^2 = beta_t (1 - abar_{t-1}) / (1 - abar_t)   (posterior mode)
template <class T>
TensorT<T> ddpm_step(const TensorT<T>& z_t, const TensorT<T>& eps_pred, int t,
                     const TensorT<T>& noise, const DiffusionSchedule& sched,
                     SigmaMode sigma_mode = SigmaMode::posterior) {
    require(t >= 0 && t < sched.T, errc::invalid_argument, "ddpm_step: t out of range");
    require(z_t.same_shape(eps_pred) && z_t.same_shape(noise), errc::invalid_argument,
            "ddpm_step: shape mismatch");
    if (t == 0)
        for (const auto& v : noise.v)
            require(v == T(0), errc::invalid_argument, "ddpm_step: noise must be zero at t=0");

    const double beta = sched.beta[size_t(t)];
    const double ab = sched.alpha_bar[size_t(t)];
    const double ab_prev = t > 0 ? sched.alpha_bar[size_t(t - 1)] : 1.0;
    const T inv_sqrt_alpha = T(1.0 / std::sqrt(sched.alpha[size_t(t)]));
    const T eps_coef = T(beta / std::sqrt(1.0 - ab));
    double var = sigma_mode == SigmaMode::posterior ? beta * (1.0 - ab_prev) / (1.0 - ab) : beta;
    const T sigma = t > 0 ? T(std::sqrt(var)) : T(0);

    TensorT<T> out = z_t;
    for (size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = inv_sqrt_alpha * (z_t.v[i] - eps_coef * eps_pred.v[i]) + sigma * noise.v[i];
    return out;
}

}  // namespace osr
