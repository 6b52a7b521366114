#include "schedule.hpp"

#include <algorithm>
#include <cmath>

namespace osr {

DiffusionSchedule make_schedule(int T, double beta_start, double beta_end) {
    require(T >= 1, errc::invalid_argument, "make_schedule: T must be >= 1");
    require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0, errc::invalid_argument,
            "make_schedule: need 0 < beta_start <= beta_end < 1");

    DiffusionSchedule s;
    s.T = T;
    s.beta.resize(size_t(T));
    s.alpha.resize(size_t(T));
    s.alpha_bar.resize(size_t(T));
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        double b = T == 1 ? beta_start
                          : beta_start + (beta_end - beta_start) * double(t) / double(T - 1);
        s.beta[size_t(t)] = b;
        s.alpha[size_t(t)] = 1.0 - b;
        prod *= 1.0 - b;
        s.alpha_bar[size_t(t)] = prod;
    }
    return s;
}

std::vector<int> subsample_steps(int T_train, int T_infer) {
    require(T_train >= 1 && T_infer >= 1 && T_infer <= T_train, errc::invalid_argument,
            "subsample_steps: need 1 <= T_infer <= T_train");
    std::vector<int> steps(static_cast<size_t>(T_infer));
    if (T_infer == 1) {
        steps[0] = 0;
        return steps;
    }
    // evenly spaced over [0, T_train-1], descending, endpoints included
    for (int j = 0; j < T_infer; ++j) {
        double pos = double(T_train - 1) * double(T_infer - 1 - j) / double(T_infer - 1);
        steps[size_t(j)] = int(std::lround(pos));
    }
    return steps;
}

DiffusionSchedule retime_schedule(const DiffusionSchedule& sched, const std::vector<int>& steps) {
    require(!steps.empty() && steps.back() == 0, errc::invalid_argument,
            "retime_schedule: steps must descend to 0");
    DiffusionSchedule r;
    r.T = int(steps.size());
    r.beta.resize(steps.size());
    r.alpha.resize(steps.size());
    r.alpha_bar.resize(steps.size());
    // index j ascends in noise level: j-th entry is the (j-th smallest) timestep
    for (size_t j = 0; j < steps.size(); ++j) {
        int t = steps[steps.size() - 1 - j];
        require(t >= 0 && t < sched.T, errc::invalid_argument, "retime_schedule: step out of range");
        r.alpha_bar[j] = sched.alpha_bar[size_t(t)];
        double prev = j == 0 ? 1.0 : r.alpha_bar[j - 1];
        r.alpha[j] = r.alpha_bar[j] / prev;
        r.beta[j] = 1.0 - r.alpha[j];
    }
    return r;
}

}  // namespace osr
