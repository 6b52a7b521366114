#pragma once

#include <functional>

#include "checkpoint.hpp"
#include "config.hpp"
#include "denoiser.hpp"
#include "schedule.hpp"
#include "synth.hpp"
#include "upsampler.hpp"

namespace osr {

struct LossReport {
    double l_diff = 0.0;
    double l_lqa = 0.0;
    double l_total = 0.0;  // l_diff + alpha_lqa * l_lqa
    int step = 0;
};

/*============================================================= optimizer ====*/

// decoupled-weight-decay adaptive moments; bias-corrected
struct AdamW {
    double lr = 5e-5;
    double beta1 = 0.9, beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    int64_t t = 0;
    std::map<std::string, std::pair<Tensor, Tensor>> moments;  // first/second

    // updates trainable entries only, in name order; grad_clip 0 = off
    void step(ParamStore& ps, double grad_clip = 0.0);
};

/*================================================================ losses ====*/

// mean squared error over all elements (reported scalar)
double diffusion_loss(const Tensor& eps_pred, const Tensor& eps);

double total_loss(double l_diff, double l_lqa, double alpha);

// sum over the three pyramid levels of mean-abs(toRGB(F_e) - bicubic(HR))
template <class T>
Var<T> lqa_loss_node(Net<T>& net, const std::vector<Var<T>>& pyramid, const Image& hr_signed) {
    require(pyramid.size() == 3, errc::invalid_argument, "lqa: expected a 3-level pyramid");
    require(hr_signed.range == Range::signed_ && hr_signed.c == 3, errc::invalid_argument,
            "lqa: expects a signed-range RGB target");
    Var<T> total;
    for (int n = 1; n <= 3; ++n) {
        const auto& f = pyramid[size_t(n - 1)]->val;
        require(f.dim(1) == hr_signed.h >> n && f.dim(2) == hr_signed.w >> n,
                errc::invalid_argument,
                "lqa: pyramid level " + std::to_string(n) + " resolution mismatch");
        Image target = bicubic_resample(hr_signed, hr_signed.h >> n, hr_signed.w >> n);
        Var<T> rgb = to_rgb(net, n, pyramid[size_t(n - 1)]);
        Var<T> term = v_l1(rgb, image_to_tensor(target).template cast<T>());
        total = total ? v_add(total, term) : term;
    }
    return total;
}

/*========================================================= training state ====*/

struct Context {
    ModelConfig mcfg;
    TrainConfig tcfg;
    ParamStore ps;
    DiffusionSchedule sched;

    static Context fresh(const ModelConfig& m, const TrainConfig& t, uint64_t init_seed);
    static Context load(const std::string& dir);
    void save(const std::string& dir) const;
};

/*========================================================= training loop ====*/

// deterministic batch pick for one step (whole images + labels)
std::vector<LabeledImage> make_batch(const std::vector<LabeledImage>& corpus, Rng& rng,
                                     int count);

// one joint diffusion + LQA step over a single-PairSpec batch; AE and M_up
// stay frozen; throws `diverged` carrying the step index on NaN loss
LossReport train_step(Context& ctx, AdamW& opt, const std::vector<LabeledImage>& batch,
                      int step_index);

using StepHook = std::function<void(const LossReport&)>;

// full run: seeded batch selection + train_step per step
std::vector<LossReport> run_training(Context& ctx, const std::vector<LabeledImage>& corpus,
                                     int steps, const StepHook& hook = nullptr);

/*========================================================== pre-training ====*/

// L2 reconstruction pre-training of the ae.* weights; freezes them afterwards;
// returns the per-step loss curve
std::vector<double> pretrain_autoencoder(Context& ctx, const std::vector<LabeledImage>& corpus,
                                         int steps, uint64_t seed);

// mean-abs x4 pre-training of the up.* weights on bicubic-degraded pairs;
// freezes them afterwards
std::vector<double> pretrain_upsampler(Context& ctx, const std::vector<LabeledImage>& corpus,
                                       int steps, uint64_t seed);

}  // namespace osr
