#include "training.hpp"

#include <cmath>

#include "autoencoder.hpp"
#include "pipeline.hpp"

namespace osr {

namespace {

constexpr double kPi = 3.14159265358979323846;

// cosine decay over a fixed step budget: the late steps polish instead of
// bouncing on gradient noise
double cosine_lr(double base, int step, int total) {
    return base * 0.5 * (1.0 + std::cos(kPi * double(step) / double(total)));
}

}  // namespace

/*============================================================= optimizer ====*/

void AdamW::step(ParamStore& ps, double grad_clip) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, double(t));
    const double bc2 = 1.0 - std::pow(beta2, double(t));

    double clip_scale = 1.0;
    if (grad_clip > 0.0) {
        double sq = 0.0;
        for (const auto& [name, e] : ps.entries)
            if (e.trainable)
                for (float g : e.grad.v) sq += double(g) * double(g);
        double norm = std::sqrt(sq);
        if (norm > grad_clip) clip_scale = grad_clip / norm;
    }

    for (auto& [name, e] : ps.entries) {
        if (!e.trainable) continue;
        auto& [m, v] = moments[name];
        if (m.numel() == 0) {
            m = Tensor(e.value.shape);
            v = Tensor(e.value.shape);
        }
        for (size_t i = 0; i < e.value.v.size(); ++i) {
            double g = double(e.grad.v[i]) * clip_scale;
            double mi = beta1 * double(m.v[i]) + (1.0 - beta1) * g;
            double vi = beta2 * double(v.v[i]) + (1.0 - beta2) * g * g;
            m.v[i] = float(mi);
            v.v[i] = float(vi);
            double update = (mi / bc1) / (std::sqrt(vi / bc2) + eps);
            e.value.v[i] = float(double(e.value.v[i]) -
                                 lr * (update + weight_decay * double(e.value.v[i])));
        }
    }
}

/*================================================================ losses ====*/

double diffusion_loss(const Tensor& eps_pred, const Tensor& eps) {
    require(eps_pred.same_shape(eps), errc::invalid_argument,
            "diffusion_loss: shape mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < eps.v.size(); ++i) {
        double d = double(eps_pred.v[i]) - double(eps.v[i]);
        sum += d * d;
    }
    return sum / double(eps.v.size());
}

double total_loss(double l_diff, double l_lqa, double alpha) {
    require(l_diff >= 0.0 && l_lqa >= 0.0, errc::invalid_argument,
            "total_loss: negative components");
    return l_diff + alpha * l_lqa;
}

/*========================================================= training loop ====*/

std::vector<LabeledImage> make_batch(const std::vector<LabeledImage>& corpus, Rng& rng,
                                     int count) {
    require(!corpus.empty(), errc::invalid_argument, "empty corpus");
    std::vector<LabeledImage> batch;
    for (int i = 0; i < count; ++i)
        batch.push_back(corpus[size_t(rng.uniform_int(0, int64_t(corpus.size()) - 1))]);
    return batch;
}

LossReport train_step(Context& ctx, AdamW& opt, const std::vector<LabeledImage>& batch,
                      int step_index) {
    require(!batch.empty(), errc::invalid_argument, "train_step: empty batch");
    const TrainConfig& tc = ctx.tcfg;
    const ModelConfig& mc = ctx.mcfg;

    Rng rng = Rng(tc.seed).split(uint64_t(step_index) + 0x5354455055ULL);

    // one PairSpec per batch; HR crop bounded by the smallest batch image
    int max_side = batch[0].image.h;
    for (const auto& li : batch) max_side = std::min({max_side, li.image.h, li.image.w});
    int hr_bounds[2] = {tc.hr_lo, std::min(tc.hr_hi, max_side)};
    double scale_bounds[2] = {tc.scale_lo, tc.scale_hi};
    PairSpec spec = sample_pair_spec(rng, hr_bounds, scale_bounds);

    DegradationConfig dcfg;
    dcfg.mode = tc.degrade_mode;

    ctx.ps.zero_grads();
    double sum_diff = 0.0, sum_lqa = 0.0;
    for (size_t i = 0; i < batch.size(); ++i) {
        Rng srng = rng.split(i + 1);
        const Image& full = batch[i].image;
        int y0 = int(srng.uniform_int(0, full.h - spec.hr_size));
        int x0 = int(srng.uniform_int(0, full.w - spec.hr_size));
        Image hr = crop(full, y0, x0, spec.hr_size, spec.hr_size);
        Image lr = degrade(hr, dcfg, spec, srng.next_u64());
        Image cond = preupsample(ctx.ps, mc, lr, spec.hr_size, spec.hr_size);
        Image hr_s = to_signed(hr);

        Tensor z0 = encode_image(ctx.ps, mc, image_to_tensor(hr_s));
        int t = int(srng.uniform_int(0, mc.T - 1));
        Tensor eps = Tensor::randn(z0.shape, srng);
        Tensor z_t = add_noise(z0, t, eps, ctx.sched);

        int cls = batch[i].class_id;
        if (tc.uncond_dropout > 0.0 && srng.uniform() < tc.uncond_dropout)
            cls = mc.null_class();

        Net<float> net(ctx.ps, mc, /*train=*/true);
        FidelityFeatures<float> fid =
            fidelity_image_encode(net, constant<float>(image_to_tensor(cond)));
        DenoiseInputs<float> din;
        din.t = t;
        din.s = spec.scale;
        din.class_id = cls;
        din.hint = fid.hint;
        Var<float> eps_pred = denoise(net, constant<float>(z_t), din);
        Var<float> ld = v_mse(eps_pred, eps);
        Var<float> ll = lqa_loss_node(net, fid.pyramid, hr_s);
        Var<float> tl = v_add(ld, v_scale(ll, float(tc.alpha_lqa)));
        backward(v_scale(tl, 1.0f / float(batch.size())));

        sum_diff += double(ld->val.v[0]);
        sum_lqa += double(ll->val.v[0]);
    }

    LossReport rep;
    rep.step = step_index;
    rep.l_diff = sum_diff / double(batch.size());
    rep.l_lqa = sum_lqa / double(batch.size());
    rep.l_total = total_loss(rep.l_diff, rep.l_lqa, tc.alpha_lqa);
    if (!std::isfinite(rep.l_total))
        fail(errc::diverged, "training diverged at step " + std::to_string(step_index));

    opt.step(ctx.ps, tc.grad_clip);
    ctx.ps.zero_grads();
    return rep;
}

std::vector<LossReport> run_training(Context& ctx, const std::vector<LabeledImage>& corpus,
                                     int steps, const StepHook& hook) {
    require(!corpus.empty(), errc::invalid_argument, "empty corpus");
    AdamW opt;
    opt.lr = ctx.tcfg.learning_rate;
    std::vector<LossReport> reports;
    for (int step = 0; step < steps; ++step) {
        Rng brng = Rng(ctx.tcfg.seed).split(uint64_t(step) + 0x4241544348ULL);
        std::vector<LabeledImage> batch = make_batch(corpus, brng, ctx.tcfg.batch_size);
        LossReport rep = train_step(ctx, opt, batch, step);
        if (hook) hook(rep);
        reports.push_back(rep);
    }
    return reports;
}

/*========================================================== pre-training ====*/

namespace {

// random square crop, multiple-of-16 friendly sizes
Image random_crop(const Image& img, int size, Rng& rng) {
    int y0 = int(rng.uniform_int(0, img.h - size));
    int x0 = int(rng.uniform_int(0, img.w - size));
    return crop(img, y0, x0, size, size);
}

}  // namespace

std::vector<double> pretrain_autoencoder(Context& ctx, const std::vector<LabeledImage>& corpus,
                                         int steps, uint64_t seed) {
    require(!corpus.empty(), errc::invalid_argument, "empty corpus");
    const int kCrop = 32, kBatch = 4;

    // only the codec trains here
    ctx.ps.set_trainable("", false);
    ctx.ps.set_trainable("ae.", true);
    AdamW opt;
    const double kBaseLr = 1e-3;

    std::vector<double> curve;
    Rng root(seed);
    for (int step = 0; step < steps; ++step) {
        opt.lr = cosine_lr(kBaseLr, step, steps);
        Rng rng = root.split(uint64_t(step) + 1);
        ctx.ps.zero_grads();
        double loss_sum = 0.0;
        for (int b = 0; b < kBatch; ++b) {
            Rng srng = rng.split(b + 1);
            const Image& src =
                corpus[size_t(srng.uniform_int(0, int64_t(corpus.size()) - 1))].image;
            Image patch = to_signed(random_crop(src, kCrop, srng));
            Tensor x = image_to_tensor(patch);

            Net<float> net(ctx.ps, ctx.mcfg, /*train=*/true);
            Var<float> rec = ae_decode_raw(net, ae_encode(net, constant<float>(x)));
            Var<float> loss = v_mse(rec, x);
            backward(v_scale(loss, 1.0f / float(kBatch)));
            loss_sum += double(loss->val.v[0]);
        }
        double mean_loss = loss_sum / kBatch;
        if (!std::isfinite(mean_loss))
            fail(errc::diverged, "autoencoder pre-training diverged at step " +
                                     std::to_string(step));
        opt.step(ctx.ps);
        curve.push_back(mean_loss);
    }
    ctx.ps.zero_grads();

    // freeze the codec; the joint run trains everything else
    ctx.ps.set_trainable("", true);
    ctx.ps.set_trainable("ae.", false);
    return curve;
}

std::vector<double> pretrain_upsampler(Context& ctx, const std::vector<LabeledImage>& corpus,
                                       int steps, uint64_t seed) {
    require(!corpus.empty(), errc::invalid_argument, "empty corpus");
    const int kHr = 64, kBatch = 4;  // x4 pairs: LR 16 -> HR 64

    bool ae_frozen = !ctx.ps.at("ae.enc.in.w").trainable;
    ctx.ps.set_trainable("", false);
    ctx.ps.set_trainable("up.", true);
    AdamW opt;
    const double kBaseLr = 1e-3;

    std::vector<double> curve;
    Rng root(seed);
    for (int step = 0; step < steps; ++step) {
        opt.lr = cosine_lr(kBaseLr, step, steps);
        Rng rng = root.split(uint64_t(step) + 1);
        ctx.ps.zero_grads();
        double loss_sum = 0.0;
        for (int b = 0; b < kBatch; ++b) {
            Rng srng = rng.split(b + 1);
            const Image& src =
                corpus[size_t(srng.uniform_int(0, int64_t(corpus.size()) - 1))].image;
            Image hr = to_signed(random_crop(src, kHr, srng));
            Image lr = bicubic_resample(hr, kHr / 4, kHr / 4);
            Image bic4 = bicubic_resample(lr, kHr, kHr);

            Net<float> net(ctx.ps, ctx.mcfg, /*train=*/true);
            Var<float> pred = mup_forward(net, constant<float>(image_to_tensor(lr)),
                                          image_to_tensor(bic4));
            Var<float> loss = v_l1(pred, image_to_tensor(hr));
            backward(v_scale(loss, 1.0f / float(kBatch)));
            loss_sum += double(loss->val.v[0]);
        }
        double mean_loss = loss_sum / kBatch;
        if (!std::isfinite(mean_loss))
            fail(errc::diverged,
                 "upsampler pre-training diverged at step " + std::to_string(step));
        opt.step(ctx.ps);
        curve.push_back(mean_loss);
    }
    ctx.ps.zero_grads();

    ctx.ps.set_trainable("", true);
    ctx.ps.set_trainable("ae.", ae_frozen ? false : true);
    ctx.ps.set_trainable("up.", false);
    return curve;
}

}  // namespace osr
