#include "pipeline.hpp"

#include <cmath>

#include "autoencoder.hpp"

namespace osr {

Image preupsample(ParamStore& ps, const ModelConfig& cfg, const Image& lr, int out_h,
                  int out_w) {
    require(out_h >= lr.h && out_w >= lr.w, errc::invalid_argument,
            "preupsample: downscaling request");
    Image lr_s = lr.range == Range::signed_ ? lr : to_signed(lr);
    if (!cfg.use_mup || out_h < 4 * lr.h || out_w < 4 * lr.w)
        return bicubic_resample(lr_s, out_h, out_w);
    Image up4 = mup_apply(ps, cfg, lr_s);
    if (out_h == up4.h && out_w == up4.w) return up4;
    return bicubic_resample(up4, out_h, out_w);
}

double request_scale(const SampleRequest& req) {
    if (req.out_h > 0 && req.out_w > 0) {
        double sh = compute_scale(req.lr.h, req.out_h);
        double sw = compute_scale(req.lr.w, req.out_w);
        return 0.5 * (sh + sw);  // equal for the square pairs in use
    }
    require(req.scale >= 1.0, errc::invalid_argument, "sample: scale must be >= 1");
    return req.scale;
}

Image super_resolve(Context& ctx, const SampleRequest& req) {
    require(!ctx.ps.entries.empty(), errc::invalid_state, "super_resolve: no weights loaded");
    require(req.lr.c == 3, errc::invalid_argument, "super_resolve: expects an RGB input");
    require(req.steps >= 1, errc::invalid_argument, "super_resolve: steps must be >= 1");

    // resolve target size and conditioning scale
    int out_h = req.out_h, out_w = req.out_w;
    double s;
    if (out_h > 0 && out_w > 0) {
        require(out_h >= req.lr.h && out_w >= req.lr.w, errc::invalid_argument,
                "super_resolve: target below input size");
        s = request_scale(req);
    } else {
        s = request_scale(req);
        out_h = int(std::floor(req.lr.h * s + 0.5));
        out_w = int(std::floor(req.lr.w * s + 0.5));
    }
    require(out_h <= kMaxOutputSize && out_w <= kMaxOutputSize, errc::invalid_argument,
            "super_resolve: target exceeds the configured maximum size");

    const ModelConfig& mc = ctx.mcfg;
    const int mult = mc.size_multiple();
    const int pad_h = (out_h + mult - 1) / mult * mult;
    const int pad_w = (out_w + mult - 1) / mult * mult;

    // condition image on the padded HR grid
    Image cond = preupsample(ctx.ps, mc, req.lr, out_h, out_w);
    cond = reflect_pad(cond, pad_h, pad_w);

    const int zh = pad_h / mc.ae_factor, zw = pad_w / mc.ae_factor;
    const int cls = req.class_id < 0 ? mc.null_class() : req.class_id;

    Rng rng(req.seed);
    Tensor z = Tensor::randn({mc.latent_channels, zh, zw}, rng);

    // the fidelity features depend only on the condition image: build once
    Net<float> fid_net(ctx.ps, mc, /*train=*/false);
    FidelityFeatures<float> fid =
        fidelity_image_encode(fid_net, constant<float>(image_to_tensor(cond)));
    Tensor hint = fid.hint->val;

    std::vector<int> steps = subsample_steps(mc.T, req.steps);
    DiffusionSchedule rs = retime_schedule(ctx.sched, steps);
    for (int k = rs.T - 1; k >= 0; --k) {
        Net<float> net(ctx.ps, mc, /*train=*/false);
        DenoiseInputs<float> din;
        din.t = steps[size_t(rs.T - 1 - k)];  // original timestep index
        din.s = s;
        din.class_id = cls;
        din.hint = constant<float>(hint);
        Tensor eps = denoise(net, constant<float>(z), din)->val;
        Tensor noise = k > 0 ? Tensor::randn(z.shape, rng) : Tensor(z.shape);
        z = ddpm_step(z, eps, k, noise, rs, mc.sigma_mode);
    }

    Image out = tensor_to_image(decode_latent(ctx.ps, mc, z), Range::signed_);
    out = crop(out, 0, 0, out_h, out_w);
    return to_unit(out);
}

}  // namespace osr
