#pragma once

#include "conditioning.hpp"

// dual-branch conditional denoiser: generation UNet with scale-injected
// resblocks, caption cross-attention and semantics-preserving attention,
// plus a control copy of the encoder fed by the LR image encoder, whose
// features enter the decoder through the scale-modulated refinement convs

namespace osr {

/*========================================== per-forward condition bundle ====*/

template <class T>
struct DenoiseCond {
    std::vector<Var<T>> temb;    // [C_i] per level
    std::vector<Var<T>> gscale;  // per level; empty when the global path is off
    Var<T> cap;                  // caption tokens [L_c, d]
    Var<T> fine;                 // fine tokens [L_f, d]; null when SePR is off
    double s_enc = 0.0;
};

template <class T>
DenoiseCond<T> make_denoise_cond(Net<T>& net, int t, double s, int class_id, bool bare) {
    require(t >= 0 && t < net.cfg.T, errc::invalid_argument, "denoise: t out of range");
    DenoiseCond<T> dc;
    dc.s_enc = encoded_scale(net.cfg, s);
    for (int i = 0; i < net.cfg.levels(); ++i) dc.temb.push_back(timestep_embed(net, i, t));
    if (!bare && net.cfg.use_global_scale)
        for (int i = 0; i < net.cfg.levels(); ++i)
            dc.gscale.push_back(global_scale_embed(net, i, dc.s_enc));
    dc.cap = caption_tokens(net, class_id);
    if (!bare && net.cfg.use_sepr) dc.fine = fine_tokens(net, class_id);
    return dc;
}

/*====================================================== block primitives ====*/

// conv(conv(F) + temb + gscale) in residual form
template <class T>
Var<T> scale_injected_resblock(Net<T>& net, const std::string& prefix, Var<T> x, int level,
                               const DenoiseCond<T>& dc) {
    const int c = x->val.dim(0);
    require(dc.temb[size_t(level)]->val.dim(0) == c, errc::invalid_state,
            "resblock: embed width mismatch at level " + std::to_string(level));
    Var<T> h = v_group_norm(x, norm_groups(c), net.P(prefix + ".norm1.g"),
                            net.P(prefix + ".norm1.b"), T(kGroupNormEps));
    h = v_conv2d(v_silu(h), net.P(prefix + ".conv1.w"), net.P(prefix + ".conv1.b"));
    h = v_add_channel(h, dc.temb[size_t(level)]);
    if (!dc.gscale.empty()) h = v_add_channel(h, dc.gscale[size_t(level)]);
    h = v_group_norm(h, norm_groups(c), net.P(prefix + ".norm2.g"),
                     net.P(prefix + ".norm2.b"), T(kGroupNormEps));
    h = v_conv2d(v_silu(h), net.P(prefix + ".conv2.w"), net.P(prefix + ".conv2.b"));
    return v_add(x, h);
}

// pre-normed cross-attention over semantic tokens, residual
template <class T>
Var<T> caption_xattn(Net<T>& net, const std::string& prefix, Var<T> x, Var<T> tokens) {
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    Var<T> gn = v_group_norm(x, norm_groups(c), net.P(prefix + ".norm.g"),
                             net.P(prefix + ".norm.b"), T(kGroupNormEps));
    Var<T> q = v_matmul(v_tokens(gn), net.P(prefix + ".q.w"));
    Var<T> k = v_matmul(tokens, net.P(prefix + ".k.w"));
    Var<T> v = v_matmul(tokens, net.P(prefix + ".v.w"));
    Var<T> att = v_attention(q, k, v);
    Var<T> out = v_linear(att, net.P(prefix + ".out.w"), net.P(prefix + ".out.b"));
    return v_add(x, v_chw(out, c, h, w));
}

// semantics-preserving attention: bare feature tokens as queries, fine
// tokens as keys/values, zero-initialized output projection (identity at init)
template <class T>
Var<T> sepr_attention(Net<T>& net, const std::string& prefix, Var<T> x, Var<T> fine) {
    require(fine != nullptr, errc::invalid_argument, "sepr: missing fine semantic features");
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    Var<T> q = v_matmul(v_tokens(x), net.P(prefix + ".q.w"));
    Var<T> k = v_matmul(fine, net.P(prefix + ".k.w"));
    Var<T> v = v_matmul(fine, net.P(prefix + ".v.w"));
    Var<T> att = v_attention(q, k, v);
    Var<T> out = v_linear(att, net.P(prefix + ".out.w"), net.P(prefix + ".out.b"));
    return v_add(x, v_chw(out, c, h, w));
}

/*================================================== fidelity image encoder ====*/

template <class T>
struct FidelityFeatures {
    std::vector<Var<T>> pyramid;  // F_e at 1/2, 1/4, 1/8 resolution (LQA heads)
    Var<T> hint;                  // latent-resolution feature for the control copy
};

// trainable encoder over the pre-upsampled LR image (HR resolution, signed)
template <class T>
FidelityFeatures<T> fidelity_image_encode(Net<T>& net, Var<T> rgb) {
    require(rgb->val.dim(0) == 3, errc::invalid_argument,
            "image encoder: expected 3 input channels");
    require(rgb->val.dim(1) % 8 == 0 && rgb->val.dim(2) % 8 == 0, errc::invalid_argument,
            "image encoder: input size must be divisible by 8");
    FidelityFeatures<T> f;
    Var<T> f1 = v_conv2d(rgb, net.P("imgenc.in.w"), net.P("imgenc.in.b"), 2);
    Var<T> h = v_group_norm(f1, norm_groups(f1->val.dim(0)), net.P("imgenc.s1.norm.g"),
                            net.P("imgenc.s1.norm.b"), T(kGroupNormEps));
    Var<T> f2 = v_conv2d(v_silu(h), net.P("imgenc.s1.w"), net.P("imgenc.s1.b"), 2);
    h = v_group_norm(f2, norm_groups(f2->val.dim(0)), net.P("imgenc.s2.norm.g"),
                     net.P("imgenc.s2.norm.b"), T(kGroupNormEps));
    Var<T> f3 = v_conv2d(v_silu(h), net.P("imgenc.s2.w"), net.P("imgenc.s2.b"), 2);
    f.pyramid = {f1, f2, f3};
    h = v_group_norm(f2, norm_groups(f2->val.dim(0)), net.P("imgenc.proj.norm.g"),
                     net.P("imgenc.proj.norm.b"), T(kGroupNormEps));
    f.hint = v_conv2d(v_silu(h), net.P("imgenc.proj.w"), net.P("imgenc.proj.b"));
    return f;
}

// per-level RGB heads supervising the pyramid (1x1 convs)
template <class T>
Var<T> to_rgb(Net<T>& net, int n, Var<T> feature) {
    require(n >= 1 && n <= 3, errc::invalid_argument, "to_rgb: level out of range");
    std::string p = "torgb." + std::to_string(n);
    return v_conv2d(feature, net.P(p + ".w"), net.P(p + ".b"), 1, 0);
}

/*============================================================== denoiser ====*/

template <class T>
struct DenoiseInputs {
    int t = 0;
    double s = 1.0;
    int class_id = 0;
    Var<T> hint;        // latent-resolution LR feature; null -> no control branch
    bool bare = false;  // generation trunk only (initialization baseline)
};

// control copy of the encoder path; returns per-level injection maps
template <class T>
std::vector<Var<T>> control_inject(Net<T>& net, Var<T> z_t, Var<T> hint,
                                   const DenoiseCond<T>& dc) {
    require(hint->val.dim(1) == z_t->val.dim(1) && hint->val.dim(2) == z_t->val.dim(2),
            errc::invalid_argument, "denoise: hint grid mismatch at level 0");
    Var<T> c = v_add(v_conv2d(z_t, net.P("ctrl.in.w"), net.P("ctrl.in.b")),
                     v_conv2d(hint, net.P("ctrl.hint.w"), net.P("ctrl.hint.b")));
    Var<T> ce0 = scale_injected_resblock(net, "ctrl.enc0.rb", c, 0, dc);
    Var<T> ce1 = v_conv2d(ce0, net.P("ctrl.down0.w"), net.P("ctrl.down0.b"), 2);
    ce1 = scale_injected_resblock(net, "ctrl.enc1.rb", ce1, 1, dc);
    if (net.cfg.has_attn(1)) {
        ce1 = caption_xattn(net, "ctrl.enc1.xattn", ce1, dc.cap);
        if (dc.fine) ce1 = sepr_attention(net, "sepr.c.enc1", ce1, dc.fine);
    }
    Var<T> cm = v_conv2d(ce1, net.P("ctrl.down1.w"), net.P("ctrl.down1.b"), 2);
    cm = scale_injected_resblock(net, "ctrl.mid.rb", cm, 2, dc);
    if (net.cfg.has_attn(2)) {
        cm = caption_xattn(net, "ctrl.mid.xattn", cm, dc.cap);
        if (dc.fine) cm = sepr_attention(net, "sepr.c.mid", cm, dc.fine);
    }
    return {refine_inject(net, 0, ce0, dc.s_enc), refine_inject(net, 1, ce1, dc.s_enc),
            refine_inject(net, 2, cm, dc.s_enc)};
}

// eps prediction with z_t's shape
template <class T>
Var<T> denoise(Net<T>& net, Var<T> z_t, const DenoiseInputs<T>& in) {
    const ModelConfig& cfg = net.cfg;
    require(cfg.levels() == 3, errc::invalid_argument, "denoise: built for 3 UNet levels");
    require(z_t->val.shape.size() == 3 && z_t->val.dim(0) == cfg.latent_channels,
            errc::invalid_argument, "denoise: latent channel mismatch at level 0");
    require(z_t->val.dim(1) % 4 == 0 && z_t->val.dim(2) % 4 == 0 && z_t->val.dim(1) >= 4 &&
                z_t->val.dim(2) >= 4,
            errc::invalid_argument, "denoise: latent grid not divisible at level 2");

    DenoiseCond<T> dc = make_denoise_cond(net, in.t, in.s, in.class_id, in.bare);
    std::vector<Var<T>> inj;
    if (in.hint && !in.bare) inj = control_inject(net, z_t, in.hint, dc);

    Var<T> x = v_conv2d(z_t, net.P("unet.in.w"), net.P("unet.in.b"));
    Var<T> e0 = scale_injected_resblock(net, "unet.enc0.rb", x, 0, dc);
    Var<T> e1 = v_conv2d(e0, net.P("unet.down0.w"), net.P("unet.down0.b"), 2);
    e1 = scale_injected_resblock(net, "unet.enc1.rb", e1, 1, dc);
    if (cfg.has_attn(1)) {
        e1 = caption_xattn(net, "unet.enc1.xattn", e1, dc.cap);
        if (dc.fine) e1 = sepr_attention(net, "sepr.g.enc1", e1, dc.fine);
    }
    Var<T> m = v_conv2d(e1, net.P("unet.down1.w"), net.P("unet.down1.b"), 2);
    m = scale_injected_resblock(net, "unet.mid.rb", m, 2, dc);
    if (cfg.has_attn(2)) {
        m = caption_xattn(net, "unet.mid.xattn", m, dc.cap);
        if (dc.fine) m = sepr_attention(net, "sepr.g.mid", m, dc.fine);
    }
    if (!inj.empty()) m = v_add(m, inj[2]);

    Var<T> u1 = v_conv2d(v_upsample2x(m), net.P("unet.up1.w"), net.P("unet.up1.b"));
    Var<T> skip1 = inj.empty() ? e1 : v_add(e1, inj[1]);
    Var<T> d1 = v_add(u1, skip1);
    d1 = scale_injected_resblock(net, "unet.dec1.rb", d1, 1, dc);
    if (cfg.has_attn(1)) {
        d1 = caption_xattn(net, "unet.dec1.xattn", d1, dc.cap);
        if (dc.fine) d1 = sepr_attention(net, "sepr.g.dec1", d1, dc.fine);
    }
    Var<T> u0 = v_conv2d(v_upsample2x(d1), net.P("unet.up0.w"), net.P("unet.up0.b"));
    Var<T> skip0 = inj.empty() ? e0 : v_add(e0, inj[0]);
    Var<T> d0 = v_add(u0, skip0);
    d0 = scale_injected_resblock(net, "unet.dec0.rb", d0, 0, dc);

    Var<T> out = v_group_norm(d0, norm_groups(d0->val.dim(0)), net.P("unet.out.norm.g"),
                              net.P("unet.out.norm.b"), T(kGroupNormEps));
    return v_conv2d(v_silu(out), net.P("unet.out.w"), net.P("unet.out.b"));
}

}  // namespace osr
