#pragma once

#include "autograd.hpp"
#include "model.hpp"

// pixel <-> latent codec (frozen after pre-training, stand-in for a VAE)

namespace osr {

namespace detail {

template <class T>
Var<T> ae_block(Net<T>& net, const std::string& prefix, Var<T> x, int stride) {
    x = v_group_norm(x, norm_groups(x->val.dim(0)), net.P(prefix + ".norm0.g"),
                     net.P(prefix + ".norm0.b"), T(kGroupNormEps));
    x = v_conv2d(v_silu(x), net.P(prefix + ".conv0.w"), net.P(prefix + ".conv0.b"));
    if (stride == 0) x = v_upsample2x(x);  // decode path: nearest 2x before the resize conv
    x = v_group_norm(x, norm_groups(x->val.dim(0)), net.P(prefix + ".norm1.g"),
                     net.P(prefix + ".norm1.b"), T(kGroupNormEps));
    return v_conv2d(v_silu(x), net.P(prefix + ".conv1.w"), net.P(prefix + ".conv1.b"),
                    stride == 0 ? 1 : stride);
}

}  // namespace detail

// [3,H,W] signed-range pixels -> [latent_channels, H/f, W/f]
template <class T>
Var<T> ae_encode(Net<T>& net, Var<T> rgb) {
    require(rgb->val.dim(0) == 3, errc::invalid_argument, "ae_encode: expected 3 channels");
    require(rgb->val.dim(1) % net.cfg.ae_factor == 0 && rgb->val.dim(2) % net.cfg.ae_factor == 0,
            errc::invalid_argument, "ae_encode: size not divisible by downsample factor");
    Var<T> x = v_conv2d(rgb, net.P("ae.enc.in.w"), net.P("ae.enc.in.b"));
    x = detail::ae_block(net, "ae.enc.d0", x, 2);
    x = detail::ae_block(net, "ae.enc.d1", x, 2);
    x = v_group_norm(x, norm_groups(x->val.dim(0)), net.P("ae.enc.out.norm.g"),
                     net.P("ae.enc.out.norm.b"), T(kGroupNormEps));
    x = v_conv2d(v_silu(x), net.P("ae.enc.out.w"), net.P("ae.enc.out.b"));
    if (net.cfg.latent_scale != 1.0f) x = v_scale(x, T(net.cfg.latent_scale));
    return x;
}

// [latent_channels, h, w] -> [3, f*h, f*w], unclamped (training target space)
template <class T>
Var<T> ae_decode_raw(Net<T>& net, Var<T> z) {
    require(z->val.dim(0) == net.cfg.latent_channels, errc::invalid_argument,
            "ae_decode: wrong latent channel count");
    Var<T> x = z;
    if (net.cfg.latent_scale != 1.0f) x = v_scale(x, T(1.0f / net.cfg.latent_scale));
    x = v_conv2d(x, net.P("ae.dec.in.w"), net.P("ae.dec.in.b"));
    x = detail::ae_block(net, "ae.dec.u1", x, 0);
    x = detail::ae_block(net, "ae.dec.u0", x, 0);
    x = v_group_norm(x, norm_groups(x->val.dim(0)), net.P("ae.dec.out.norm.g"),
                     net.P("ae.dec.out.norm.b"), T(kGroupNormEps));
    return v_conv2d(v_silu(x), net.P("ae.dec.out.w"), net.P("ae.dec.out.b"));
}

/*============================================== value-level (inference) ====*/

inline Tensor encode_image(ParamStore& ps, const ModelConfig& cfg, const Tensor& rgb) {
    Net<float> net(ps, cfg, /*train=*/false);
    return ae_encode(net, constant<float>(rgb))->val;
}

// decoded pixels clamped to the signed range
inline Tensor decode_latent(ParamStore& ps, const ModelConfig& cfg, const Tensor& z) {
    Net<float> net(ps, cfg, /*train=*/false);
    Tensor out = ae_decode_raw(net, constant<float>(z))->val;
    for (float& v : out.v) v = std::clamp(v, -1.0f, 1.0f);
    return out;
}

}  // namespace osr
