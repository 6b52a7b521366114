#pragma once

#include "autograd.hpp"
#include "image.hpp"
#include "model.hpp"
#include "resample.hpp"

// lightweight x4 pre-upsampler: residual CNN on top of bicubic x4

namespace osr {

namespace detail {

template <class T>
Var<T> plain_resblock(Net<T>& net, const std::string& prefix, Var<T> x) {
    int c = x->val.dim(0);
    Var<T> h = v_group_norm(x, norm_groups(c), net.P(prefix + ".norm1.g"),
                            net.P(prefix + ".norm1.b"), T(kGroupNormEps));
    h = v_conv2d(v_silu(h), net.P(prefix + ".conv1.w"), net.P(prefix + ".conv1.b"));
    h = v_group_norm(h, norm_groups(c), net.P(prefix + ".norm2.g"),
                     net.P(prefix + ".norm2.b"), T(kGroupNormEps));
    h = v_conv2d(v_silu(h), net.P(prefix + ".conv2.w"), net.P(prefix + ".conv2.b"));
    return v_add(x, h);
}

}  // namespace detail

// lr [3,h,w] plus its precomputed bicubic x4 -> [3,4h,4w]
template <class T>
Var<T> mup_forward(Net<T>& net, Var<T> lr, const TensorT<T>& bicubic4) {
    require(lr->val.dim(0) == 3, errc::invalid_argument, "mup_forward: expected 3 channels");
    require(bicubic4.dim(1) == 4 * lr->val.dim(1) && bicubic4.dim(2) == 4 * lr->val.dim(2),
            errc::invalid_argument, "mup_forward: bicubic base must be exactly 4x");
    Var<T> x = v_conv2d(lr, net.P("up.in.w"), net.P("up.in.b"));
    x = detail::plain_resblock(net, "up.rb0", x);
    x = detail::plain_resblock(net, "up.rb1", x);
    x = v_depth_to_space2(v_conv2d(x, net.P("up.s0.w"), net.P("up.s0.b")));
    x = v_depth_to_space2(v_conv2d(x, net.P("up.s1.w"), net.P("up.s1.b")));
    Var<T> r = v_conv2d(x, net.P("up.out.w"), net.P("up.out.b"));
    return v_add(r, constant<T>(bicubic4));
}

// value-level x4 on a signed-range image, output clamped back to range
inline Image mup_apply(ParamStore& ps, const ModelConfig& cfg, const Image& lr) {
    require(lr.range == Range::signed_, errc::invalid_argument,
            "mup_apply: expects signed-range input");
    Image bic = bicubic_resample(lr, 4 * lr.h, 4 * lr.w);
    Net<float> net(ps, cfg, /*train=*/false);
    Tensor out =
        mup_forward(net, constant<float>(image_to_tensor(lr)), image_to_tensor(bic))->val;
    return tensor_to_image(out, lr.range);
}

}  // namespace osr
